# Test package: pytest puts the repository root on sys.path through it
