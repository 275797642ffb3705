# Batch experiment runner: JSON configs in, CSV reports and a run manifest out
__version__ = "0.1.0"
