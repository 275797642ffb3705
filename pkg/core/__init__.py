# Shared settings, logging, errors and ensemble plumbing
