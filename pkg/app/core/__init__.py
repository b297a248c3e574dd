"""
Core package: configuration, errors, logging.
"""
