"""
Protoscript: aligned character prototypes untuk analisis script types
dan subtypes dari manuscript lines.
"""

__version__ = "1.0.0"
