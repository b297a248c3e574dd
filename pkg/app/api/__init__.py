"""
Command-line layer: router, dependencies, dan subcommands.
"""
