"""
Settings and experiment configuration for the optimization toolkit.
"""
