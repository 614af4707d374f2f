"""
SLASH: programação probabilística profunda com predicados neuro-probabilísticos
"""

__version__ = "1.0.0"
