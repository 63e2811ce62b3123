"""
Policy consistency verifier
Constraint-rule checks of security policies and workflows over finite event domains
"""

__version__ = "0.1.0"
