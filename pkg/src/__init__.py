# Discrete cmc surfaces from orthogonal ring patterns
__version__ = "1.0.0"
