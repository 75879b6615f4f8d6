"""Prescribed-area plane drawings and the reductions around them."""
__version__ = "0.1.0"
