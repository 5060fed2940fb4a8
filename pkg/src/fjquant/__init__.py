"""Faddeev-Jackiw symplectic quantization with exact rational-function algebra."""

__version__ = "0.1.0"
