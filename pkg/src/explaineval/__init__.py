"""Context-aware recommendation explanations: study protocol and evaluation."""

__version__ = "0.1.0"
