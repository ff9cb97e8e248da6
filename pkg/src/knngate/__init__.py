"""k-NN retrieval gating laboratory."""
__version__ = "0.1.0"
