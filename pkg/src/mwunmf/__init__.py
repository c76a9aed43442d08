"""Concurrent MWU for nonnegative matrix factorization."""
