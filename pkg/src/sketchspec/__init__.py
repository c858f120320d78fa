"""Randomized sketching for spectral-norm linear algebra."""
