"""Coalescing/annihilating Brownian motions and their Pfaffian structure."""
