"""Transparent video generation: conditioned RGBA image and prompt to an RGBA video."""
