"""Shared training loop, seeded streams and stage objectives."""
