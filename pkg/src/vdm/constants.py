"""Constants for the diffusion backbone."""

LINEAR_BETA_START = 1e-4
LINEAR_BETA_END = 2e-2

# Offset of the cosine schedule and the cap on its derived betas.
COSINE_OFFSET = 0.008
COSINE_MAX_BETA = 0.999

TEXT_SLOTS = 256

# Time-embedding width relative to the base channel count.
TIME_EMBED_MULT = 2
