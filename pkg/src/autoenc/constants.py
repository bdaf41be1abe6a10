"""Constants for the autoencoders."""

# Spatial downscale between pixels and latents (three stride-2 levels).
LATENT_DOWNSCALE = 8

# RGB inpainting of non-opaque pixels.
SMOOTH_MAX_ITERS = 200
SMOOTH_TOLERANCE = 1e-4
TRANSPARENT_FILL = 0.5

# Posterior means sampled to measure the latent scale after stage 0.
LATENT_SCALE_SAMPLES = 256
