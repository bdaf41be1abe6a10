"""Latent video diffusion backbone: schedule, U-Net, objective, sampler and text encoder."""
