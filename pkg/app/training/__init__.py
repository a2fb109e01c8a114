"""Trainers for the U-Net denoiser and the smoke-scale GAN objectives."""
