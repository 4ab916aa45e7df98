"""Core numerical functionality for Fréchet U-Net."""
