"""Models for Fréchet U-Net."""
