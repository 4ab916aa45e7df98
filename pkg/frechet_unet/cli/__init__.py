"""CLI for Fréchet U-Net."""
