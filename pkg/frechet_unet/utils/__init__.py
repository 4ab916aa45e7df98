"""Utility functions for Fréchet U-Net."""
