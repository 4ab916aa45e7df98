"""
Fréchet U-Net

Estimates the sample Fréchet mean of a set of same-size simple graphs with a small
convolutional network applied to the sample mean adjacency matrix, and evaluates the
estimate against exact baselines.
"""

__version__ = "1.0.0"
