#!/usr/bin/env python3
"""
Fréchet U-Net CLI

Generate datasets, train the network variants, evaluate them against the naive
baseline and verify the estimators on tiny graphs.
"""

import sys

from frechet_unet.cli.commands import main


if __name__ == '__main__':
    sys.exit(main())
