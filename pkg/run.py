#!/usr/bin/env python3
"""
Run the SHAPCA command line
Usage: python run.py <synth|fit|explain-global|explain-local|consistency|render> [--config run.toml] [--out DIR]
"""
import sys

from shapca.main import main

if __name__ == "__main__":
    sys.exit(main())
