"""Time-domain sound-soft scattering in 2D and star-shape reconstruction."""

__version__ = "0.1.0"
