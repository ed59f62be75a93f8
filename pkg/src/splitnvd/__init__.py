"""Split NVD parallel space-time codes for selective-fading MIMO channels."""

__version__ = "0.1.0"
