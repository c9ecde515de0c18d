"""Face detection in L*a*b* chroma and Haar-DWT face recognition."""

__version__ = "0.1.0"
