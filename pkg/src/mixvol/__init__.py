"""Mixed volumes of convex bodies via capacity of the Minkowski polynomial."""

__version__ = "0.1.0"
