"""Human-aware robot action planning and closed-loop simulation."""

__version__ = "0.1.0"
