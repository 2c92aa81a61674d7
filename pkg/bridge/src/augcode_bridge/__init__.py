"""Reference external scorer speaking the augcode scoring protocol."""

__version__ = "0.1.0"
