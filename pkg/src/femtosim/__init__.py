"""Two-tier femtocell/macrocell interference, outage and capacity toolkit."""

__version__ = "0.1.0"
