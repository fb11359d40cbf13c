"""Monte Carlo laboratory for exclusion processes with second-class and colored particles."""

__version__ = "0.1.0"
