"""cxhyp: complex hyperbolic ball geometry, relative Poincaré series and
their large-k asymptotics."""

__version__ = "0.4.0"
