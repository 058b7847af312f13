"""Traces of modular functions over binary quadratic form classes.

Computes CM-value traces, closed-geodesic cycle integrals, and convergent
cusp-to-cusp cycle integrals of the cusp-corrected Faber basis functions,
and independently reproduces the same numbers from Kloosterman-sum /
Bessel-function series.
"""

__version__ = "0.1.0"
