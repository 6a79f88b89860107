"""Deterministic quadrature helpers used by the dispersion-force integrals.

Everything here is fixed-node Gauss quadrature composed over panels, so
results are bit-reproducible across runs and independent of evaluation
order.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ConvergenceError

__all__ = ["gauss_panel", "integrate_semi_infinite", "gauss_laguerre", "gauss_legendre"]


@lru_cache(maxsize=8)
def gauss_legendre(n: int):
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w



@lru_cache(maxsize=8)
def gauss_laguerre(n: int):
    """Nodes and weights for integrals of exp(-t) f(t) on (0, inf)."""
    return np.polynomial.laguerre.laggauss(n)


def gauss_panel(f, a: float, b: float, order: int = 32) -> float:
    """Gauss-Legendre integral of f over [a, b]; f must accept arrays."""
    x, w = gauss_legendre(order)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.dot(w, f(mid + half * x)))


def integrate_semi_infinite(f, scale: float, rel_tol: float = 1e-10,
                            max_panels: int = 96, order: int = 32) -> float:
    """Integrate f over (0, inf) with octave panels [0,s], [s,2s], [2s,4s], ...

    scale sets the first panel width and should be below the smallest
    feature of the integrand.  Stops once two consecutive panels each
    contribute less than rel_tol of the running total; raises if the
    panel budget is exhausted first.
    """
    if not scale > 0:
        raise ValueError("panel scale must be positive")
    total = 0.0
    negligible = 0
    a, b = 0.0, scale
    for _ in range(max_panels):
        part = gauss_panel(f, a, b, order)
        total += part
        if abs(part) <= rel_tol * max(abs(total), 1e-300):
            negligible += 1
            if negligible >= 2:
                return total
        else:
            negligible = 0
        a, b = b, 2.0 * b
    raise ConvergenceError(
        f"semi-infinite quadrature did not converge within {max_panels} panels")
