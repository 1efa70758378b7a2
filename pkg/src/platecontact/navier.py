"""Navier double-sine series for the simply supported rectangular plate.

Used as an analytic oracle; deflections are positive in the load direction.
"""

from __future__ import annotations

import numpy as np


def _modes(terms: int, odd_only: bool):
    k = np.arange(1, 2 * terms, 2) if odd_only else np.arange(1, terms + 1)
    return k[:, None], k[None, :]


def navier_deflection(load: str = "uniform", a: float = 1.0, D_std: float = 1.0,
                      nu: float | None = None, terms: int = 100, point=None,
                      load_at=None, magnitude: float = 1.0, b: float | None = None) -> float:
    """Deflection of a simply supported a x b plate from the Navier series.

    ``load`` is ``"uniform"`` (pressure ``magnitude``) or ``"point"`` (force
    ``magnitude`` at ``load_at``, the centre by default).  ``point`` is where
    the deflection is evaluated (the centre by default).  ``terms`` counts
    modes per direction (odd modes only for the uniform load).  ``nu`` does
    not enter: for simple supports the deflection depends on D_std alone.
    """
    if terms < 50:
        raise ValueError("use at least 50 terms per direction")
    b = a if b is None else b
    x, y = point if point is not None else (a / 2, b / 2)
    if load == "uniform":
        m, n = _modes(terms, True)
        coef = 16.0 * magnitude / (np.pi**6 * D_std * m * n)
    elif load == "point":
        xi, eta = load_at if load_at is not None else (a / 2, b / 2)
        m, n = _modes(terms, False)
        coef = (4.0 * magnitude / (np.pi**4 * a * b * D_std)
                * np.sin(m * np.pi * xi / a) * np.sin(n * np.pi * eta / b))
    else:
        raise ValueError(f"unknown load type {load!r}")
    denom = ((m / a) ** 2 + (n / b) ** 2) ** 2
    shape = np.sin(m * np.pi * x / a) * np.sin(n * np.pi * y / b)
    return float(np.sum(coef * shape / denom))
