"""Pointwise Kirchhoff plate operators.

All operators are linear in the field derivatives, so every function here
accepts either one derivative set or a trailing axis of basis functions.
Sign convention: loads, deflections and gaps are positive downwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bfs
from .mesh import SIDES, StructuredMesh, side_frame


@dataclass(frozen=True)
class MaterialParams:
    E: float = 100.0
    nu: float = 0.5
    t: float = 0.1

    def __post_init__(self):
        if not (self.E > 0 and self.t > 0):
            raise ValueError(f"E and t must be positive, got E={self.E}, t={self.t}")
        if not (0.0 <= self.nu < 1.0):
            raise ValueError(f"Poisson ratio must satisfy 0 <= nu < 1, got {self.nu}")

    @property
    def D(self) -> float:
        return plate_modulus(self.E, self.nu, self.t)

    @property
    def D_std(self) -> float:
        """Classical flexural rigidity E t^3 / (12 (1 - nu^2))."""
        return self.D / (1.0 - self.nu)


def plate_modulus(E: float, nu: float, t: float) -> float:
    if not (E > 0 and t > 0):
        raise ValueError(f"E and t must be positive, got E={E}, t={t}")
    if not (0.0 <= nu < 1.0):
        raise ValueError(f"Poisson ratio must satisfy 0 <= nu < 1, got {nu}")
    return E * t**3 / (12.0 * (1.0 + nu))


def curvature(vxx, vxy, vyy) -> np.ndarray:
    """Hessian as a (2, 2, ...) array."""
    return np.array([[vxx, vxy], [vxy, vyy]])


def moment(kappa: np.ndarray, params: MaterialParams, lap=None) -> np.ndarray:
    """M = D (kappa + nu/(1-nu) * lap * I), returned with the same shape as kappa."""
    kappa = np.asarray(kappa, dtype=float)
    if lap is None:
        lap = kappa[0, 0] + kappa[1, 1]
    c = params.nu / (1.0 - params.nu)
    M = params.D * kappa.copy()
    M[0, 0] = M[0, 0] + params.D * c * lap
    M[1, 1] = M[1, 1] + params.D * c * lap
    return M


def moment_from_derivs(d: np.ndarray, params: MaterialParams) -> np.ndarray:
    """Moment tensor from derivative rows ordered as ``bfs.DERIVS`` (axis 0)."""
    return moment(curvature(d[bfs.DXX], d[bfs.DXY], d[bfs.DYY]), params)


def moment_nt(d: np.ndarray, n, t, params: MaterialParams):
    M = moment_from_derivs(d, params)
    return np.einsum("i...,ij...,j...->...", np.asarray(n, float), M, np.asarray(t, float))


def moment_nn(d: np.ndarray, n, params: MaterialParams):
    M = moment_from_derivs(d, params)
    n = np.asarray(n, float)
    return np.einsum("i...,ij...,j...->...", n, M, n)


def third_derivative_tensor(d3) -> np.ndarray:
    """Symmetric (2, 2, 2, ...) tensor from (u_xxx, u_xxy, u_xyy, u_yyy)."""
    xxx, xxy, xyy, yyy = d3
    return np.array([[[xxx, xxy], [xxy, xyy]],
                     [[xxy, xyy], [xyy, yyy]]])


def kirchhoff_shear(d3, n, t, params: MaterialParams):
    """Kirchhoff shear T = n . Div M + d/dt (n . M . t) on a straight edge.

    ``d3`` holds the third derivatives (u_xxx, u_xxy, u_xyy, u_yyy).  With the
    constitutive law this is D/(1-nu) * d_n(lap u) + D * u_{ntt}.
    """
    G = third_derivative_tensor(np.asarray(d3, dtype=float))
    n = np.asarray(n, float)
    t = np.asarray(t, float)
    grad_lap = G[:, 0, 0] + G[:, 1, 1]
    dn_lap = np.einsum("i...,i...->...", n, grad_lap)
    u_ntt = np.einsum("i...,j...,k...,ijk...->...", n, t, t, G)
    return params.D / (1.0 - params.nu) * dn_lap + params.D * u_ntt


def shear_from_derivs(d: np.ndarray, n, t, params: MaterialParams):
    return kirchhoff_shear(d[[bfs.DXXX, bfs.DXXY, bfs.DXYY, bfs.DYYY]], n, t, params)


# counterclockwise traversal: side arriving at corner c, side leaving it
CORNER_SIDES = (("left", "bottom"), ("bottom", "right"), ("right", "top"), ("top", "left"))
CORNER_LOCAL = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))


def corner_jump_coefficients(mesh: StructuredMesh, params: MaterialParams, corner: int) -> np.ndarray:
    """Linear functional (16 coefficients on the corner element) giving M_nt(in) - M_nt(out)."""
    B = bfs.eval_basis(mesh.hx, mesh.hy, *CORNER_LOCAL[corner])
    side_in, side_out = CORNER_SIDES[corner]
    n_in, t_in = side_frame(side_in)
    n_out, t_out = side_frame(side_out)
    return moment_nt(B, n_in, t_in, params) - moment_nt(B, n_out, t_out, params)


def corner_moment_jump(mesh: StructuredMesh, dofs: np.ndarray, corner: int,
                       params: MaterialParams) -> float:
    """Twisting-moment jump at a domain corner.

    Corners are numbered counterclockwise from the origin.  The result is
    M_nt on the side arriving at the corner minus M_nt on the side leaving
    it, both in counterclockwise order and with t = (n2, -n1).
    """
    if corner not in range(4):
        raise ValueError(f"corner must be 0..3, got {corner}")
    e = mesh.corner_elements[corner]
    coef = np.asarray(dofs)[bfs.element_dofs(mesh, [e])[0]]
    return float(corner_jump_coefficients(mesh, params, corner) @ coef)


__all__ = [
    "MaterialParams", "plate_modulus", "curvature", "moment", "moment_from_derivs",
    "moment_nt", "moment_nn", "kirchhoff_shear", "shear_from_derivs",
    "corner_moment_jump", "corner_jump_coefficients", "SIDES",
]
