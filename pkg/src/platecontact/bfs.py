"""Bogner-Fox-Schmit bicubic Hermite element.

Each node carries four degrees of freedom ``(u, u_x, u_y, u_xy)``.  Local
shape function ``4*a + k`` belongs to element corner ``a`` (counterclockwise
from the lower-left corner) and DOF type ``k``.  Derivative-type functions are
scaled by the element sizes so nodal values carry physical derivative units.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .mesh import OutOfDomainError, StructuredMesh

# partial derivative orders (in x, in y), in the row order returned by eval_basis
DERIVS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3))
DERIV_INDEX = {d: i for i, d in enumerate(DERIVS)}
V, DX, DY, DXX, DXY, DYY, DXXX, DXXY, DXYY, DYYY = range(10)

# reference corner position of local node a
CORNER_POS = ((0, 0), (1, 0), (1, 1), (0, 1))
# for DOF type k: derivative order carried in x, in y
DOF_TYPES = ((0, 0), (1, 0), (0, 1), (1, 1))


def hermite_1d(s) -> np.ndarray:
    """Cubic Hermite factors on [0, 1] and their s-derivatives.

    Returns shape (4, 4, ...): [derivative order, function, point], functions
    ordered H00, H01, H10, H11 (value at 0, slope at 0, value at 1, slope at 1).
    """
    s = np.asarray(s, dtype=float)
    one, zero = np.ones_like(s), np.zeros_like(s)
    return np.array([
        [1 - 3 * s**2 + 2 * s**3, s - 2 * s**2 + s**3, 3 * s**2 - 2 * s**3, -s**2 + s**3],
        [-6 * s + 6 * s**2, 1 - 4 * s + 3 * s**2, 6 * s - 6 * s**2, -2 * s + 3 * s**2],
        [-6 + 12 * s, -4 + 6 * s, 6 - 12 * s, -2 + 6 * s],
        [12 * one, 6 * one, -12 * one, 6 * one],
    ]) + zero


def _physical_factors(s, h: float) -> np.ndarray:
    """Hermite factors in physical units, shape (4 deriv orders, 2 corners, 2 dof kinds, ...)."""
    H = hermite_1d(s)
    order = np.arange(4).reshape(4, *([1] * (H.ndim - 1)))
    H = H / h**order
    # corner 0 -> (H00, H01), corner 1 -> (H10, H11); slope factors carry h
    return np.stack([np.stack([H[:, 0], h * H[:, 1]], axis=1),
                     np.stack([H[:, 2], h * H[:, 3]], axis=1)], axis=1)


def eval_basis(hx: float, hy: float, xi, eta) -> np.ndarray:
    """Shape functions and physical derivatives through third order.

    ``xi``/``eta`` are reference coordinates in [0, 1] (scalars or 1-D arrays
    of equal length).  Returns shape (n_points, 10, 16) with rows ordered as
    ``DERIVS``; scalar input gives shape (10, 16).
    """
    scalar = np.ndim(xi) == 0
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    Fx = _physical_factors(xi, hx)     # (4, 2, 2, n)
    Fy = _physical_factors(eta, hy)
    out = np.empty((len(xi), len(DERIVS), 16))
    for r, (dx, dy) in enumerate(DERIVS):
        for a, (cx, cy) in enumerate(CORNER_POS):
            for k, (kx, ky) in enumerate(DOF_TYPES):
                out[:, r, 4 * a + k] = Fx[dx, cx, kx] * Fy[dy, cy, ky]
    return out[0] if scalar else out


def element_dofs(mesh: StructuredMesh, elements=None) -> np.ndarray:
    """Global DOF indices (n, 16) for the given elements (all by default)."""
    conn = mesh.elements if elements is None else mesh.elements[np.asarray(elements)]
    return (4 * conn[:, :, None] + np.arange(4)).reshape(len(conn), 16)


def interpolant(mesh: StructuredMesh, func) -> np.ndarray:
    """Nodal DOF vector of ``func``.

    ``func(x, y)`` must return the tuple ``(u, u_x, u_y, u_xy)`` evaluated on
    arrays of node coordinates.
    """
    xy = mesh.nodes
    vals = func(xy[:, 0], xy[:, 1])
    dof = np.empty((mesh.n_nodes, 4))
    for k in range(4):
        dof[:, k] = np.broadcast_to(vals[k], (mesh.n_nodes,))
    return dof.ravel()


def evaluate(mesh: StructuredMesh, dofs: np.ndarray, elements, local) -> np.ndarray:
    """Field derivatives at local points of given elements, shape (n, 10)."""
    elements = np.asarray(elements)
    local = np.asarray(local, dtype=float).reshape(-1, 2)
    B = eval_basis(mesh.hx, mesh.hy, local[:, 0], local[:, 1])
    coef = np.asarray(dofs)[element_dofs(mesh, elements)]
    return np.einsum("nrk,nk->nr", B, coef)


def locate_points(mesh: StructuredMesh, points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``mesh.locate``: element ids and local coordinates."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    h = np.array([mesh.hx, mesh.hy])
    L = max(mesh.extents)
    lo, hi = np.array(mesh.origin), np.array(mesh.origin) + np.array(mesh.extents)
    if np.any(pts < lo - 1e-12 * L) or np.any(pts > hi + 1e-12 * L):
        raise OutOfDomainError("some points lie outside the mesh domain")
    t = (pts - lo) / h
    ij = np.clip(np.ceil(t).astype(int) - 1, 0, [mesh.nx - 1, mesh.ny - 1])
    local = np.clip(t - ij, 0.0, 1.0)
    return ij[:, 1] * mesh.nx + ij[:, 0], local


def evaluate_at(mesh: StructuredMesh, dofs: np.ndarray, points) -> np.ndarray:
    """Field derivatives (n, 10) at physical points."""
    e, local = locate_points(mesh, points)
    return evaluate(mesh, dofs, e, local)


class PointValue(NamedTuple):
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def interpolate(mesh: StructuredMesh, dofs: np.ndarray, point, element: int | None = None) -> PointValue:
    """Evaluate a global BFS field at a physical point.

    The containing element is chosen by ``mesh.locate`` unless ``element`` is
    given (useful for checking continuity across interfaces).
    """
    if element is None:
        element, xi, eta = mesh.locate(point)
    else:
        org = mesh.element_origin(element)
        xi = (point[0] - org[0]) / mesh.hx
        eta = (point[1] - org[1]) / mesh.hy
    d = evaluate(mesh, dofs, [element], [[xi, eta]])[0]
    return PointValue(d[V], d[[DX, DY]], np.array([[d[DXX], d[DXY]], [d[DXY], d[DYY]]]))
