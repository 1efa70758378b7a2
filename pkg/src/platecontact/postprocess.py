"""Boundary shear profiles, error norms and refinement sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bfs
from .assembly import PenaltyRule, gauss_rule_2d
from .mesh import BoundarySpec, StructuredMesh, refine_uniform, side_frame
from .plate import MaterialParams, shear_from_derivs


@dataclass
class ShearProfile:
    """One sample per boundary edge midpoint, ordered counterclockwise from the origin."""

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    T: np.ndarray
    lam: np.ndarray
    active: np.ndarray
    side: np.ndarray

    def __len__(self):
        return len(self.s)

    def argmax_abs(self) -> int:
        return int(np.argmax(np.abs(self.T)))


def extract_shear_profile(mesh: StructuredMesh, params: MaterialParams, u_h: np.ndarray,
                          spec: BoundarySpec | None = None,
                          penalty: PenaltyRule | None = None) -> ShearProfile:
    """Kirchhoff shear at every boundary-edge midpoint, taken from the adjacent element.

    On Signorini sides the multiplier -gamma [u + T/gamma - g]_+ is evaluated at
    the same point; elsewhere it is reported as 0.
    """
    edges = mesh.boundary_edges
    mid = 0.5 * (edges.start + edges.end)
    org = mesh.element_origin(edges.element)
    local = (mid - org) / np.array([mesh.hx, mesh.hy])
    d = bfs.evaluate(mesh, u_h, edges.element, local)         # (n, 10)
    frames = [side_frame(sd) for sd in edges.side]
    n = np.array([f[0] for f in frames]).reshape(-1, 2)
    t = np.array([f[1] for f in frames]).reshape(-1, 2)
    T = shear_from_derivs(d.T, n.T, t.T, params)
    lam = np.zeros(len(edges))
    if spec is not None:
        penalty = penalty or PenaltyRule.for_plate(params)
        sig = np.array([spec[sd].kind == "signorini" for sd in edges.side], dtype=bool)
        g = np.array([spec[sd].g for sd in edges.side])
        gamma = penalty.gamma(edges.length)
        s = d[:, bfs.V] + T / gamma - g
        lam = np.where(sig, -gamma * np.maximum(s, 0.0), 0.0)
    arc = np.concatenate([[0.0], np.cumsum(edges.length)[:-1]]) + 0.5 * edges.length
    return ShearProfile(arc, mid[:, 0], mid[:, 1], np.asarray(T, float), lam, lam < 0.0,
                        edges.side.copy())


def nearest_boundary_arc(mesh: StructuredMesh, point) -> np.ndarray:
    """Arc-length coordinates of the boundary point(s) closest to ``point``."""
    x, y = point
    (x0, y0), (Lx, Ly) = mesh.origin, mesh.extents
    cand = {  # side: (distance, arc coordinate)
        "bottom": (y - y0, x - x0),
        "right": (x0 + Lx - x, Lx + (y - y0)),
        "top": (y0 + Ly - y, Lx + Ly + (x0 + Lx - x)),
        "left": (x - x0, 2 * Lx + Ly + (y0 + Ly - y)),
    }
    dmin = min(v[0] for v in cand.values())
    return np.array([v[1] for v in cand.values() if math.isclose(v[0], dmin, abs_tol=1e-12)])


def arc_distance(s1, s2, perimeter: float):
    d = np.abs(np.asarray(s1) - np.asarray(s2)) % perimeter
    return np.minimum(d, perimeter - d)


def reflect_dofs(mesh: StructuredMesh, u: np.ndarray, axis: str) -> np.ndarray:
    """Nodal DOFs of the field reflected by ``axis`` in {"x", "y", "diag"}.

    ``"x"`` maps x -> Lx - x, ``"y"`` maps y -> Ly - y, ``"diag"`` swaps x and y
    (square meshes only).
    """
    U = u.reshape(mesh.ny + 1, mesh.nx + 1, 4)
    if axis == "x":
        R = U[:, ::-1].copy()
        R[..., 1] *= -1
        R[..., 3] *= -1
    elif axis == "y":
        R = U[::-1].copy()
        R[..., 2] *= -1
        R[..., 3] *= -1
    elif axis == "diag":
        if mesh.nx != mesh.ny or mesh.hx != mesh.hy:
            raise ValueError("diagonal reflection needs a square mesh")
        R = U.transpose(1, 0, 2)[..., [0, 2, 1, 3]].copy()
    else:
        raise ValueError(f"unknown reflection {axis!r}")
    return R.ravel()


def error_norms(mesh: StructuredMesh, params: MaterialParams, u_h: np.ndarray, exact,
                order: int = 6) -> tuple[float, float]:
    """L2 and energy-norm errors against ``exact(x, y) -> (u, u_xx, u_xy, u_yy)``.

    The energy norm is sqrt(integral of M(e) : kappa(e)).
    """
    pts, w = gauss_rule_2d(order)
    B = bfs.eval_basis(mesh.hx, mesh.hy, pts[:, 0], pts[:, 1])[:, [bfs.V, bfs.DXX, bfs.DXY, bfs.DYY]]
    coef = u_h[bfs.element_dofs(mesh)]                          # (ne, 16)
    vals = np.einsum("qrk,ek->req", B, coef)                    # (4, ne, nq)
    org = mesh.element_origin(np.arange(mesh.n_elements))
    X = org[:, 0, None] + pts[None, :, 0] * mesh.hx
    Y = org[:, 1, None] + pts[None, :, 1] * mesh.hy
    ex = np.array([np.broadcast_to(v, X.shape) for v in exact(X, Y)])
    e = vals - ex
    wq = w * mesh.hx * mesh.hy
    l2 = math.sqrt(np.sum(wq * e[0] ** 2))
    c = params.nu / (1.0 - params.nu)
    lap = e[1] + e[3]
    energy = params.D * (e[1] ** 2 + 2 * e[2] ** 2 + e[3] ** 2 + c * lap**2)
    return l2, math.sqrt(np.sum(wq * energy))


def sinsin_solution(a: float = 1.0):
    """u = sin(pi x/a) sin(pi y/a) with the derivatives used by the solvers."""
    k = np.pi / a

    def dofs(x, y):
        sx, sy, cx, cy = np.sin(k * x), np.sin(k * y), np.cos(k * x), np.cos(k * y)
        return sx * sy, k * cx * sy, k * sx * cy, k * k * cx * cy

    def second(x, y):
        sx, sy, cx, cy = np.sin(k * x), np.sin(k * y), np.cos(k * x), np.cos(k * y)
        return sx * sy, -k * k * sx * sy, k * k * cx * cy, -k * k * sx * sy

    return dofs, second, k


@dataclass
class ConvergenceTable:
    h: list = field(default_factory=list)
    error_l2: list = field(default_factory=list)
    error_energy: list = field(default_factory=list)
    iterations: list = field(default_factory=list)

    @staticmethod
    def _rates(e):
        return [float("nan")] + [
            math.log2(e[k] / e[k + 1]) if e[k] > 0 and e[k + 1] > 0 else float("nan")
            for k in range(len(e) - 1)]

    @property
    def rate_l2(self):
        return self._rates(self.error_l2)

    @property
    def rate_energy(self):
        return self._rates(self.error_energy)

    def rows(self):
        return list(zip(self.h, self.error_l2, self.rate_l2, self.error_energy, self.rate_energy))

    def format(self) -> str:
        lines = [f"{'h':>10} {'L2 error':>12} {'rate':>6} {'energy error':>13} {'rate':>6}"]
        for h, el, rl, ee, re in self.rows():
            lines.append(f"{h:10.5f} {el:12.4e} {rl:6.2f} {ee:13.4e} {re:6.2f}")
        return "\n".join(lines)


def convergence_sweep(mesh: StructuredMesh, levels: int, solve, errors) -> ConvergenceTable:
    """Solve on ``levels`` uniformly refined meshes starting from ``mesh``.

    ``solve(mesh) -> (u_h, iterations)`` and ``errors(mesh, u_h) -> (l2, energy)``.
    """
    if levels < 3:
        raise ValueError("a convergence sweep needs at least 3 levels")
    table = ConvergenceTable()
    for _ in range(levels):
        u_h, its = solve(mesh)
        l2, en = errors(mesh, u_h)
        table.h.append(mesh.h)
        table.error_l2.append(l2)
        table.error_energy.append(en)
        table.iterations.append(its)
        mesh = refine_uniform(mesh)
    return table


def self_errors(params: MaterialParams, ref_mesh: StructuredMesh, u_ref: np.ndarray, order: int = 6):
    """Error functional against a reference BFS solution on a finer mesh."""

    def exact(X, Y):
        pts = np.column_stack([X.ravel(), Y.ravel()])
        d = bfs.evaluate_at(ref_mesh, u_ref, pts)
        return tuple(d[:, k].reshape(X.shape) for k in (bfs.V, bfs.DXX, bfs.DXY, bfs.DYY))

    return lambda mesh, u_h: error_norms(mesh, params, u_h, exact, order)
