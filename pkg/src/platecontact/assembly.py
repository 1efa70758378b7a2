"""Global sparse assembly for the BFS plate discretisation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import bfs
from .mesh import BoundarySpec, StructuredMesh, boundary_quadrature
from .plate import (CORNER_SIDES, MaterialParams, corner_jump_coefficients,
                    shear_from_derivs)


def gauss_rule_2d(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on the unit square: points (n*n, 2) and weights."""
    p, w = np.polynomial.legendre.leggauss(n)
    p, w = 0.5 * (p + 1.0), 0.5 * w
    X, Y = np.meshgrid(p, p, indexing="ij")
    W = np.outer(w, w)
    return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()


@dataclass(frozen=True)
class DofMap:
    n_dofs: int
    constrained: np.ndarray
    free: np.ndarray

    @classmethod
    def from_constrained(cls, n_dofs: int, constrained) -> "DofMap":
        constrained = np.unique(np.asarray(constrained, dtype=int))
        mask = np.ones(n_dofs, dtype=bool)
        mask[constrained] = False
        return cls(n_dofs, constrained, np.flatnonzero(mask))

    def expand(self, u_free: np.ndarray) -> np.ndarray:
        u = np.zeros(self.n_dofs)
        u[self.free] = u_free
        return u


def apply_strong_bcs(mesh: StructuredMesh, spec: BoundarySpec) -> np.ndarray:
    """Constrained DOFs for simply supported and clamped sides (homogeneous)."""
    out = []
    for side in spec.sides_of("simply_supported", "clamped"):
        nodes = mesh.side_nodes(side)
        if spec[side].kind == "clamped":
            kinds = (0, 1, 2, 3)
        else:
            # value plus the derivative along the side
            kinds = (0, 1) if side in ("bottom", "top") else (0, 2)
        out.extend(4 * nodes[:, None] + np.array(kinds))
    if not out:
        return np.zeros(0, dtype=int)
    return np.unique(np.concatenate([np.ravel(o) for o in out]))


def build_dofmap(mesh: StructuredMesh, spec: BoundarySpec) -> DofMap:
    return DofMap.from_constrained(4 * mesh.n_nodes, apply_strong_bcs(mesh, spec))


def element_bending_matrix(hx: float, hy: float, params: MaterialParams,
                           order: int = 4) -> np.ndarray:
    """16x16 matrix of the integral of M(N_b) : kappa(N_a) over one element."""
    pts, w = gauss_rule_2d(order)
    B = bfs.eval_basis(hx, hy, pts[:, 0], pts[:, 1])
    vxx, vxy, vyy = B[:, bfs.DXX], B[:, bfs.DXY], B[:, bfs.DYY]
    lap = vxx + vyy
    c = params.nu / (1.0 - params.nu)
    wq = w * hx * hy
    K = (np.einsum("q,qa,qb->ab", wq, vxx, vxx)
         + 2.0 * np.einsum("q,qa,qb->ab", wq, vxy, vxy)
         + np.einsum("q,qa,qb->ab", wq, vyy, vyy)
         + c * np.einsum("q,qa,qb->ab", wq, lap, lap))
    return params.D * K


def _scatter(mesh: StructuredMesh, Ke: np.ndarray, n: int) -> sp.csr_matrix:
    dofs = bfs.element_dofs(mesh)
    rows = np.repeat(dofs, 16, axis=1).ravel()
    cols = np.tile(dofs, (1, 16)).ravel()
    vals = np.tile(Ke.ravel(), mesh.n_elements)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def assemble_bending(mesh: StructuredMesh, params: MaterialParams, order: int = 4) -> sp.csr_matrix:
    """Global bending stiffness on all DOFs (uniform mesh: one element matrix)."""
    Ke = element_bending_matrix(mesh.hx, mesh.hy, params, order)
    return _scatter(mesh, Ke, 4 * mesh.n_nodes)


def assemble_corner_forces(mesh: StructuredMesh, params: MaterialParams,
                           spec: BoundarySpec | None = None) -> sp.csr_matrix:
    """Corner point-force terms, to be added to the bending stiffness.

    Row of the corner's value DOF receives the twisting-moment jump functional
    of the corner element.  Only corners touching a Signorini side are included
    when ``spec`` is given (corners on two free sides keep their natural
    condition; constrained corners are eliminated anyway).
    """
    n = 4 * mesh.n_nodes
    rows, cols, vals = [], [], []
    for c in range(4):
        if spec is not None and not any(spec[s].kind == "signorini" for s in CORNER_SIDES[c]):
            continue
        e = mesh.corner_elements[c]
        dofs = bfs.element_dofs(mesh, [e])[0]
        rows.append(np.full(16, 4 * mesh.corners[c]))
        cols.append(dofs)
        vals.append(corner_jump_coefficients(mesh, params, c))
    if not rows:
        return sp.csr_matrix((n, n))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


def assemble_load(mesh: StructuredMesh, point_loads=(), q: float = 0.0,
                  body=None, order: int = 4) -> np.ndarray:
    """Load vector from point loads ``(x, y, P)``, a uniform load ``q`` and/or a
    distributed load callable ``body(x, y)``."""
    f = np.zeros(4 * mesh.n_nodes)
    for x, y, P in point_loads:
        e, xi, eta = mesh.locate((x, y))
        N = bfs.eval_basis(mesh.hx, mesh.hy, xi, eta)[bfs.V]
        np.add.at(f, bfs.element_dofs(mesh, [e])[0], P * N)
    if q or body is not None:
        pts, w = gauss_rule_2d(order)
        N = bfs.eval_basis(mesh.hx, mesh.hy, pts[:, 0], pts[:, 1])[:, bfs.V]   # (nq, 16)
        wq = w * mesh.hx * mesh.hy
        org = mesh.element_origin(np.arange(mesh.n_elements))
        if body is None:
            fe = np.broadcast_to(q * wq @ N, (mesh.n_elements, 16))
        else:
            X = org[:, 0, None] + pts[None, :, 0] * mesh.hx
            Y = org[:, 1, None] + pts[None, :, 1] * mesh.hy
            vals = np.asarray(body(X, Y), dtype=float) + q
            fe = (vals * wq) @ N
        np.add.at(f, bfs.element_dofs(mesh), fe)
    return f


@dataclass(frozen=True)
class PenaltyRule:
    """gamma = gamma0 / h_edge**exponent on each edge."""

    gamma0: float
    exponent: int = 3

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise ValueError(f"gamma0 must be positive, got {self.gamma0}")

    def gamma(self, h):
        return self.gamma0 / np.asarray(h, dtype=float) ** self.exponent

    @classmethod
    def for_plate(cls, params: MaterialParams, factor: float = 1e4) -> "PenaltyRule":
        return cls(factor * params.D, 3)


def boundary_operators(mesh: StructuredMesh, params: MaterialParams, quad) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Sparse maps from the global DOF vector to trace values and Kirchhoff
    shear at the boundary quadrature points."""
    n = 4 * mesh.n_nodes
    nq = len(quad)
    B = bfs.eval_basis(mesh.hx, mesh.hy, quad.local[:, 0], quad.local[:, 1])   # (nq, 10, 16)
    d = np.moveaxis(B, 1, 0)                                                    # (10, nq, 16)
    T = shear_from_derivs(d, quad.normals.T[:, :, None], quad.tangents.T[:, :, None], params)
    cols = bfs.element_dofs(mesh, quad.element).ravel()
    rows = np.repeat(np.arange(nq), 16)
    Bv = sp.csr_matrix((B[:, bfs.V].ravel(), (rows, cols)), shape=(nq, n))
    Bt = sp.csr_matrix((np.asarray(T).ravel(), (rows, cols)), shape=(nq, n))
    return Bv, Bt


class ContactOperator:
    """Nitsche / augmented-Lagrangian contact terms on the Signorini sides.

    With psi(w) = w + T(w)/gamma and s = psi(u) - g the residual contribution
    tested with v is ``<gamma [s]_+, psi(v)> - <T(u)/gamma, T(v)>``; the
    multiplier is lambda = -gamma [s]_+ <= 0 and the constraint is u <= g.
    """

    def __init__(self, mesh: StructuredMesh, params: MaterialParams, spec: BoundarySpec,
                 penalty: PenaltyRule, m: int = 4, q: int = 4):
        self.mesh, self.params, self.spec, self.penalty = mesh, params, spec, penalty
        self.quad = boundary_quadrature(mesh, spec, m, q, kinds=("signorini",))
        self.Bv, self.Bt = boundary_operators(mesh, params, self.quad)
        self.gamma = penalty.gamma(self.quad.h_edge)
        self.Psi = (self.Bv + sp.diags(1.0 / self.gamma) @ self.Bt).tocsr()
        self.w = self.quad.weights
        self.g = self.quad.g

    def __len__(self):
        return len(self.quad)

    def gap_function(self, u: np.ndarray) -> np.ndarray:
        """s = psi(u) - g at every contact quadrature point."""
        return self.Psi @ u - self.g

    def shear(self, u):
        return self.Bt @ u

    def multiplier(self, u):
        return -self.gamma * np.maximum(self.gap_function(u), 0.0)

    def residual(self, u: np.ndarray) -> np.ndarray:
        s = self.gap_function(u)
        return (self.Psi.T @ (self.w * self.gamma * np.maximum(s, 0.0))
                - self.Bt.T @ (self.w / self.gamma * (self.Bt @ u)))

    def jacobian(self, u: np.ndarray, active=None) -> sp.csr_matrix:
        """Generalised derivative; points with s >= 0 count as active unless
        ``active`` overrides the per-point flags."""
        if active is None:
            active = self.gap_function(u) >= 0.0
        wa = self.w * self.gamma * np.asarray(active, dtype=float)
        return (self.Psi.T @ sp.diags(wa) @ self.Psi
                - self.Bt.T @ sp.diags(self.w / self.gamma) @ self.Bt).tocsr()

    def residual_jacobian(self, u: np.ndarray):
        return self.residual(u), self.jacobian(u)

    def nitsche_equality(self) -> tuple[sp.csr_matrix, np.ndarray]:
        """Matrix and right-hand side imposing u = g on all contact points."""
        J = self.jacobian(np.zeros(self.Psi.shape[1]), active=np.ones(len(self), dtype=bool))
        rhs = self.Psi.T @ (self.w * self.gamma * self.g)
        return J, rhs


def contact_residual_jacobian(mesh, params, penalty, u, spec, m: int = 4, q: int = 4):
    """Contact residual vector and semismooth Jacobian on the full DOF vector."""
    op = ContactOperator(mesh, params, spec, penalty, m, q)
    return op.residual_jacobian(u)
