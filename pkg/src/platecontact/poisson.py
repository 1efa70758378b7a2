"""Scalar Poisson reference solver with bilinear (Q1) elements.

Dirichlet data are imposed weakly by the symmetric Nitsche method and the
unilateral condition u <= g by its Nitsche contact counterpart, with
gamma = gamma0 / h on each edge.  Sides tagged ``free`` are homogeneous
Neumann, ``signorini`` sides carry the contact condition, every other tag
is treated as Dirichlet.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .assembly import gauss_rule_2d
from .mesh import BoundarySpec, StructuredMesh, boundary_quadrature
from .solver import ContactState, SolverOptions, semismooth_newton, solve_linear

CORNERS = ((0, 0), (1, 0), (1, 1), (0, 1))


def positive_part(x):
    return np.maximum(x, 0.0)


def q1_basis(hx: float, hy: float, xi, eta):
    """Values (n, 4) and physical gradients (n, 4, 2) of the bilinear basis."""
    xi = np.atleast_1d(np.asarray(xi, float))[:, None]
    eta = np.atleast_1d(np.asarray(eta, float))[:, None]
    cx = np.array([c[0] for c in CORNERS])[None, :]
    cy = np.array([c[1] for c in CORNERS])[None, :]
    fx = np.where(cx == 1, xi, 1.0 - xi)
    fy = np.where(cy == 1, eta, 1.0 - eta)
    dfx = np.where(cx == 1, 1.0, -1.0) / hx
    dfy = np.where(cy == 1, 1.0, -1.0) / hy
    return fx * fy, np.stack([dfx * fy, fx * dfy], axis=-1)


def _as_field(f):
    if callable(f):
        return f
    c = float(f)
    return lambda x, y: np.full(np.shape(x), c)


def q1_interpolant(mesh: StructuredMesh, func) -> np.ndarray:
    xy = mesh.nodes
    return np.broadcast_to(np.asarray(_as_field(func)(xy[:, 0], xy[:, 1]), float), (mesh.n_nodes,)).copy()


def q1_evaluate(mesh: StructuredMesh, u: np.ndarray, elements, local):
    """Values and gradients of a Q1 field at local points of given elements."""
    local = np.asarray(local, float).reshape(-1, 2)
    N, G = q1_basis(mesh.hx, mesh.hy, local[:, 0], local[:, 1])
    coef = u[mesh.elements[np.asarray(elements)]]
    return np.einsum("na,na->n", N, coef), np.einsum("nad,na->nd", G, coef)


def assemble_stiffness(mesh: StructuredMesh) -> sp.csr_matrix:
    pts, w = gauss_rule_2d(2)
    _, G = q1_basis(mesh.hx, mesh.hy, pts[:, 0], pts[:, 1])
    Ke = np.einsum("q,qad,qbd->ab", w * mesh.hx * mesh.hy, G, G)
    conn = mesh.elements
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    n = mesh.n_nodes
    return sp.csr_matrix((np.tile(Ke.ravel(), mesh.n_elements), (rows, cols)), shape=(n, n))


def assemble_source(mesh: StructuredMesh, f, order: int = 3) -> np.ndarray:
    pts, w = gauss_rule_2d(order)
    N, _ = q1_basis(mesh.hx, mesh.hy, pts[:, 0], pts[:, 1])
    org = mesh.element_origin(np.arange(mesh.n_elements))
    X = org[:, 0, None] + pts[None, :, 0] * mesh.hx
    Y = org[:, 1, None] + pts[None, :, 1] * mesh.hy
    vals = np.broadcast_to(np.asarray(_as_field(f)(X, Y), float), X.shape)
    fe = (vals * w * mesh.hx * mesh.hy) @ N
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.elements, fe)
    return out


class _BoundaryTerms:
    """Trace and normal-flux maps at composite Gauss points of selected sides."""

    def __init__(self, mesh, spec, kinds, gamma0, g, m=4, q=4):
        self.quad = quad = boundary_quadrature(mesh, spec, m, q, kinds=kinds)
        n, nq = mesh.n_nodes, len(quad)
        N, G = q1_basis(mesh.hx, mesh.hy, quad.local[:, 0], quad.local[:, 1])
        dn = np.einsum("nad,nd->na", G, quad.normals)
        rows = np.repeat(np.arange(nq), 4)
        cols = mesh.elements[quad.element].ravel()
        self.Bv = sp.csr_matrix((N.ravel(), (rows, cols)), shape=(nq, n))
        self.Bn = sp.csr_matrix((dn.ravel(), (rows, cols)), shape=(nq, n))
        self.gamma = gamma0 / quad.h_edge
        self.w = quad.weights
        if g is None:
            self.g = quad.g
        else:
            self.g = np.broadcast_to(np.asarray(_as_field(g)(quad.points[:, 0], quad.points[:, 1]), float), (nq,)).copy()

    def __len__(self):
        return len(self.w)


def _dirichlet_terms(bt: _BoundaryTerms):
    W = sp.diags(bt.w)
    K = (bt.Bv.T @ sp.diags(bt.w * bt.gamma) @ bt.Bv - bt.Bv.T @ W @ bt.Bn - bt.Bn.T @ W @ bt.Bv)
    rhs = bt.Bv.T @ (bt.w * bt.gamma * bt.g) - bt.Bn.T @ (bt.w * bt.g)
    return K, rhs


def _dirichlet_kinds():
    return ("simply_supported", "clamped", "dirichlet")


def assemble_nitsche_dirichlet(mesh: StructuredMesh, f, g=0.0, gamma0: float = 10.0,
                               spec: BoundarySpec | None = None):
    """Symmetric Nitsche system matrix and right-hand side."""
    spec = spec or BoundarySpec.uniform("dirichlet")
    bt = _BoundaryTerms(mesh, spec, _dirichlet_kinds(), gamma0, g)
    K, rhs = _dirichlet_terms(bt)
    return (assemble_stiffness(mesh) + K).tocsr(), assemble_source(mesh, f) + rhs


def solve_poisson_dirichlet_nitsche(mesh: StructuredMesh, f, g=0.0, gamma0: float = 10.0,
                                    spec: BoundarySpec | None = None) -> np.ndarray:
    """Nodal values of the Nitsche solution of -lap u = f, u = g on Dirichlet sides."""
    A, b = assemble_nitsche_dirichlet(mesh, f, g, gamma0, spec)
    return solve_linear(A, b)


def nitsche_min_eigenvalue(mesh: StructuredMesh, gamma0: float) -> float:
    """Smallest eigenvalue of the all-Dirichlet Nitsche matrix (dense; small meshes)."""
    A, _ = assemble_nitsche_dirichlet(mesh, 0.0, 0.0, gamma0)
    return float(np.linalg.eigvalsh(A.toarray()).min())


class PoissonContactProblem:
    """Residual a(u,v) + <gamma [psi(u) - g]_+, psi(v)> - <d_n u, d_n v>/gamma - (f,v),
    with psi(w) = w - d_n w / gamma, on the nodal values."""

    def __init__(self, mesh: StructuredMesh, f, g=None, gamma0: float = 10.0,
                 spec: BoundarySpec | None = None):
        self.mesh = mesh
        spec = spec or BoundarySpec.uniform("signorini")
        self.spec = spec
        K = assemble_stiffness(mesh)
        b = assemble_source(mesh, f)
        if spec.sides_of(*_dirichlet_kinds()):
            Kd, bd = _dirichlet_terms(_BoundaryTerms(mesh, spec, _dirichlet_kinds(), gamma0, g))
            K, b = K + Kd, b + bd
        self.K, self.f = K.tocsr(), b
        self.load_norm = float(np.linalg.norm(b))
        self.c = c = _BoundaryTerms(mesh, spec, ("signorini",), gamma0, g)
        self.Psi = (c.Bv - sp.diags(1.0 / c.gamma) @ c.Bn).tocsr()
        self._NN = (c.Bn.T @ sp.diags(c.w / c.gamma) @ c.Bn).tocsr()

    def gap_function(self, u):
        return self.Psi @ u - self.c.g

    def active(self, u):
        return self.gap_function(u) >= 0.0

    def residual(self, u):
        c = self.c
        return (self.K @ u - self.f
                + self.Psi.T @ (c.w * c.gamma * positive_part(self.gap_function(u)))
                - self._NN @ u)

    def jacobian(self, u, active):
        c = self.c
        wa = c.w * c.gamma * np.asarray(active, float)
        return (self.K + self.Psi.T @ sp.diags(wa) @ self.Psi - self._NN).tocsr()

    def state(self, u) -> ContactState:
        c = self.c
        s = self.gap_function(u)
        return ContactState(points=c.quad.points, side=c.quad.side, active=s > 0.0,
                            lam=-c.gamma * positive_part(s), gap=c.Bv @ u - c.g,
                            shear=c.Bn @ u, s=s)


def solve_poisson_signorini_nitsche(mesh: StructuredMesh, f, g=None, gamma0: float = 10.0,
                                    spec: BoundarySpec | None = None,
                                    opts: SolverOptions | None = None, u0=None):
    """Nitsche contact solve for u <= g on the Signorini sides.

    Returns (nodal values, ContactState, SolveReport); the state holds the
    recovered multiplier lambda = -gamma [u - g - d_n u / gamma]_+.
    """
    problem = PoissonContactProblem(mesh, f, g, gamma0, spec)
    x0 = np.zeros(mesh.n_nodes) if u0 is None else np.asarray(u0, float)
    u, report = semismooth_newton(problem, x0, opts or SolverOptions(init="zero"))
    return u, problem.state(u), report


def q1_error_norms(mesh: StructuredMesh, u: np.ndarray, exact, order: int = 4) -> tuple[float, float]:
    """L2 and H1-seminorm errors against ``exact(x, y) -> (u, u_x, u_y)``."""
    pts, w = gauss_rule_2d(order)
    ne = mesh.n_elements
    elements = np.repeat(np.arange(ne), len(w))
    local = np.tile(pts, (ne, 1))
    val, grad = q1_evaluate(mesh, u, elements, local)
    xy = mesh.element_origin(elements) + local * np.array([mesh.hx, mesh.hy])
    ex = [np.broadcast_to(np.asarray(v, float), (len(xy),)) for v in exact(xy[:, 0], xy[:, 1])]
    wq = np.tile(w, ne) * mesh.hx * mesh.hy
    l2 = float(np.sqrt(np.sum(wq * (val - ex[0]) ** 2)))
    h1 = float(np.sqrt(np.sum(wq * ((grad[:, 0] - ex[1]) ** 2 + (grad[:, 1] - ex[2]) ** 2))))
    return l2, h1


def q1_reference_errors(ref_mesh: StructuredMesh, u_ref: np.ndarray, order: int = 4):
    """Error functional against a Q1 reference solution on a finer mesh."""
    from .bfs import locate_points

    def exact(x, y):
        e, local = locate_points(ref_mesh, np.column_stack([x, y]))
        val, grad = q1_evaluate(ref_mesh, u_ref, e, local)
        return val, grad[:, 0], grad[:, 1]

    return lambda mesh, u: q1_error_norms(mesh, u, exact, order)
