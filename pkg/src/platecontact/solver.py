"""Semismooth Newton (primal-dual active set) solution of the contact problems."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (ContactOperator, PenaltyRule, assemble_bending,
                       assemble_corner_forces, assemble_load, build_dofmap)
from .mesh import BoundarySpec, StructuredMesh
from .plate import MaterialParams

log = logging.getLogger(__name__)

PIVOT_RTOL = 1e-13
REFINEMENT_STEPS = 2
BACKWARD_TOL = 1e-12
FLOOR_FACTOR = 1e3


class SolverError(RuntimeError):
    """Solve failure; carries the partial ``report`` and last iterate ``u``."""

    def __init__(self, message, report=None, u=None):
        super().__init__(message)
        self.report = report
        self.u = u


class SingularSystemError(SolverError):
    pass


def linear_backward_error(A, x: np.ndarray, b: np.ndarray) -> float:
    """Normwise backward error |b - A x| / (|A| |x| + |b|) in the infinity norm."""
    r = np.abs(b - A @ x).max() if len(b) else 0.0
    denom = spla.norm(A, np.inf) * np.abs(x).max() + np.abs(b).max() if len(b) else 0.0
    return float(r / denom) if denom > 0 else 0.0


def solve_linear(A, b: np.ndarray) -> np.ndarray:
    """Sparse LU solve with a structural/numerical singularity check.

    Up to ``REFINEMENT_STEPS`` rounds of iterative refinement are applied.  A
    matrix is rejected when LU fails outright, when the smallest pivot is
    below ``PIVOT_RTOL`` times the largest, or when the refined solution has
    a normwise backward error above ``BACKWARD_TOL``.  The plain relative
    residual |Ax - b| / |b| is logged when it exceeds 1e-10; on fine plate
    meshes it is bounded below by roundoff times the condition number.
    """
    A = sp.csc_matrix(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible system: A {A.shape}, b {b.shape}")
    try:
        lu = spla.splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularSystemError(f"sparse LU failed: {exc}") from exc
    piv = np.abs(lu.U.diagonal())
    if piv.size and piv.min() <= PIVOT_RTOL * piv.max():
        raise SingularSystemError(
            f"matrix is numerically singular (pivot ratio {piv.min() / piv.max():.2e})")
    x = lu.solve(b)
    bn = np.linalg.norm(b)
    if bn == 0.0:
        return x
    for _ in range(REFINEMENT_STEPS):
        r = b - A @ x
        if np.linalg.norm(r) <= 1e-13 * bn:
            break
        x += lu.solve(r)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("linear solve produced non-finite values")
    eta = linear_backward_error(A, x, b)
    if eta > BACKWARD_TOL:
        raise SingularSystemError(f"linear solve backward error {eta:.2e} exceeds {BACKWARD_TOL:g}")
    rel = np.linalg.norm(A @ x - b) / bn
    if rel > 1e-10:
        log.info("linear solve: relative residual %.2e (backward error %.2e)", rel, eta)
    return x


@dataclass
class SolverOptions:
    tol_r: float | None = None       # absolute; defaults to rtol * ||f||
    rtol: float = 1e-10
    max_iters: int = 50
    damping: bool = False
    max_halvings: int = 5
    init: str = "nitsche"            # "nitsche" or "zero"

    def __post_init__(self):
        if self.tol_r is not None and not self.tol_r > 0:
            raise ValueError("tol_r must be positive")
        if not self.rtol > 0 or self.max_iters < 1:
            raise ValueError("rtol must be positive and max_iters >= 1")
        if self.init not in ("nitsche", "zero"):
            raise ValueError(f"unknown initial guess {self.init!r}")


@dataclass
class SolveReport:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    active_history: list = field(default_factory=list)
    linear_residuals: list = field(default_factory=list)
    halvings: list = field(default_factory=list)
    terminated_by: str = ""
    tolerance: float = 0.0
    n_dofs: int = 0

    @property
    def converged(self) -> bool:
        return self.terminated_by in ("residual_tol", "active_set_fixed_and_residual_tol",
                                      "active_set_fixed_and_roundoff_floor")

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "terminated_by": self.terminated_by,
            "converged": self.converged,
            "tolerance": self.tolerance,
            "n_dofs": self.n_dofs,
            "residual_history": [float(r) for r in self.residual_history],
            "active_history": [int(a) for a in self.active_history],
            "linear_residuals": [float(r) for r in self.linear_residuals],
            "halvings": list(self.halvings),
        }

    def summary(self) -> str:
        lines = [f"terminated by: {self.terminated_by}",
                 f"iterations:    {self.iterations}",
                 f"free dofs:     {self.n_dofs}",
                 f"tolerance:     {self.tolerance:.3e}",
                 " it   residual      active"]
        for k, (r, a) in enumerate(zip(self.residual_history, self.active_history), 1):
            lines.append(f"{k:3d}   {r:.6e}  {a:6d}")
        return "\n".join(lines)


def semismooth_newton(problem, x0: np.ndarray, opts: SolverOptions | None = None,
                      tol: float | None = None) -> tuple[np.ndarray, SolveReport]:
    """Generic semismooth Newton loop.

    ``problem`` provides ``residual(x)``, ``active(x)`` (boolean flags used in
    the generalised derivative) and ``jacobian(x, active)``.  Converged when
    the residual norm is below ``tol`` and the active set did not change over
    the last step (or already at the initial iterate).

    The residual is piecewise linear, so once the active set repeats the
    Newton step is exact and only roundoff remains.  If that roundoff floor
    lies above ``tol`` (fine meshes, smooth loads) the loop also accepts an
    iterate whose active set is fixed, whose residual is within
    ``FLOOR_FACTOR * tol`` and which no longer decreases by half.
    """
    opts = opts or SolverOptions()
    if tol is None:
        tol = opts.tol_r if opts.tol_r is not None else opts.rtol * problem.load_norm
    report = SolveReport(tolerance=tol, n_dofs=len(x0))
    x = np.array(x0, dtype=float)
    prev, prev_rn = None, np.inf
    r = problem.residual(x)
    for it in range(1, opts.max_iters + 1):
        active = problem.active(x)
        rn = float(np.linalg.norm(r))
        report.iterations = it
        report.residual_history.append(rn)
        report.active_history.append(int(active.sum()))
        log.debug("newton %d: |r| = %.3e, active = %d", it, rn, active.sum())
        if rn <= tol and prev is None:
            report.terminated_by = "residual_tol"
            return x, report
        if rn <= tol and np.array_equal(active, prev):
            report.terminated_by = "active_set_fixed_and_residual_tol"
            return x, report
        if (np.array_equal(active, prev) and rn <= FLOOR_FACTOR * tol
                and rn > 0.5 * prev_rn):
            report.terminated_by = "active_set_fixed_and_roundoff_floor"
            return x, report
        J = problem.jacobian(x, active)
        try:
            dx = solve_linear(J, -r)
        except SingularSystemError as exc:
            report.terminated_by = "singular_system"
            raise SingularSystemError(str(exc), report, x) from exc
        report.linear_residuals.append(float(np.linalg.norm(J @ dx + r) / max(rn, 1e-300)))
        step, halvings = 1.0, 0
        r_new = problem.residual(x + dx)
        if opts.damping:
            while np.linalg.norm(r_new) > rn and halvings < opts.max_halvings:
                step *= 0.5
                halvings += 1
                r_new = problem.residual(x + step * dx)
        report.halvings.append(halvings)
        x = x + step * dx
        r = r_new
        prev, prev_rn = active, rn
    report.terminated_by = "max_iters"
    raise SolverError(f"no convergence in {opts.max_iters} iterations", report, x)


@dataclass
class ContactState:
    """Per contact quadrature point diagnostics."""

    points: np.ndarray
    side: np.ndarray
    active: np.ndarray         # strictly positive gap function, i.e. lambda < 0
    lam: np.ndarray
    gap: np.ndarray            # u_h - g
    shear: np.ndarray
    s: np.ndarray

    def __len__(self):
        return len(self.lam)

    @property
    def complementarity(self) -> np.ndarray:
        return self.lam * self.gap

    def kkt_residual(self, scale: float | None = None) -> float:
        """max |lambda (u - g)| relative to max|lambda| * scale.

        ``scale`` is a displacement magnitude; it defaults to max|u - g| over
        the contact points, which is a poor choice when contact is (nearly)
        everywhere and the gap is only a discretisation error.  Returns 0 when
        either factor vanishes.
        """
        if len(self) == 0:
            return 0.0
        scale = np.abs(self.gap).max() if scale is None else scale
        denom = np.abs(self.lam).max() * scale
        return float(np.abs(self.complementarity).max() / denom) if denom > 0 else 0.0


def _empty_state() -> ContactState:
    z = np.zeros(0)
    return ContactState(np.zeros((0, 2)), np.zeros(0, dtype=str), z.astype(bool), z, z, z, z)


@dataclass
class Loads:
    point: tuple = ()
    q: float = 0.0
    body: object = None


class PlateContactProblem:
    """Nonlinear plate system on the free DOFs: (A + C) u + r_c(u) = f."""

    def __init__(self, mesh: StructuredMesh, params: MaterialParams, spec: BoundarySpec,
                 penalty: PenaltyRule | None = None, loads: Loads | None = None,
                 m: int = 4, q: int = 4):
        self.mesh, self.params, self.spec = mesh, params, spec
        self.penalty = penalty or PenaltyRule.for_plate(params)
        loads = loads or Loads()
        self.dofmap = build_dofmap(mesh, spec)
        free = self.dofmap.free
        K = assemble_bending(mesh, params) + assemble_corner_forces(mesh, params, spec)
        self.K = K[free][:, free].tocsr()
        self.f_full = assemble_load(mesh, loads.point, loads.q, loads.body)
        self.f = self.f_full[free]
        self.load_norm = float(np.linalg.norm(self.f))
        self.contact = ContactOperator(mesh, params, spec, self.penalty, m, q)
        self._Psi = self.contact.Psi[:, free].tocsr()
        self._Bt = self.contact.Bt[:, free].tocsr()
        self._Bv = self.contact.Bv[:, free].tocsr()
        c = self.contact
        self._TT = (self._Bt.T @ sp.diags(c.w / c.gamma) @ self._Bt).tocsr()

    @property
    def n_free(self) -> int:
        return len(self.dofmap.free)

    def expand(self, x):
        return self.dofmap.expand(x)

    def gap_function(self, x):
        return self._Psi @ x - self.contact.g

    def active(self, x) -> np.ndarray:
        # tie s == 0 counts as active so that the zero start has a nonsingular Jacobian
        return self.gap_function(x) >= 0.0

    def residual(self, x):
        c = self.contact
        s = self.gap_function(x)
        return (self.K @ x - self.f
                + self._Psi.T @ (c.w * c.gamma * np.maximum(s, 0.0)) - self._TT @ x)

    def jacobian(self, x, active):
        c = self.contact
        wa = c.w * c.gamma * np.asarray(active, dtype=float)
        return (self.K + self._Psi.T @ sp.diags(wa) @ self._Psi - self._TT).tocsr()

    def bilateral_system(self):
        """Linear system with u = g imposed by Nitsche on all Signorini points."""
        c = self.contact
        J = self.jacobian(np.zeros(self.n_free), np.ones(len(c), dtype=bool))
        rhs = self.f + self._Psi.T @ (c.w * c.gamma * c.g)
        return J, rhs

    def state(self, x) -> ContactState:
        if len(self.contact) == 0:
            return _empty_state()
        c = self.contact
        s = self.gap_function(x)
        return ContactState(
            points=c.quad.points, side=c.quad.side, active=s > 0.0,
            lam=-c.gamma * np.maximum(s, 0.0),
            gap=self._Bv @ x - c.g, shear=self._Bt @ x, s=s)


def _initial_guess(problem: PlateContactProblem, opts: SolverOptions, u0):
    if u0 is not None:
        u0 = np.asarray(u0, dtype=float)
        return u0[problem.dofmap.free] if len(u0) == problem.dofmap.n_dofs else u0
    if opts.init == "zero" or len(problem.contact) == 0:
        return np.zeros(problem.n_free)
    return solve_linear(*problem.bilateral_system())


def solve_plate_signorini(mesh: StructuredMesh, params: MaterialParams, spec: BoundarySpec,
                          penalty: PenaltyRule | None = None, loads: Loads | None = None,
                          opts: SolverOptions | None = None, u0=None):
    """Solve the plate with Signorini sides; returns (u_h, ContactState, SolveReport).

    ``u_h`` is the full nodal DOF vector.  Raises ``SolverError`` (with the
    report attached) on singular systems or non-convergence.
    """
    opts = opts or SolverOptions()
    if not spec.sides_of("signorini", "simply_supported", "clamped"):
        raise ValueError("at least one Signorini or essential side is required")
    problem = PlateContactProblem(mesh, params, spec, penalty, loads)
    try:
        x0 = _initial_guess(problem, opts, u0)
    except SingularSystemError as exc:
        raise SingularSystemError(f"initial bilateral solve failed: {exc}",
                                  SolveReport(terminated_by="singular_system")) from exc
    x, report = semismooth_newton(problem, x0, opts)
    return problem.expand(x), problem.state(x), report


def solve_plate_bilateral(mesh: StructuredMesh, params: MaterialParams, spec: BoundarySpec,
                          penalty: PenaltyRule | None = None, loads: Loads | None = None):
    """Linear plate solve: strong simply supported/clamped sides, u = g by
    Nitsche on Signorini-tagged sides."""
    problem = PlateContactProblem(mesh, params, spec, penalty, loads)
    x = solve_linear(*problem.bilateral_system())
    return problem.expand(x)


def recover_multiplier(problem: PlateContactProblem, u_h: np.ndarray) -> ContactState:
    x = u_h[problem.dofmap.free] if len(u_h) == problem.dofmap.n_dofs else u_h
    return problem.state(x)
