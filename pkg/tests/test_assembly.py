import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from platecontact import bfs
from platecontact.assembly import (ContactOperator, DofMap, PenaltyRule, apply_strong_bcs,
                                   assemble_bending, assemble_corner_forces, assemble_load,
                                   build_dofmap, element_bending_matrix, gauss_rule_2d)
from platecontact.mesh import BoundarySpec, SideBC, boundary_quadrature, build_mesh
from platecontact.plate import MaterialParams, moment_from_derivs, shear_from_derivs


def test_gauss_rule_is_exact_for_bicubic_products():
    pts, w = gauss_rule_2d(3)
    assert_allclose(w.sum(), 1.0)
    assert_allclose(np.sum(w * pts[:, 0] ** 5 * pts[:, 1] ** 3), 1 / 24)


@pytest.mark.parametrize("hx,hy", [(1.0, 1.0), (0.2, 0.5)])
def test_element_matrix_symmetric_with_affine_kernel(params, hx, hy):
    Ke = element_bending_matrix(hx, hy, params)
    assert_allclose(Ke, Ke.T, atol=1e-14 * np.abs(Ke).max())
    ev = np.linalg.eigvalsh(Ke)
    assert np.sum(np.abs(ev) < 1e-10 * ev.max()) == 3
    m = build_mesh((0, 0), (hx, hy), 1, 1)
    for f in [lambda x, y: (1 + 0 * x, 0 * x, 0 * x, 0 * x),
              lambda x, y: (x, 1 + 0 * x, 0 * x, 0 * x),
              lambda x, y: (y, 0 * x, 1 + 0 * x, 0 * x)]:
        local = bfs.interpolant(m, f)[bfs.element_dofs(m)[0]]
        assert_allclose(Ke @ local, 0.0, atol=1e-12)


def test_global_free_plate_kernel_is_affine(params):
    m = build_mesh((0, 0), (1, 1), 3, 2)
    A = assemble_bending(m, params).toarray()
    ev = np.linalg.eigvalsh(A)
    assert np.sum(np.abs(ev) < 1e-9 * ev.max()) == 3


@pytest.mark.parametrize("field,energy_over_D", [
    # u = x^2: kappa = diag(2, 0), integral of D (kappa:kappa + nu/(1-nu) lap^2) = D (4 + 4)
    (lambda x, y: (x * x, 2 * x, 0 * x, 0 * x), 8.0),
    # u = xy: kappa:kappa = 2, lap = 0
    (lambda x, y: (x * y, y, x, 1 + 0 * x), 2.0),
])
def test_bending_energy_of_exact_fields(params, field, energy_over_D):
    m = build_mesh((0, 0), (1, 1), 4, 4)
    u = bfs.interpolant(m, field)
    assert_allclose(u @ assemble_bending(m, params) @ u, energy_over_D * params.D, rtol=1e-12)


def test_loads_sum_to_resultant():
    m = build_mesh((0, 0), (2, 1), 4, 3)
    values = slice(0, None, 4)
    f = assemble_load(m, point_loads=[(0.3, 0.7, 2.5), (2.0, 1.0, -1.0)])
    assert_allclose(f[values].sum(), 1.5)
    assert_allclose(assemble_load(m, q=3.0)[values].sum(), 6.0)
    # body load integral of x*y over (0,2)x(0,1) is 1
    assert_allclose(assemble_load(m, body=lambda x, y: x * y)[values].sum(), 1.0)


def test_point_load_at_node_hits_only_that_value_dof():
    m = build_mesh((0, 0), (1, 1), 4, 4)
    f = assemble_load(m, point_loads=[(0.5, 0.5, 1.0)])
    expected = np.zeros_like(f)
    expected[4 * m.node_id(2, 2)] = 1.0
    assert_allclose(f, expected, atol=1e-15)


def test_strong_bc_dofs():
    m = build_mesh((0, 0), (1, 1), 2, 2)
    ss = apply_strong_bcs(m, BoundarySpec(bottom=SideBC("simply_supported"), right=SideBC("free"),
                                          top=SideBC("free"), left=SideBC("free")))
    assert sorted(ss) == sorted(4 * n + k for n in (0, 1, 2) for k in (0, 1))
    cl = apply_strong_bcs(m, BoundarySpec(bottom=SideBC("free"), right=SideBC("clamped"),
                                          top=SideBC("free"), left=SideBC("free")))
    assert sorted(cl) == sorted(4 * n + k for n in (2, 5, 8) for k in range(4))
    dm = DofMap.from_constrained(10, [1, 3, 3])
    assert_allclose(dm.expand(np.arange(8.0)), [0, 0, 1, 0, 2, 3, 4, 5, 6, 7])


def test_simply_supported_system_is_spd(params):
    m = build_mesh((0, 0), (1, 1), 4, 4)
    free = build_dofmap(m, BoundarySpec.uniform("simply_supported")).free
    A = assemble_bending(m, params)[free][:, free].toarray()
    np.linalg.cholesky(A)          # raises if not positive definite


def test_corner_forces_vanish_for_simply_supported_plate(params):
    m = build_mesh((0, 0), (1, 1), 4, 4)
    spec = BoundarySpec.uniform("simply_supported")
    assert assemble_corner_forces(m, params, spec).nnz == 0
    # even if added unconditionally they only touch eliminated corner rows
    free = build_dofmap(m, spec).free
    C = assemble_corner_forces(m, params)
    assert sp.linalg.norm(C[free][:, free]) == 0.0


def test_corner_forces_only_at_signorini_corners(params):
    m = build_mesh((0, 0), (1, 1), 2, 2)
    spec = BoundarySpec(bottom=SideBC("signorini"), right=SideBC("free"),
                        top=SideBC("free"), left=SideBC("free"))
    rows = np.unique(assemble_corner_forces(m, params, spec).nonzero()[0])
    assert sorted(rows) == [4 * m.corners[0], 4 * m.corners[1]]


def test_integration_by_parts_identity(params, rng):
    """(A + C) I(u) . v = int D_std lap^2 u v + int M_nn(u) d_n v - int T(u) v for u in Q3."""
    m = build_mesh((0.5, -0.25), (1.5, 1.0), 3, 4)

    def derivs(x, y):
        # u = x^3 y^2 + x^2 y
        return np.array([x**3 * y**2 + x**2 * y, 3 * x**2 * y**2 + 2 * x * y, 2 * x**3 * y + x**2,
                         6 * x * y**2 + 2 * y, 6 * x**2 * y + 2 * x, 2 * x**3,
                         6 * y**2, 12 * x * y + 2, 6 * x**2, 0 * x])

    u = bfs.interpolant(m, lambda x, y: derivs(x, y)[[0, 1, 2, 4]])
    v = rng.standard_normal(4 * m.n_nodes)
    lhs = v @ ((assemble_bending(m, params) + assemble_corner_forces(m, params)) @ u)

    interior = v @ assemble_load(m, body=lambda x, y: params.D_std * 24 * x)
    quad = boundary_quadrature(m, BoundarySpec())
    d = derivs(*quad.points.T)
    M = moment_from_derivs(d, params)
    n, t = quad.normals.T, quad.tangents.T
    Mnn = np.einsum("iq,ijq,jq->q", n, M, n)
    T = shear_from_derivs(d, n, t, params)
    dv = bfs.evaluate(m, v, quad.element, quad.local)
    dn_v = dv[:, bfs.DX] * quad.normals[:, 0] + dv[:, bfs.DY] * quad.normals[:, 1]
    boundary = np.sum(quad.weights * (Mnn * dn_v - T * dv[:, bfs.V]))
    assert_allclose(lhs, interior + boundary, rtol=1e-10)


def test_twist_mode_is_in_kernel_with_corner_forces(params):
    m = build_mesh((0, 0), (1, 1), 4, 4)
    u = bfs.interpolant(m, lambda x, y: (x * y, y, x, 1 + 0 * x))
    K = assemble_bending(m, params) + assemble_corner_forces(m, params)
    assert_allclose(K @ u, 0.0, atol=1e-13)
    assert np.abs(assemble_bending(m, params) @ u).max() > 1e-3


def _contact(params, n=3, g=0.0):
    m = build_mesh((0, 0), (1, 1), n, n)
    spec = BoundarySpec(bottom=SideBC("signorini", g), right=SideBC("signorini", g),
                        top=SideBC("free"), left=SideBC("simply_supported"))
    return m, ContactOperator(m, params, spec, PenaltyRule.for_plate(params))


def test_contact_jacobian_matches_finite_differences(params, rng):
    m, op = _contact(params)
    for _ in range(20):
        u = 1e-3 * rng.standard_normal(4 * m.n_nodes)
        if np.abs(op.gap_function(u)).min() > 1e-6:
            break
    s = op.gap_function(u)
    assert np.any(s > 0) and np.any(s < 0)
    J = op.jacobian(u)
    for _ in range(3):
        dv = rng.standard_normal(len(u))
        # the residual is linear between kinks, so a step that stays clear of them is exact
        eps = 0.5 * np.abs(s).min() / np.abs(op.Psi @ dv).max()
        fd = (op.residual(u + eps * dv) - op.residual(u - eps * dv)) / (2 * eps)
        assert_allclose(J @ dv, fd, rtol=1e-5, atol=1e-5 * np.abs(fd).max())


def test_contact_multiplier_sign_and_inactive_residual(params, rng):
    m, op = _contact(params, g=0.5)
    u = 1e-3 * rng.standard_normal(4 * m.n_nodes)
    assert np.all(op.gap_function(u) < 0)
    assert_allclose(op.multiplier(u), 0.0)
    # with no active point only the consistent -<T u, T v>/gamma term remains
    expected = -op.Bt.T @ (op.w / op.gamma * (op.Bt @ u))
    assert_allclose(op.residual(u), expected)
    u_up = u + 1.0
    assert np.all(op.multiplier(u_up) <= 0) and np.any(op.multiplier(u_up) < 0)


def test_penalty_rule():
    p = MaterialParams()
    rule = PenaltyRule.for_plate(p)
    assert_allclose(rule.gamma(0.5), 1e4 * p.D * 8)
    with pytest.raises(ValueError):
        PenaltyRule(0.0)
