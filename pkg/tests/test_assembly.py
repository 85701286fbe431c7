import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hestonvi.assembly import apply_A, apply_A_divergence, apply_A_lambda, assemble, \
    check_integration_by_parts, commutator_identity_check, interpolate, operator_terms
from hestonvi.errors import AssemblyError, DomainError
from hestonvi.fields import SmoothField, bump
from hestonvi.params import HestonParams, derive_constants
from hestonvi.verification import energy_margins, identity_defects, strong_divergence_gap
from hestonvi.weighted_space import Domain, build_grid

P = HestonParams(1.0, -0.5, 1.0, 0.5, 0.5, 0.2)
P0 = HestonParams(1.0, 0.5, 1.0, 0.5, 0.5, 0.25)     # b1 = 0
PTS = (np.linspace(-1.5, 1.5, 7), np.linspace(0.01, 3.0, 7))


def small_form(params=P, n=9, upwind=False, grading=2.0):
    c = derive_constants(params)
    return assemble(build_grid(Domain(-2.0, 2.0, 2.0), n, n, grading, c), params, c, upwind)


def test_constant_maps_to_rc():
    np.testing.assert_allclose(apply_A(SmoothField.constant(2.0), *PTS, P), 2.0 * P.r, rtol=1e-15)


def test_affine_in_y():
    d0, d2 = 1.5, -0.7
    u = SmoothField.affine(d0, d2)
    x, y = PTS
    exact = (P.r * d0 - d2 * P.kappa * P.theta) + (P.kappa + P.r) * d2 * y
    np.testing.assert_allclose(apply_A(u, x, y, P), exact, rtol=1e-14, atol=1e-15)


def test_exponential_in_x():
    L = 0.7
    x, y = PTS
    e = np.exp(L * x)
    exact = (-(y / 2) * (L * L - L) - (P.r - P.q) * L + P.r) * e
    np.testing.assert_allclose(apply_A(SmoothField.exp_x(L), x, y, P), exact, rtol=1e-13)


def test_operator_terms_split_and_lambda_shift():
    u = SmoothField.exp_x(0.3) * SmoothField.exp_y(-0.5)
    x, y = PTS
    terms = operator_terms(u, x, y, P)
    assert set(terms) == {"diffusion", "drift_x", "drift_y", "reaction"}
    np.testing.assert_allclose(apply_A_lambda(u, x, y, P, 2.0),
                               apply_A(u, x, y, P) + 2.0 * (1 + y) * u(x, y), rtol=1e-15)
    with pytest.raises(DomainError):
        apply_A(u, 0.0, -1.0, P)
    with pytest.raises(DomainError):
        apply_A_divergence(u, 0.0, 0.0, P)


@pytest.mark.parametrize("params", [P, P0, HestonParams(0.4, 0.8, 2.0, 0.1, 0.0, 0.3)])
def test_strong_and_divergence_forms_agree(params):
    assert strong_divergence_gap(params, count=300) <= 1e-10


def test_form_of_constants_is_r_times_volume():
    form = small_form()
    one = np.ones(form.grid.size)
    vol = float(one @ (form.matrix_mass @ one))
    assert vol == pytest.approx(form.grid.node_weights.sum(), rel=1e-12)
    assert form.form(one, one) == pytest.approx(P.r * vol, rel=1e-12)
    assert form.norm_H(one) ** 2 == pytest.approx(vol, rel=1e-12)


def test_form_is_not_symmetric():
    form = small_form()
    rng = np.random.default_rng(1)
    u, v = rng.standard_normal((2, form.grid.size))
    assert abs(form.form(u, v) - form.form(v, u)) > 1e-6


def test_lambda_shift_adds_weighted_mass():
    form = small_form()
    rng = np.random.default_rng(2)
    u, v = rng.standard_normal((2, form.grid.size))
    assert form.form(u, v, 3.0) == pytest.approx(
        form.form(u, v) + 3.0 * float(v @ (form.matrix_mass_1py @ u)), rel=1e-12)


def test_assembly_rejects_degenerate_cells():
    c = derive_constants(P)
    g = build_grid(Domain(-1, 1, 1), 5, 5, 2.0, c)
    g.x_nodes[2] = g.x_nodes[1]
    with pytest.raises(AssemblyError):
        assemble(g, P, c)


params_st = st.builds(
    HestonParams, sigma=st.floats(0.2, 2.0), rho=st.floats(-0.9, 0.9),
    kappa=st.floats(0.2, 3.0), theta=st.floats(0.1, 1.5), r=st.floats(0.0, 1.0),
    q=st.floats(0.0, 1.0))


@settings(max_examples=15, deadline=None)
@given(params_st, st.integers(0, 10**6))
def test_garding_and_coercivity(params, seed):
    m = energy_margins(params, n=11, count=30, seed=seed)
    assert m["garding"] >= -1e-10
    assert m["coercivity"] >= -1e-10


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 2.0), st.floats(-0.9, 0.9), st.floats(0.2, 3.0), st.floats(0.1, 1.5),
       st.floats(0.0, 1.0), st.integers(0, 10**6))
def test_continuity_when_b1_vanishes(sigma, rho, kappa, theta, q, seed):
    r = q + kappa * theta * rho / sigma
    if r < 0:
        q, r = q - r, 0.0
    params = HestonParams(sigma, rho, kappa, theta, r, q)
    assert abs(derive_constants(params).b1) < 1e-9
    assert energy_margins(params, n=11, count=30, seed=seed)["continuity"] >= -1e-10


def test_integration_by_parts_and_commutator_converge():
    d = identity_defects(P0, sizes=(17, 33, 65))
    assert d["ibp"][-1] < 1e-3
    assert d["ibp_order"] >= 1.5
    assert d["commutator_order"] >= 1.5


def test_integration_by_parts_is_trivial_for_zero():
    c = derive_constants(P)
    g = build_grid(Domain(-2, 2, 2), 9, 9, 1.0, c)
    z = SmoothField.constant(0.0)
    assert check_integration_by_parts(z, SmoothField.exp_x(0.2), g, P) == 0.0


def test_commutator_with_constant_cutoff_vanishes():
    c = derive_constants(P0)
    g = build_grid(Domain(-2, 2, 2), 17, 17, 1.0, c)
    u = SmoothField.exp_x(0.3) * SmoothField.exp_y(-0.2)
    rep = commutator_identity_check(u, SmoothField.constant(1.0), g, P0)
    assert abs(rep.lhs) < 1e-12 and rep.rhs == 0.0
    assert rep.estimate_holds


def test_commutator_estimate_holds_for_bump():
    c = derive_constants(P0)
    g = build_grid(Domain(-2, 2, 2), 33, 33, 1.0, c)
    u = SmoothField.exp_x(0.3) * SmoothField.exp_y(-0.2)
    phi = SmoothField.separable(bump(0.0, 1.0), bump(1.0, 0.7))
    rep = commutator_identity_check(u, phi, g, P0)
    assert rep.estimate_holds
    assert math.isfinite(rep.estimate_constant)


def test_interpolate_matches_nodes():
    form = small_form()
    X, Y = form.grid.points
    np.testing.assert_array_equal(interpolate(form.grid, lambda x, y: x * y), X * Y)


def test_export_coo(tmp_path):
    form = small_form(n=5)
    path = tmp_path / "a.csv"
    form.export_coo(path)
    rows = open(path).read().splitlines()
    assert rows[0] == "row,col,value"
    assert len(rows) - 1 == form.matrix_a.tocoo().nnz
    keys = [tuple(map(int, r.split(",")[:2])) for r in rows[1:]]
    assert keys == sorted(keys)
    i, j, v = rows[1].split(",")
    assert float(v) == form.matrix_a[int(i), int(j)]


@pytest.mark.parametrize("grading", [1.0, 2.0])
def test_upwind_is_m_matrix_for_zero_correlation(grading):
    params = HestonParams(1.0, 0.0, 1.0, 0.5, 0.5, 0.5)
    form = small_form(params, n=17, upwind=True, grading=grading)
    free = ~form.dirichlet_mask
    A = form.matrix_a.tocsr()[free][:, free].toarray()
    off = A - np.diag(np.diag(A))
    assert off.max() <= 1e-14
    assert A.sum(axis=1).min() >= -1e-12
    assert np.diag(A).min() > 0


def test_upwind_is_close_to_galerkin():
    params = HestonParams(1.0, 0.0, 1.0, 0.5, 0.5, 0.5)
    c = derive_constants(params)
    diffs = []
    for n in (17, 33, 65):
        g = build_grid(Domain(-2, 2, 2), n, n, 1.0, c)
        u = interpolate(g, lambda x, y: np.cos(x) * np.exp(-y))
        v = interpolate(g, lambda x, y: np.sin(x + 0.3) * (1 + y))
        diffs.append(abs(assemble(g, params, c, True).form(u, v) - assemble(g, params, c).form(u, v)))
    assert diffs[2] < diffs[1] < diffs[0]
