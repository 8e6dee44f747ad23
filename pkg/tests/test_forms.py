from itertools import permutations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folcoh import catalog, forms, identities
from folcoh import multilinear as ml
from folcoh.forms import DegreeError, FormField
from folcoh.grid import GridComplex, GridSpecError


def torus(sizes, metric="euclidean", frame=None, lengths=None):
    names = "xyz"[: len(sizes)]
    lengths = lengths or [1.0] * len(sizes)
    frame = frame or [["0"] * (len(sizes) - 1) + ["1"]]
    return GridComplex(
        {
            "axes": [{"name": a, "size": s, "length": L} for a, s, L in zip(names, sizes, lengths)],
            "metric": metric,
            "frame": frame,
        }
    )


def const_metric(G):
    return [[repr(float(v)) for v in row] for row in G]


def random_spd(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T + n * np.eye(n)


# ---------------------------------------------------------------- build
def test_flat_product_dimensions():
    C = torus([4, 4, 3])
    assert (C.n, C.p, C.q) == (3, 1, 2)
    for k in range(4):
        assert C.dim(k) == 48 * comb(3, k)


def test_metric_not_spd_reports_point():
    with pytest.raises(GridSpecError, match="not positive definite at grid point"):
        torus([4, 4], metric=[["x - 0.5", "0"], ["0", "1"]], frame=[["1", "0"]])


def test_frame_rank_deficiency():
    with pytest.raises(GridSpecError, match="rank deficient"):
        torus([4, 4], frame=[["x", "0"]])


def test_monodromy_must_be_unimodular():
    spec = catalog.carriere_spec({"n": 4, "nt": 4})
    spec["axes"][2]["wrap"]["monodromy"] = [[2, 0], [0, 1]]
    with pytest.raises(GridSpecError):
        GridComplex(spec)


def test_metric_incompatible_across_wrap():
    # unimodular, lattice preserving, but the Carriere metric is not invariant under it
    spec = catalog.carriere_spec({"n": 4, "nt": 4}, monodromy=((1, 2), (1, 1)))
    with pytest.raises(GridSpecError, match="incompatible with monodromy"):
        GridComplex(spec)


def test_form_field_validation():
    C = torus([3, 3])
    with pytest.raises(DegreeError):
        FormField(C, 3, np.zeros(9))
    with pytest.raises(DegreeError):
        FormField(C, 1, np.zeros(9))
    assert forms.zero_form(C, 2).field().shape == (9, 1)


# ---------------------------------------------------------------- d
def test_d_of_constant_vanishes():
    C = catalog.CASES["carriere"].build({"n": 5, "nt": 4})
    f = forms.form(C, 0, np.full(C.dim(0), 3.7))
    assert np.max(np.abs(forms.exterior_derivative(f).coeffs)) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["carriere", "torus-bundle", "linear-flow-t3"]))
def test_d_squared_exact(seed, name):
    rng = np.random.default_rng(seed)
    case = catalog.CASES[name]
    res = {k: 4 + rng.integers(0, 3) for k in case.default_resolution}
    C = case.build({k: int(v) for k, v in res.items()})
    for k in range(C.n - 1):
        x = rng.standard_normal(C.dim(k))
        ddx = C.d(k + 1) @ (C.d(k) @ x)
        scale = identities._inf_norm(C.d(k + 1)) * identities._inf_norm(C.d(k)) * np.max(np.abs(x))
        assert np.max(np.abs(ddx)) <= 1e-13 * scale


def test_d_top_degree_is_zero():
    C = torus([3, 3])
    w = forms.form(C, 2, np.ones(9))
    assert not np.any(forms.exterior_derivative(w).coeffs)


def test_d_matches_analytic_derivative_first_order():
    errs = []
    for N in (32, 64):
        C = torus([N, N], frame=[["1", "0"]])
        w = forms.sample(C, 1, lambda x, y: np.stack([0 * x, np.sin(2 * np.pi * x)], axis=1))
        dw = forms.exterior_derivative(w).coeffs
        x = C.coordinates()["x"]
        exact = 2 * np.pi * np.cos(2 * np.pi * x)
        errs.append(np.max(np.abs(dw - exact)))
    assert 1.8 < errs[0] / errs[1] < 2.2


# ---------------------------------------------------------------- wedge / interior
def test_wedge_basics():
    C = torus([3, 3, 3])
    dx = forms.sample(C, 1, lambda x, y, z: np.stack([1 + 0 * x, 0 * x, 0 * x], axis=1))
    assert not np.any(forms.wedge(dx, dx).coeffs)
    f = forms.sample(C, 0, lambda x, y, z: 1 + x * y)
    w = forms.form(C, 2, np.random.default_rng(0).standard_normal(C.dim(2)))
    np.testing.assert_allclose(forms.wedge(f, w).field(), f.field() * w.field())
    with pytest.raises(DegreeError):
        forms.wedge(w, w)


def antisym_oracle(coeffs, n, k):
    """Dense alternating tensor of a k-form at one point."""
    T = np.zeros((n,) * k)
    for c, I in zip(coeffs, ml.multi_indices(n, k)):
        for perm in permutations(range(k)):
            T[tuple(I[p] for p in perm)] += ml.perm_sign(perm) * c
    return T


def from_tensor(T, n, k):
    return np.array([T[tuple(I)] for I in ml.multi_indices(n, k)])


def oracle_wedge(a, b, n, k1, k2):
    A, B = antisym_oracle(a, n, k1), antisym_oracle(b, n, k2)
    P = np.multiply.outer(A, B)
    T = np.zeros((n,) * (k1 + k2))
    for perm in permutations(range(k1 + k2)):
        T += ml.perm_sign(perm) * np.transpose(P, perm)
    from math import factorial

    return from_tensor(T / (factorial(k1) * factorial(k2)), n, k1 + k2)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
def test_wedge_associative_and_matches_oracle(seed, k1, k2, k3):
    n = 3
    if k1 + k2 + k3 > n:
        return
    rng = np.random.default_rng(seed)
    a, b, c = (rng.standard_normal((1, comb(n, k))) for k in (k1, k2, k3))
    ab = ml.wedge(a, b, n, k1, k2)
    np.testing.assert_allclose(ab[0], oracle_wedge(a[0], b[0], n, k1, k2), atol=1e-12)
    left = ml.wedge(ab, c, n, k1 + k2, k3)
    right = ml.wedge(a, ml.wedge(b, c, n, k2, k3), n, k1, k2 + k3)
    assert np.max(np.abs(left - right)) <= 1e-12 * max(1.0, np.max(np.abs(left)))


def test_interior_examples():
    C = torus([3, 3])
    dxdy = forms.form(C, 2, np.ones(9))
    ex = np.tile([1.0, 0.0], (9, 1))
    out = forms.interior_product(ex, dxdy)
    np.testing.assert_array_equal(out.field(), np.tile([0.0, 1.0], (9, 1)))
    with pytest.raises(DegreeError):
        forms.interior_product(ex, forms.zero_form(C, 0))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_interior_matches_contraction_oracle(seed, k):
    n = 3
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((1, n))
    w = rng.standard_normal((1, comb(n, k)))
    M = ml.interior_matrix(X, n, k)[0]
    got = M @ w[0]
    T = antisym_oracle(w[0], n, k)
    want = from_tensor(np.tensordot(X[0], T, axes=(0, 0)), n, k - 1) if k > 1 else np.array([X[0] @ T])
    np.testing.assert_allclose(got, want, atol=1e-13 * max(1, np.abs(want).max()))
    if k >= 2:
        M2 = ml.interior_matrix(X, n, k - 1)[0]
        assert np.max(np.abs(M2 @ M @ w[0])) == pytest.approx(0.0, abs=1e-14)


# ---------------------------------------------------------------- inner product / delta
def test_inner_product_examples():
    C = torus([4, 4], frame=[["1", "0"]])
    one = forms.form(C, 0, np.ones(16))
    assert forms.inner_product(one, one) == pytest.approx(1.0)
    dx = forms.sample(C, 1, lambda x, y: np.stack([1 + 0 * x, 0 * x], axis=1))
    dy = forms.sample(C, 1, lambda x, y: np.stack([0 * x, 1 + 0 * x], axis=1))
    assert forms.inner_product(dx, dy) == 0.0
    with pytest.raises(DegreeError):
        forms.inner_product(one, dx)


def test_characteristic_form_norm_is_volume_on_carriere():
    case = catalog.CASES["carriere"]
    C = case.build({"n": 6, "nt": 4})
    fol = forms.Foliated(C)
    chi = forms.form(C, 1, fol.package.chi)
    one = forms.form(C, 0, np.ones(C.dim(0)))
    np.testing.assert_allclose(C.pointwise_inner(chi.coeffs, chi.coeffs, 1), 1.0, rtol=1e-12)
    assert forms.inner_product(chi, chi) == pytest.approx(forms.inner_product(one, one), rel=1e-12)


@pytest.mark.parametrize("name", ["carriere", "torus-bundle+perturbed", "flat-torus-flow+perturbed"])
def test_delta_is_adjoint_and_nilpotent(name):
    case = catalog.CASES[name]
    C = case.build({k: max(3, v // 4) for k, v in case.default_resolution.items()})
    rng = np.random.default_rng(1)
    for k in range(1, C.n + 1):
        a = forms.form(C, k - 1, rng.standard_normal(C.dim(k - 1)))
        b = forms.form(C, k, rng.standard_normal(C.dim(k)))
        lhs = forms.inner_product(forms.exterior_derivative(a), b)
        rhs = forms.inner_product(a, forms.codifferential(b))
        assert abs(lhs - rhs) <= 1e-10 * (abs(lhs) + abs(rhs))
        if k >= 2:
            dd = forms.codifferential(forms.codifferential(b)).coeffs
            assert np.max(np.abs(dd)) <= 1e-10 * np.max(np.abs(C.delta(k - 1) @ np.abs(C.delta(k)) @ np.abs(b.coeffs)))
    assert not np.any(forms.codifferential(forms.form(C, 0, np.ones(C.dim(0)))).coeffs)


def test_torus_bundle_codifferential_formula():
    """delta(a dt + c1 (dx1 - t dx2) + c2 dx2) = -a_t - d1 c1 - (t d1 + d2) c2, to first order."""
    bump = lambda t: np.sin(np.pi * t) ** 4
    dbump = lambda t: 4 * np.pi * np.sin(np.pi * t) ** 3 * np.cos(np.pi * t)
    errs = []
    for n, nt in ((8, 8), (16, 16)):
        C = catalog.CASES["torus-bundle"].build({"n": n, "nt": nt})
        X = C.coordinates()
        x1, x2, t = X["x1"], X["x2"], X["t"]
        s1, c1_ = np.sin(2 * np.pi * x1), np.cos(2 * np.pi * x2)
        a = bump(t) * s1
        c1 = bump(t) * c1_
        c2 = bump(t) * np.sin(2 * np.pi * (x1 + x2))
        # coordinate components (dx1, dx2, dt)
        w = np.stack([c1, c2 - t * c1, a], axis=1).reshape(-1)
        got = C.delta(1) @ w
        exact = -dbump(t) * s1 - 0.0 - (t * 2 * np.pi * bump(t) * np.cos(2 * np.pi * (x1 + x2)) + 2 * np.pi * bump(t) * np.cos(2 * np.pi * (x1 + x2)))
        errs.append(np.sqrt(np.mean((got - exact) ** 2)))
    assert errs[1] < 0.6 * errs[0]


# ---------------------------------------------------------------- star / metric change
def test_star_of_one_is_volume_form():
    C = catalog.CASES["carriere"].build({"n": 4, "nt": 4})
    vol = forms.hodge_star(forms.form(C, 0, np.ones(C.dim(0))))
    np.testing.assert_allclose(vol.coeffs, C.sqrt_det, rtol=1e-14)


@pytest.mark.parametrize("name", ["carriere+perturbed", "torus-bundle+perturbed"])
def test_star_defining_identity_and_sign(name):
    """a ^ *b = <a, b>_g vol, checked against the pointwise Gramian."""
    C = catalog.CASES[name].build({"n": 4, "nt": 4})
    rng = np.random.default_rng(2)
    for k in range(C.n + 1):
        a = forms.form(C, k, rng.standard_normal(C.dim(k)))
        b = forms.form(C, k, rng.standard_normal(C.dim(k)))
        lhs = forms.wedge(a, forms.hodge_star(b)).coeffs
        rhs = C.pointwise_inner(a.coeffs, b.coeffs, k) * C.sqrt_det
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))
        ss = forms.hodge_star(forms.hodge_star(a)).coeffs
        sign = (-1) ** (k * (C.n - k))
        assert np.max(np.abs(ss - sign * a.coeffs)) <= 1e-12 * np.max(np.abs(a.coeffs))


def test_metric_change_identity_and_conformal():
    C = torus([3, 3, 3])
    rng = np.random.default_rng(3)
    for k in range(4):
        w = forms.form(C, k, rng.standard_normal(C.dim(k)))
        np.testing.assert_allclose(forms.metric_change_map(w, C.metric).coeffs, w.coeffs, rtol=1e-14)
        # *' on (n-k)-forms scales by c^(n/2-(n-k)), so B^k = *' *^-1 scales by c^(k-n/2)
        c = 2.5
        np.testing.assert_allclose(forms.metric_change_map(w, c * C.metric).coeffs, c ** (k - C.n / 2) * w.coeffs, rtol=1e-12)


def test_metric_change_rejects_invalid_metric():
    C = torus([3, 3])
    w = forms.form(C, 1, np.ones(C.dim(1)))
    bad = C.metric.copy()
    bad[:, 0, 0] = -1.0
    with pytest.raises(ValueError):
        forms.metric_change_map(w, bad)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_metric_change_intertwines_codifferentials(seed):
    rng = np.random.default_rng(seed)
    G1, G2 = random_spd(rng, 3), random_spd(rng, 3)
    C1 = torus([3, 4, 3], metric=const_metric(G1))
    C2 = torus([3, 4, 3], metric=const_metric(G2))
    res = identities.intertwining_suite(C1, C2, rng, trials=5)
    for r in res:
        assert r.passed, (r.name, r.degree, r.residual)


def test_metric_change_intertwining_with_variable_metrics():
    case = catalog.CASES["carriere"]
    C1, C2 = case.build({"n": 4, "nt": 4}), catalog.CASES["carriere+perturbed"].build({"n": 4, "nt": 4})
    for r in identities.intertwining_suite(C1, C2, np.random.default_rng(4), trials=5):
        assert r.passed, (r.name, r.degree, r.residual)


def test_leibniz_rule_converges_first_order():
    Cs = [torus([12, 12, 8]), torus([24, 24, 16])]
    for r in identities.leibniz_convergence(Cs, np.random.default_rng(5), trials=2):
        assert r.passed, (r.name, r.detail)
