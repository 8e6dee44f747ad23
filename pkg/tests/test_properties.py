import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folcoh import catalog, forms, properties
from folcoh.cohomology import CohomologyEngine
from folcoh.grid import GridComplex


def by_name(checks):
    return {c.name: c for c in checks}


def engine_for(name, res):
    case = catalog.CASES[name]
    E = CohomologyEngine(case.build(res))
    return E, case.flags, E.betti()


@pytest.fixture(scope="module")
def hopf():
    E = CohomologyEngine(forms.build_su2(2))
    return E, catalog.CASES["hopf"].flags, E.betti()


@pytest.fixture(scope="module")
def carriere():
    return engine_for("carriere", {"n": 6, "nt": 4})


@pytest.fixture(scope="module")
def linear():
    return engine_for("linear-flow-t3", {"n": 6})


def test_hopf_checks(hopf):
    E, flags, b = hopf
    checks = by_name(properties.property_checks(E, flags, b))
    assert not any(c.failed for c in checks.values())
    fab = checks["first_antibasic_betti"]
    assert fab.status == "pass" and fab.detail["clause"] == "h1_zero"
    chi = checks["chi_wedge_injection"]
    assert chi.status == "pass"
    assert chi.detail["r0"]["image_rank"] == 1
    assert checks["direct_sum"].reason == "normal_bundle_not_involutive"
    q = properties.quadratic_form_check(E, flags, np.random.default_rng(0), trials=50)
    assert q.status == "pass" and q.detail["max"] <= 1e-10


def test_carriere_checks(carriere):
    E, flags, b = carriere
    checks = by_name(properties.property_checks(E, flags, b))
    assert checks["direct_sum"].status == "pass"
    assert checks["connected_degree_zero"].status == "pass"
    fab = checks["first_antibasic_betti"]
    assert fab.status == "pass" and fab.detail["clause"] == "kappa_class_nonzero"
    assert b["h_a_rank"][1] == 0
    assert checks["chi_wedge_injection"].reason == "kappa_not_zero"
    assert not any(c.failed for c in checks.values())


def test_linear_flow_chi_wedge_equalities(linear):
    E, flags, b = linear
    chi = properties.chi_wedge_harmonic(E, flags, b)
    assert chi.status == "pass"
    assert all(chi.detail[f"r{r}"]["equality"] for r in range(3))


def test_hypotheses_gate_checks():
    E, flags, b = engine_for("t3-bump-flow", {"nx": 6, "ny": 4, "nz": 4})
    checks = by_name(properties.property_checks(E, flags, b))
    for name in ("direct_sum", "connected_degree_zero", "first_antibasic_betti", "chi_wedge_injection"):
        assert checks[name].status == "skipped" and checks[name].reason
    E, flags, b = engine_for("carriere+perturbed", {"n": 6, "nt": 4})
    assert properties.first_antibasic_betti(E, flags, b).reason == "metric_not_bundle_like"
    E, flags, b = engine_for("linear-flow-t3+perturbed", {"n": 4})
    assert properties.first_antibasic_betti(E, flags, b).reason == "taut_with_nonzero_h1"
    assert properties.quadratic_form_check(E, flags, np.random.default_rng(0), 3).reason == "kappa_not_basic"


def test_flag_recertification(hopf, carriere):
    for E, flags, _ in (hopf, carriere):
        checks = properties.recertify_flags(E, flags)
        assert not any(c.failed for c in checks)
        assert by_name(checks)["flag_riemannian"].status == "skipped"
    E, flags, _ = hopf
    wrong = dict(flags, involutive_normal=True)
    assert by_name(properties.recertify_flags(E, wrong))["flag_involutive_normal"].failed
    E, flags, _ = carriere
    assert by_name(properties.recertify_flags(E, flags))["flag_taut"].reason == "nontautness_not_certifiable"


def test_checks_serialize(carriere):
    E, flags, b = carriere
    json.dumps([c.as_dict() for c in properties.property_checks(E, flags, b)])


def test_invariant_reduction():
    spec = catalog.flat_product_spec(4, 4)
    reduced, rep = properties.invariant_reduction(spec, "z")
    assert rep["equal"]
    assert rep["dim_ratio"] == [4.0] * 4
    assert rep["reduced"]["h_b"][0] == 1 and rep["reduced"]["h_a_rank"][0] == 0


def test_invariant_reduction_rejects_non_isometric_action():
    spec = catalog.flat_product_spec(4, 4)
    spec["metric"] = [["1 + 0.2*sin(2*pi*z)", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]
    with pytest.raises(ValueError, match="not isometric"):
        properties.invariant_reduction(spec, "z")
    with pytest.raises(ValueError, match="orbit foliation"):
        properties.invariant_reduction(catalog.flat_product_spec(4, 4), "x")


def test_threshold_robustness(carriere):
    E, flags, b = carriere
    ok, detail = properties.threshold_robustness(lambda: catalog.CASES["carriere"].build({"n": 6, "nt": 4}), E.tau, b)
    assert ok and set(detail) == {"tau_x10", "tau_x0.1"}


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_betti_numbers_are_metric_independent(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((2, 2))
    G = A @ A.T + 2 * np.eye(2)
    base = {"axes": [{"name": "x", "size": 6}, {"name": "y", "size": 6}], "frame": [["1", "sqrt(2)"]]}
    E1 = CohomologyEngine(GridComplex(dict(base, metric="euclidean")))
    E2 = CohomologyEngine(GridComplex(dict(base, metric=[[repr(float(v)) for v in r] for r in G])))
    b1, b2 = E1.betti(), E2.betti()
    for k in ("h", "h_b", "h_a_rank"):
        assert b1[k] == b2[k]
