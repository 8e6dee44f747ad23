"""End-to-end acceptance criteria, one test and one verdict line each.

Each test prints ``criterion N: PASS|FAIL <summary>`` and asserts the
criterion at its stated tolerance.  Nothing here is relaxed: a criterion the
computation does not meet fails, and the README explains why.
"""

import time
from functools import lru_cache

import pytest

from folcoh import catalog, properties
from folcoh.report import RunConfig, run_case

pytestmark = pytest.mark.acceptance

GRID_BASE = ("carriere", "torus-bundle", "flat-torus-flow", "t3-bump-flow", "linear-flow-t3")
PERTURBED = tuple(n + "+perturbed" for n in GRID_BASE)


ALL_SUITES = ("betti", "identities", "convergence", "properties")


@lru_cache(maxsize=None)
def _run(name, suites, res):
    t = time.time()
    rep, status = run_case(RunConfig(case=name, resolution=dict(res), suites=suites))
    return rep, status, time.time() - t


def _key(name, res):
    return tuple(sorted(dict(catalog.CASES[name].default_resolution, **res).items()))


def full_run(name, **res):
    return _run(name, ALL_SUITES, _key(name, res))


def light_run(name, suites=("betti", "identities"), **res):
    return _run(name, suites, _key(name, res))


def prop(rep, name):
    return next(p for p in rep["properties"] if p["name"] == name)


@pytest.fixture(autouse=True)
def _collect(verdicts):
    global VERDICTS
    VERDICTS = verdicts


VERDICTS = []


def verdict(n, ok, summary):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {summary}"
    VERDICTS.append(line)
    print(line)
    assert ok, line


def test_criterion_01_hopf():
    r3, s3, t3 = light_run("hopf", suites=("betti",), jmax=3)
    r2, s2, _ = light_run("hopf", suites=("betti",), jmax=2)
    b3, b2 = r3["betti"], r2["betti"]
    ok = (
        b3["h_b"][:3] == [1, 0, 1]
        and b3["h_a_rank"] == [0, 1, 0, 1]
        and all(b2[k] == b3[k] for k in ("h", "h_b", "h_a_rank"))
        and s3 == 0
        and t3 < 30
    )
    verdict(1, ok, f"hopf J=3 h_b={b3['h_b'][:3]} h_a={b3['h_a_rank']}; J=2 identical={b2['h_a_rank'] == b3['h_a_rank']}; {t3:.1f}s")


def test_criterion_02_t3_bump_flow():
    rep, _, t = light_run("t3-bump-flow", suites=("betti",), nx=16, ny=16, nz=8)
    fine, _, _ = light_run("t3-bump-flow", suites=("betti",), nx=20, ny=20, nz=10)
    b, bf = rep["betti"], fine["betti"]
    stable = all(b[k] == bf[k] for k in ("h", "h_b", "h_a_rank"))
    ok = b["h"] == [1, 3, 3, 1] and b["h_b"][:3] == [1, 1, 0] and b["h_a_rank"] == [0, 2, 3, 1] and stable and t < 300
    verdict(
        2,
        ok,
        f"t3-bump-flow 16x16x8 h={b['h']} h_b={b['h_b'][:3]} (target 1,1,0) h_a={b['h_a_rank']} (target 0,2,3,1); "
        f"stable at 20x20x10={stable}; {t:.1f}s",
    )


def test_criterion_03_flat_torus_flow():
    rep, _, t = light_run("flat-torus-flow", suites=("betti",), nx=64, ny=32)
    b = rep["betti"]
    ok = b["h"] == [1, 2, 1] and b["h_b"][:2] == [1, 1] and b["h_a_rank"] == [0, 1, 1] and t < 180
    verdict(3, ok, f"flat-torus-flow 64x32 h={b['h']} h_b={b['h_b'][:2]} h_a={b['h_a_rank']}; {t:.1f}s")


def test_criterion_04_torus_bundle():
    rep, _, _ = light_run("torus-bundle", suites=("betti",), n=12, nt=8)
    b = rep["betti"]
    fixed = [light_run("torus-bundle", suites=("betti",), n=12, nt=nt)[0]["betti"]["dim_basic"][2] for nt in (4, 6, 8)]
    scaled = [light_run("torus-bundle", suites=("betti",), n=n, nt=nt)[0]["betti"]["dim_basic"][2] for n, nt in ((6, 4), (9, 6), (12, 8))]
    grows = all(a < c for a, c in zip(fixed, fixed[1:]))
    ok = b["h_a_rank"] == [0, 1, 1, 1] and b["h_b"][:2] == [1, 1] and grows
    verdict(
        4,
        ok,
        f"torus-bundle 12x12x8 h_a={b['h_a_rank']} (target 0,1,1,1) h_b01={b['h_b'][:2]}; "
        f"dim basic 2-forms at fiber 12, N_t=4,6,8: {fixed}; with fiber scaled 6,9,12: {scaled}",
    )


def test_criterion_05_carriere():
    rep, status, _ = full_run("carriere", n=12, nt=8)
    b = rep["betti"]
    ds = prop(rep, "direct_sum")["status"] == "pass"
    dual = b["h"] == b["h"][::-1]
    flagged = {d["table"] for d in rep["discrepancies"]} >= {"h", "h_a"}
    ok = b["h_b"][:3] == [1, 1, 0] and ds and dual and flagged and status in (0, 3)
    verdict(5, ok, f"carriere h_b={b['h_b'][:3]} h={b['h']} h_a={b['h_a_rank']} direct_sum={ds} self_dual={dual} discrepancies_flagged={flagged} exit={status}")


def test_criterion_06_linear_flow():
    rep, _, _ = full_run("linear-flow-t3", n=8)
    b = rep["betti"]
    chi = prop(rep, "chi_wedge_injection")
    eq = chi["status"] == "pass" and all(chi["detail"][f"r{r}"]["equality"] for r in range(3))
    ok = b["h_b"][:3] == [1, 2, 1] and b["h_a_rank"] == [0, 1, 2, 1] and eq
    verdict(6, ok, f"linear-flow-t3 8^3 h_b={b['h_b'][:3]} h_a={b['h_a_rank']} chi-wedge equalities r=0,1,2: {eq}")


EXACT_NAMES = {
    "d_squared",
    "adjoint_d_delta",
    "adjoint_d_a_delta_a",
    "Pb_idempotent",
    "Pa_idempotent",
    "Pb_self_adjoint",
    "d_a_equals_Pa_d",
    "delta_a_equals_delta_Pa",
    "d_a_squared",
    "delta_a_squared",
}


def all_reports():
    out = {"hopf": full_run("hopf", jmax=3)[0]}
    for n in GRID_BASE:
        out[n] = full_run(n)[0]
    for n in PERTURBED:
        out[n] = light_run(n)[0]
    return out


def test_criterion_07_exact_identities():
    bad, worst, seen = [], 0.0, set()
    for name, rep in all_reports().items():
        for row in rep["identities"]:
            if row["name"] in EXACT_NAMES:
                seen.add(row["name"])
                worst = max(worst, row["residual"] / row["tol"])
                if not row["passed"]:
                    bad.append((name, row["name"], row["degree"]))
    ok = not bad and seen == EXACT_NAMES
    verdict(7, ok, f"{len(all_reports())} cases, {len(seen)} identity families; worst residual/tol={worst:.2e}; failures={bad}")


def test_criterion_08_continuum_identities():
    hopf = all_reports()["hopf"]
    machine = [r for r in hopf["identities"] if r["class"] == "machine"]
    m_ok = bool(machine) and all(r["passed"] and r["residual"] <= 1e-10 for r in machine)
    conv, bad = 0, []
    for name in GRID_BASE:
        case = catalog.CASES[name]
        if not (case.flags["riemannian"] and case.flags["bundle_like"]):
            continue
        rows = [r for r in all_reports()[name]["identities"] if r["class"] == "convergence"]
        conv += len(rows)
        bad += [(name, r["name"], r["degree"]) for r in rows if not r["passed"]]
    ok = m_ok and conv > 0 and not bad
    verdict(8, ok, f"su2 machine rows={len(machine)} max={max(r['residual'] for r in machine):.1e}; grid convergence rows={conv} failures={bad}")


def test_criterion_09_hodge_cross_check():
    bad = []
    for name, rep in all_reports().items():
        b = rep["betti"]
        if b["h_a_rank"] != b["h_a_harmonic"]:
            bad.append((name, "betti"))
        for row in rep["identities"]:
            if row["name"] in ("hodge_recomposition", "hodge_orthogonality") and not (row["passed"] and row["residual"] <= 1e-10):
                bad.append((name, row["name"], row["degree"]))
    verdict(9, not bad, f"rank vs harmonic h_a and Hodge decomposition on {len(all_reports())} cases; failures={bad}")


def test_criterion_10_metric_independence():
    bad = []
    for name in GRID_BASE:
        base = all_reports()[name]
        pert = all_reports()[name + "+perturbed"]
        for k in ("h", "h_b", "h_a_rank"):
            if base["betti"][k] != pert["betti"][k]:
                bad.append((name, k, base["betti"][k], pert["betti"][k]))
        rows = [r for r in base["identities"] if r["name"] == "metric_change_intertwining"]
        if not rows or not all(r["passed"] and r["residual"] <= 1e-10 for r in rows):
            bad.append((name, "intertwining"))
    verdict(10, not bad, f"{len(GRID_BASE)} grid cases vs perturbed metrics; failures={bad}")


def test_criterion_11_structural_bounds():
    bad = []
    reps = all_reports()
    for name, rep in reps.items():
        b, C = rep["betti"], catalog.CASES[name]
        h, ha, hb = b["h"], b["h_a_rank"], b["h_b"]
        q = len(h) - 2  # every catalog foliation is a flow
        if not (all(ha[k] == h[k] for k in range(q + 1, len(h))) and ha[q] <= h[q]):
            bad.append((name, "lemma_bounds"))
        if C.flags["riemannian"] and C.flags["connected"]:
            if not (hb[0] == 1 and ha[0] == 0 and h[0] == hb[0] + ha[0]):
                bad.append((name, "degree_zero"))
            if not h[1] <= hb[1] + ha[1]:
                bad.append((name, "first_betti"))
    h1 = (reps["hopf"]["betti"]["h_a_rank"][1], reps["carriere"]["betti"]["h_a_rank"][1])
    if h1 != (1, 0):
        bad.append(("h_a1", h1))
    verdict(11, not bad, f"bounds on {len(reps)} cases; h_a1 hopf,carriere={h1}; failures={bad}")


def test_criterion_12_threshold_robustness():
    bad = []
    for name in ("hopf",) + GRID_BASE:
        if prop(all_reports()[name], "threshold_robustness")["status"] != "pass":
            bad.append(name)
    for name in PERTURBED:
        case = catalog.CASES[name]
        rep = all_reports()[name]
        ok, _ = properties.threshold_robustness(lambda c=case: c.build(dict(c.default_resolution)), rep["thresholds"]["tau"], rep["betti"])
        if not ok:
            bad.append(name)
    verdict(12, not bad, f"tau x10 and x0.1 on {1 + len(GRID_BASE) + len(PERTURBED)} cases; failures={bad}")
