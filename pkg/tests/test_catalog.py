import json

import pytest

from folcoh import catalog


def test_listing_is_json_and_complete():
    listing = catalog.list_cases()
    json.dumps(listing)
    names = [c["name"] for c in listing]
    for base in catalog.BASE_CASES:
        assert base in names
    for c in listing:
        if c["backend"] == "grid" and c["perturbed_variant_of"] is None:
            assert c["name"] + "+perturbed" in names


def test_expected_tables_are_tagged():
    for case in catalog.CASES.values():
        for key, tables in case.expected.items():
            assert tables, key
            for t in tables:
                assert t.provenance in ("PAPER", "DERIVED")
                assert all(v == catalog.INF or (isinstance(v, int) and v >= 0) for v in t.values)


def test_flags_are_complete_and_boolean():
    for case in catalog.CASES.values():
        assert set(case.flags) == set(catalog.FLAG_KEYS)
        assert all(isinstance(v, bool) for v in case.flags.values())


def test_perturbed_variants_drop_bundle_like_and_keep_foliation_flags():
    for name, case in catalog.CASES.items():
        if not name.endswith("+perturbed"):
            continue
        base = catalog.CASES[name.split("+")[0]]
        assert case.flags["bundle_like"] is False
        assert case.flags["taut"] == base.flags["taut"]
        assert case.flags["riemannian"] == base.flags["riemannian"]


def test_unknown_case():
    with pytest.raises(KeyError, match="unknown case"):
        catalog.get_case("klein-bottle")


@pytest.mark.parametrize("name", ["carriere", "torus-bundle", "flat-torus-flow", "t3-bump-flow", "linear-flow-t3"])
def test_grid_cases_build_at_small_resolution(name):
    case = catalog.CASES[name]
    res = {k: 4 for k in case.default_resolution}
    C = case.build(res)
    assert C.n in (2, 3) and C.p == 1


def test_lambda_is_the_expanding_eigenvalue():
    import numpy as np

    ev = np.linalg.eigvalsh(np.array([[2.0, 1.0], [1.0, 1.0]]))
    assert catalog.LAMBDA == pytest.approx(ev.max(), rel=1e-15)
