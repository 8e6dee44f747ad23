"""Built-in example foliations with their expected Betti tables.

Every expected table carries a provenance tag: ``PAPER`` for a value printed
in the source text, ``DERIVED`` for one obtained by an independent argument
(stated in ``note``).  A PAPER table whose printed value is internally
inconsistent is kept verbatim and paired with the DERIVED value.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from math import sqrt

from .grid import GridComplex
from .su2 import Su2Complex

PHI = (1 + sqrt(5)) / 2
LAMBDA = PHI**2
INF = "inf"


@dataclass(frozen=True)
class Expected:
    values: tuple
    provenance: str
    note: str = ""

    def as_dict(self):
        return {"values": list(self.values), "provenance": self.provenance, "note": self.note}


@dataclass
class Case:
    name: str
    backend: str
    description: str
    flags: dict
    expected: dict  # table name -> list[Expected]
    default_resolution: dict
    refined_resolution: dict
    convergence_resolutions: tuple = ()
    perturbed: bool = False
    base: str | None = None
    _spec_fn: object = None

    def spec(self, resolution=None):
        res = dict(self.default_resolution)
        res.update(resolution or {})
        return self._spec_fn(res)

    def build(self, resolution=None):
        if self.backend == "su2":
            res = dict(self.default_resolution)
            res.update(resolution or {})
            return Su2Complex(res["jmax"], tuple(res.get("scales", (1.0, 1.0, 1.0))), name=self.name)
        return GridComplex(self.spec(resolution))

    def listing(self):
        return {
            "name": self.name,
            "backend": self.backend,
            "description": self.description,
            "flags": dict(sorted(self.flags.items())),
            "resolution": self.default_resolution,
            "expected": {k: [e.as_dict() for e in v] for k, v in sorted(self.expected.items())},
            "perturbed_variant_of": self.base,
        }


# ---------------------------------------------------------------- grid specs
def _axis(name, size, length=1.0, wrap="periodic", offset=0.0):
    out = {"name": name, "size": int(size), "length": float(length), "wrap": wrap}
    if offset:
        out["offset"] = offset
    return out


def carriere_spec(res, perturbed=False, monodromy=((2, 1), (1, 1))):
    """Hyperbolic torus bundle, flow along the contracting eigendirection."""
    n, nt = res["n"], res["nt"]
    g11 = "(lambda^(-2*t)/phi^2 + lambda^(2*t)*phi^2)/5"
    g12 = "(-lambda^(-2*t)/phi + lambda^(2*t)*phi)/5"
    g22 = "(lambda^(-2*t) + lambda^(2*t))/5"
    g33 = "1"
    g13 = g23 = "0"
    if perturbed:
        g33 = "1 + 0.3*sin(pi*t)^2"
        # cross term 0.2 sin(2 pi t) (dt.theta + theta.dt), theta = lambda^(-t) w with w(V1)=0, w(V2)=1
        g13 = "0.2*sin(2*pi*t)*lambda^(-t)/(1 + phi^2)"
        g23 = "-0.2*sin(2*pi*t)*lambda^(-t)*phi/(1 + phi^2)"
    return {
        "name": "carriere",
        "axes": [
            _axis("u1", n),
            _axis("u2", n),
            _axis("t", nt, 1.0, {"monodromy": [list(r) for r in monodromy], "fiber": ["u1", "u2"]}),
        ],
        "constants": {"lambda": LAMBDA, "phi": PHI},
        "metric": [[g11, g12, g13], [g12, g22, g23], [g13, g23, g33]],
        "frame": [["lambda^t", "-phi*lambda^t", "0"]],
    }


def torus_bundle_spec(res, perturbed=False):
    """Nilmanifold bundle with parabolic monodromy; leaves are the t-curves."""
    n, nt = res["n"], res["nt"]
    g33 = "1"
    g23 = "0"
    if perturbed:
        g33 = "1 + 0.3*sin(pi*t)^2"
        g23 = "0.3*sin(2*pi*t)"
    return {
        "name": "torus-bundle",
        "axes": [
            _axis("x1", n),
            _axis("x2", n),
            # (x, t+1) ~ (A x, t) with A = [[1,1],[0,1]] means (x, t=1) is glued to (A^-1 x, 0)
            _axis("t", nt, 1.0, {"monodromy": [[1, -1], [0, 1]], "fiber": ["x1", "x2"]}),
        ],
        "metric": [["1", "-t", "0"], ["-t", "1 + t^2", g23], ["0", g23, g33]],
        "frame": [["0", "0", "1"]],
    }


def flat_torus_flow_spec(res, perturbed=False):
    """Flow on (R/2Z) x (R/Z) with dense leaves on 0<x<1 and circles on 1<=x<=2."""
    metric = "euclidean"
    if perturbed:
        metric = [["1 + 0.3*sin(pi*x)^2", "0.2*sin(pi*x)"], ["0.2*sin(pi*x)", "1 + 0.2*cos(pi*x)^2"]]
    bump = "((sin(pi*x) + abs(sin(pi*x)))/2)^2"
    return {
        "name": "flat-torus-flow",
        "axes": [_axis("x", res["nx"], 2.0), _axis("y", res["ny"], 1.0)],
        "metric": metric,
        "frame": [[bump, f"sqrt(1 - ({bump})^2)"]],
    }


def t3_bump_flow_spec(res, perturbed=False):
    """Circle times the previous flow, on the unit 3-torus."""
    metric = "euclidean"
    if perturbed:
        metric = [
            ["1 + 0.3*sin(2*pi*x)^2", "0.1*sin(2*pi*x)", "0"],
            ["0.1*sin(2*pi*x)", "1", "0.1*cos(2*pi*x)"],
            ["0", "0.1*cos(2*pi*x)", "1 + 0.2*cos(2*pi*x)^2"],
        ]
    bump = "sin(pi*x)^2"
    return {
        "name": "t3-bump-flow",
        # cell-centred x keeps the single circle leaf x = 0 off the lattice
        "axes": [_axis("x", res["nx"], offset=0.5), _axis("y", res["ny"]), _axis("z", res["nz"])],
        "metric": metric,
        "frame": [[bump, f"sqrt(1 - ({bump})^2)", "0"]],
    }


LINEAR_DIRECTION = ("1", "sqrt(2)", "sqrt(3)")


def linear_flow_spec(res, perturbed=False):
    """Linear flow on the flat 3-torus with rationally independent slopes."""
    metric = "euclidean"
    if perturbed:
        metric = [
            ["1 + 0.3*sin(2*pi*x)^2", "0.1*sin(2*pi*x)", "0"],
            ["0.1*sin(2*pi*x)", "1", "0"],
            ["0", "0", "1 + 0.2*cos(2*pi*x)^2"],
        ]
    n = res["n"]
    return {
        "name": "linear-flow-t3",
        "axes": [_axis("x", n), _axis("y", n), _axis("z", n)],
        "metric": metric,
        "frame": [list(LINEAR_DIRECTION)],
    }


def flat_product_spec(n=6, nz=4):
    """Flat 3-torus foliated by the z-circles (used for the invariant-form reduction)."""
    return {
        "name": "flat-product-flow",
        "axes": [_axis("x", n), _axis("y", n), _axis("z", nz)],
        "metric": "euclidean",
        "frame": [["0", "0", "1"]],
    }


# ---------------------------------------------------------------- catalog
def _E(values, prov, note=""):
    return Expected(tuple(values), prov, note)


FLAG_KEYS = ("riemannian", "bundle_like", "taut", "involutive_normal", "basic_mean_curvature", "connected")


def _flags(riemannian, taut, involutive, basic_kappa):
    return {
        "riemannian": riemannian,
        "taut": taut,
        "involutive_normal": involutive,
        "basic_mean_curvature": basic_kappa,
        "connected": True,
        "bundle_like": riemannian,
    }


def _cases():
    cases = {}
    cases["hopf"] = Case(
        "hopf",
        "su2",
        "Hopf fibration of the round 3-sphere (Peter-Weyl backend)",
        _flags(True, True, False, True),
        {
            "h": [_E((1, 0, 0, 1), "DERIVED", "cohomology of the 3-sphere")],
            "h_b": [_E((1, 0, 1), "PAPER", "Hopf fibration example")],
            "h_a": [_E((0, 1, 0, 1), "PAPER", "Hopf fibration example")],
        },
        {"jmax": 3},
        {"jmax": 2},
    )
    cases["carriere"] = Case(
        "carriere",
        "grid",
        "Carriere flow on the hyperbolic torus bundle, A = [[2,1],[1,1]]",
        _flags(True, False, True, True),
        {
            "h": [
                _E((1, 3, 3, 1), "PAPER", "printed table; inconsistent with the direct-sum statement made for the same case"),
                _E((1, 1, 1, 1), "DERIVED", "mapping torus of hyperbolic A: b1 = 1 + dim ker(A - I) = 1"),
            ],
            "h_b": [_E((1, 1, 0), "PAPER", "Carriere example")],
            "h_a": [
                _E((0, 0, 3, 1), "PAPER", "printed table"),
                _E((0, 0, 1, 1), "DERIVED", "h - h_b by the direct sum for involutive normal bundle"),
            ],
        },
        {"n": 12, "nt": 8},
        {"n": 15, "nt": 10},
        ({"n": 6, "nt": 4}, {"n": 12, "nt": 8}),
        _spec_fn=carriere_spec,
    )
    cases["torus-bundle"] = Case(
        "torus-bundle",
        "grid",
        "Torus bundle with parabolic monodromy, leaves along the bundle direction",
        _flags(False, True, True, True),
        {
            "h": [_E((1, 2, 2, 1), "PAPER", "torus bundle example")],
            "h_b": [_E((1, 1, INF), "PAPER", "H_b^2 is all of the infinite-dimensional basic 2-forms")],
            "h_a": [
                _E((0, 1, 1, 1), "PAPER", "torus bundle example"),
                _E(
                    (0, INF, 1, 1),
                    "DERIVED",
                    "F'(x2)(dx1 - t dx2) - F(x2)dt is antibasic and co-closed, and its pairing with delta of antibasic 2-forms vanishes since d of it is basic",
                ),
            ],
        },
        {"n": 12, "nt": 8},
        {"n": 15, "nt": 10},
        _spec_fn=torus_bundle_spec,
    )
    cases["flat-torus-flow"] = Case(
        "flat-torus-flow",
        "grid",
        "Flow on the flat 2-torus with a band of dense leaves and a band of circles",
        _flags(False, False, True, False),
        {
            "h": [_E((1, 2, 1), "PAPER", "flat torus flow example")],
            "h_b": [_E((1, 1), "PAPER", "flat torus flow example")],
            "h_a": [_E((0, 1, 1), "PAPER", "flat torus flow example")],
        },
        {"nx": 64, "ny": 32},
        {"nx": 80, "ny": 40},
        _spec_fn=flat_torus_flow_spec,
    )
    cases["t3-bump-flow"] = Case(
        "t3-bump-flow",
        "grid",
        "Circle times the flat torus flow, on the 3-torus",
        _flags(False, False, True, False),
        {
            "h": [_E((1, 3, 3, 1), "PAPER", "3-torus bump flow example")],
            "h_b": [_E((1, 1, 0), "PAPER", "3-torus bump flow example")],
            "h_a": [_E((0, 2, 3, 1), "PAPER", "3-torus bump flow example")],
        },
        {"nx": 16, "ny": 16, "nz": 8},
        {"nx": 20, "ny": 20, "nz": 10},
        _spec_fn=t3_bump_flow_spec,
    )
    cases["linear-flow-t3"] = Case(
        "linear-flow-t3",
        "grid",
        "Irrational linear flow on the flat 3-torus (Riemannian, taut)",
        _flags(True, True, True, True),
        {
            "h": [_E((1, 3, 3, 1), "DERIVED", "cohomology of the 3-torus")],
            "h_b": [_E((1, 2, 1), "DERIVED", "constant forms annihilated by the flow direction")],
            "h_a": [_E((0, 1, 2, 1), "DERIVED", "h - h_b by the direct sum for involutive normal bundle")],
        },
        {"n": 8},
        {"n": 10},
        ({"n": 8}, {"n": 16}),
        _spec_fn=linear_flow_spec,
    )
    # metric-dependent flags (involutive normal bundle, basic kappa) for the perturbed metrics
    perturbed_flags = {
        "carriere": (True, True),
        "torus-bundle": (True, False),
        "flat-torus-flow": (True, False),
        "t3-bump-flow": (False, False),
        "linear-flow-t3": (False, False),
    }
    for name, (inv, bk) in perturbed_flags.items():
        base = cases[name]
        fn = base._spec_fn
        var = Case(
            f"{name}+perturbed",
            "grid",
            base.description + ", perturbed metric",
            dict(base.flags, bundle_like=False, involutive_normal=inv, basic_mean_curvature=bk),
            copy.deepcopy(base.expected),
            dict(base.default_resolution),
            dict(base.refined_resolution),
            (),
            True,
            name,
            _spec_fn=lambda res, fn=fn: fn(res, perturbed=True),
        )
        cases[var.name] = var
    return cases


CASES = _cases()
BASE_CASES = ("hopf", "carriere", "torus-bundle", "flat-torus-flow", "t3-bump-flow", "linear-flow-t3")


def get_case(name) -> Case:
    if name not in CASES:
        raise KeyError(f"unknown case {name!r}; known: {', '.join(sorted(CASES))}")
    return CASES[name]


def list_cases():
    return [CASES[k].listing() for k in sorted(CASES)]


def perturbed_variant(name):
    key = f"{name}+perturbed"
    return CASES.get(key)


def resolution_keys(case: Case):
    return tuple(case.default_resolution)


def with_resolution(case: Case, **over):
    res = copy.deepcopy(case.default_resolution)
    res.update({k: v for k, v in over.items() if v is not None})
    return res
