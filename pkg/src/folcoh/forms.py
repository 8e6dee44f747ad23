"""Degree-tagged form fields and the backend-neutral operator API.

The backends work on flat coefficient vectors; this module wraps those in
``FormField`` so that degree bookkeeping and range checks happen in one place.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .foliation import BasicStructure, Calculus, FoliationPackage, named_operator
from .grid import GridComplex
from .su2 import Su2Complex


class DegreeError(ValueError):
    pass


@dataclass(frozen=True)
class FormField:
    complex: object
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        C, k = self.complex, self.degree
        if not 0 <= k <= C.n:
            raise DegreeError(f"degree {k} outside [0, {C.n}]")
        c = np.asarray(self.coeffs)
        if c.ndim != 1 or c.size != C.dim(k):
            raise DegreeError(f"expected {C.dim(k)} coefficients for degree {k}, got {c.size}")

    @property
    def n(self):
        return self.complex.n

    def field(self):
        """Coefficients as (points, C(n, k)) on the grid backend."""
        return self.coeffs.reshape(-1, comb(self.n, self.degree))

    def _same(self, other):
        if other.complex is not self.complex or other.degree != self.degree:
            raise DegreeError("forms live on different complexes or degrees")

    def __add__(self, other):
        self._same(other)
        return FormField(self.complex, self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._same(other)
        return FormField(self.complex, self.degree, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return FormField(self.complex, self.degree, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def form(C, k, coeffs):
    return FormField(C, k, np.asarray(coeffs))


def zero_form(C, k):
    dtype = complex if getattr(C, "is_complex", False) else float
    return FormField(C, k, np.zeros(C.dim(k), dtype=dtype))


def sample(C: GridComplex, k, fn):
    """Grid form from ``fn(**coords)`` returning shape (points, C(n, k)) or (points,)."""
    return FormField(C, k, C.sample_form(k, fn))


def build_grid(spec: dict) -> GridComplex:
    return GridComplex(spec)


def build_su2(jmax, scales=(1.0, 1.0, 1.0)) -> Su2Complex:
    return Su2Complex(jmax, tuple(scales))


def exterior_derivative(w: FormField) -> FormField:
    C, k = w.complex, w.degree
    if k == C.n:
        return zero_form(C, k)
    return FormField(C, k + 1, C.d(k) @ w.coeffs)


def codifferential(w: FormField) -> FormField:
    C, k = w.complex, w.degree
    if k == 0:
        return zero_form(C, 0)
    return FormField(C, k - 1, C.delta(k) @ w.coeffs)


def wedge(a: FormField, b: FormField) -> FormField:
    if a.complex is not b.complex:
        raise DegreeError("forms live on different complexes")
    k = a.degree + b.degree
    if k > a.n:
        raise DegreeError(f"wedge degree {k} exceeds dimension {a.n}")
    return FormField(a.complex, k, a.complex.wedge(a.coeffs, b.coeffs, a.degree, b.degree))


def interior_product(X, w: FormField) -> FormField:
    if w.degree == 0:
        raise DegreeError("interior product of a function")
    return FormField(w.complex, w.degree - 1, w.complex.interior(X, w.coeffs, w.degree))


def inner_product(a: FormField, b: FormField) -> float:
    a._same(b)
    v = a.complex.inner(a.degree, a.coeffs, b.coeffs)
    return float(np.real(v))


def hodge_star(w: FormField, metric=None) -> FormField:
    C = w.complex
    return FormField(C, C.n - w.degree, C.star(w.coeffs, w.degree, metric))


def metric_change_map(w: FormField, metric2) -> FormField:
    """B^k = *' *^{-1} from the complex's metric to ``metric2``."""
    m2 = np.asarray(metric2, dtype=float)
    if m2.shape != np.shape(w.complex.metric):
        raise ValueError(f"metric shape {m2.shape} does not match {np.shape(w.complex.metric)}")
    ev = np.linalg.eigvalsh((m2 + np.swapaxes(m2, -1, -2)) / 2)
    if np.min(ev) <= 1e-8 or np.max(np.abs(m2 - np.swapaxes(m2, -1, -2))) > 1e-12:
        raise ValueError("second metric is not symmetric positive definite")
    return FormField(w.complex, w.degree, w.complex.metric_change(w.coeffs, w.degree, m2))


# ---------------------------------------------------------------- foliation level


class Foliated:
    """A complex together with its basic structure and operator calculus."""

    def __init__(self, C, tau=None, audit=True):
        kw = {} if tau is None else {"tau": tau}
        self.C = C
        self.structure = BasicStructure(C, audit=audit, **kw)
        self.calc = Calculus(C, self.structure)

    @property
    def package(self) -> FoliationPackage:
        return self.calc.pkg

    def _wrap(self, k, x):
        return FormField(self.C, k, x)

    def project_basic(self, w: FormField) -> FormField:
        return self._wrap(w.degree, self.calc.Pb(w.coeffs, w.degree))

    def project_antibasic(self, w: FormField) -> FormField:
        return self._wrap(w.degree, self.calc.Pa(w.coeffs, w.degree))

    def epsilon(self, w: FormField) -> FormField:
        if w.degree == 0:
            return zero_form(self.C, 0)
        return self._wrap(w.degree - 1, self.calc.eps(w.coeffs, w.degree))

    def epsilon_star(self, w: FormField) -> FormField:
        if w.degree == self.C.n:
            return zero_form(self.C, w.degree)
        return self._wrap(w.degree + 1, self.calc.eps_star(w.coeffs, w.degree))

    def apply(self, name, w: FormField):
        h = named_operator(self.calc, name, w.degree)
        out = h(w.coeffs)
        if isinstance(h.k_cod, tuple):
            return {k: self._wrap(k, v) for k, v in out.items()}
        return self._wrap(h.k_cod, out)


def derive_foliation_package(C, tau=None) -> FoliationPackage:
    return Foliated(C, tau).package
