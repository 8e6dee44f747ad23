"""Foliation data, basic subspaces, projectors and the named operators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import linalg
from . import multilinear as ml
from .blocks import PointwiseOp


class UnsupportedConfiguration(ValueError):
    pass


class MissingBasis(RuntimeError):
    pass


# ---------------------------------------------------------------- handles


@dataclass
class LinearOperatorHandle:
    """A named linear map between form degrees.

    ``k_cod`` is an int, or a tuple of degrees for graded (Dirac-type)
    operators whose ``apply`` returns a dict ``{degree: vector}``.
    """

    name: str
    k_dom: int
    k_cod: object
    apply: Callable
    adjoint: Callable | None = None

    @property
    def adjoint_available(self):
        return self.adjoint is not None

    def __call__(self, x):
        return self.apply(x)


def _mv(A, x):
    return A @ x


# ---------------------------------------------------------------- package


@dataclass
class FoliationPackage:
    backend: object
    xi: np.ndarray  # unit leafwise field (flows)
    chi: np.ndarray
    kappa: np.ndarray
    kappa_a: np.ndarray | None
    phi0: np.ndarray
    nu: np.ndarray | None = None
    kappa_N: np.ndarray | None = None
    invariants: dict = field(default_factory=dict)


def unit_leaf_field(C):
    if C.p != 1:
        raise UnsupportedConfiguration("unit leaf field is defined for flows only")
    if C.backend == "su2":
        return C.frame_field()
    X = C.frame[:, 0, :]
    norm = np.sqrt(np.einsum("pi,pij,pj->p", X, C.metric, X))
    return X / norm[:, None]


def _is_product(C):
    """Frame vectors constant and coordinate aligned."""
    if C.backend != "grid":
        return False
    F = C.frame
    if np.max(np.abs(F - F[:1])) > 1e-14:
        return False
    for a in range(C.p):
        if np.count_nonzero(np.abs(F[0, a]) > 1e-14) != 1:
            return False
    return True


def characteristic_form(C):
    """chi as a full coefficient vector of degree p."""
    if C.backend == "su2":
        return C.invariant_form([0.0, 0.0, C.a[2]], 1)
    if C.p == 1:
        xi = unit_leaf_field(C)
        return np.einsum("pij,pj->pi", C.metric, xi).reshape(-1)
    if not _is_product(C):
        raise UnsupportedConfiguration("leaf dimension p > 1 is supported for product foliations only")
    # Gram-Schmidt of the leaf frame in g, then wedge the metric duals
    E = []
    for a in range(C.p):
        v = C.frame[:, a, :].copy()
        for e in E:
            v -= np.einsum("pi,pij,pj->p", v, C.metric, e)[:, None] * e
        v /= np.sqrt(np.einsum("pi,pij,pj->p", v, C.metric, v))[:, None]
        E.append(v)
    chi = np.einsum("pij,pj->pi", C.metric, E[0])
    for a in range(1, C.p):
        chi = ml.wedge(chi, np.einsum("pij,pj->pi", C.metric, E[a]), C.n, a, 1)
    return chi.reshape(-1)


def _leaf_frame_unit(C):
    if C.p == 1:
        return [unit_leaf_field(C)]
    E = []
    for a in range(C.p):
        v = C.frame[:, a, :].copy()
        for e in E:
            v -= np.einsum("pi,pij,pj->p", v, C.metric, e)[:, None] * e
        v /= np.sqrt(np.einsum("pi,pij,pj->p", v, C.metric, v))[:, None]
        E.append(v)
    return E


def derive_characteristic(C):
    """chi, kappa and phi0 from Rummler's formula d chi = -kappa ^ chi + phi0.

    Contracting with the unit leaf frame gives kappa = (-1)^(p+1) i_{E_p}..i_{E_1} d chi
    (for flows, kappa = i_xi d chi).
    """
    if C.p < 1:
        raise UnsupportedConfiguration("leaf dimension must be at least 1")
    p = C.p
    chi = characteristic_form(C)
    dchi = C.d(p) @ chi
    if C.backend == "su2":
        xi = C.frame_field()
        kappa = C.interior(xi, dchi, 2)
        phi0 = dchi + C.wedge(kappa, chi, 1, 1) if np.any(kappa) else dchi.copy()
        return xi, chi, kappa, phi0
    frames = _leaf_frame_unit(C)
    cur, deg = dchi, p + 1
    for E in frames:
        cur = C.interior(E, cur, deg)
        deg -= 1
    kappa = (-1) ** (p + 1) * cur
    phi0 = dchi + C.wedge(kappa, chi, 1, p)
    xi = frames[0] if p == 1 else None
    return xi, chi, kappa, phi0


def normal_data(C, chi):
    """nu = *chi and kappa_N = i_N d nu for codimension one."""
    if C.q != 1 or C.backend != "grid":
        return None, None
    nu = C.star(chi, C.p)
    N = np.einsum("pij,pj->pi", C.ginv, C.as_field(nu, 1))
    kappa_N = C.interior(N, C.d(1) @ nu, 2)
    return nu, kappa_N


# ---------------------------------------------------------------- basic structure


def frame_interior_ops(C, k):
    """Interior products with each raw frame vector, degree k -> k-1."""
    if k < 1 or k > C.n:
        return []
    if C.backend == "su2":
        return [C.interior_op(C.frame_field(), k)]
    return [C.interior_op(C.frame[:, a, :], k) for a in range(C.p)]


def basic_constraint(C, k) -> LinearOperatorHandle:
    """omega -> (i_X omega ; i_X d omega) stacked over the frame."""
    ops_k = [C.full(op) for op in frame_interior_ops(C, k)]
    ops_k1 = [C.full(op) for op in frame_interior_ops(C, k + 1)] if k < C.n else []
    D = C.d(k)

    def apply(x):
        parts = [A @ x for A in ops_k]
        if ops_k1:
            dx = D @ x
            parts += [A @ dx for A in ops_k1]
        return np.concatenate(parts) if parts else np.zeros(0)

    return LinearOperatorHandle(f"constraint_{k}", k, None, apply)


@dataclass
class SubspaceBasis:
    degree: int
    Q: np.ndarray  # columns, full coefficient space, M-orthonormal
    gram_residual: float
    constraint_residual: float
    gap_ratio: float

    @property
    def dim(self):
        return self.Q.shape[1]


class BasicStructure:
    """Per-block basic kernels and full-space bases for every degree."""

    def __init__(self, C, tau=linalg.DEFAULT_TAU, audit=True):
        self.C = C
        self.tau = tau
        self.blocks = C.blocks()
        n = C.n
        self.families = {}
        self.block_Q = {}  # (block index, k) -> M-orthonormal basic basis in block coords
        svds = {}
        for k in range(n + 1):
            fam = linalg.SpectrumFamily(f"constraint_{k}", tau)
            ops_k = frame_interior_ops(C, k)
            ops_k1 = frame_interior_ops(C, k + 1) if k < n else []
            for bi, B in enumerate(self.blocks):
                if getattr(B, "aliased", False):
                    svds[(bi, k)] = None
                    continue
                A = B.constraint(ops_k, ops_k1, k)
                if A.shape[0] == 0:
                    svds[(bi, k)] = (np.eye(B.dims[k], dtype=complex), np.zeros(0), A.shape)
                    fam.add(bi, np.zeros(0), B.weight)
                    continue
                U, s, Vh = linalg.svd(A, full=True)
                svds[(bi, k)] = (Vh, s, A.shape)
                fam.add(bi, s, B.weight)
            self.families[k] = fam
        self.gap = {}
        for k in range(n + 1):
            fam = self.families[k]
            self.gap[k] = fam.gap_ratio()
            if audit:
                fam.audit()
            thr = fam.threshold()
            for bi, B in enumerate(self.blocks):
                if svds[(bi, k)] is None:
                    self.block_Q[(bi, k)] = np.zeros((B.dims[k], 0), dtype=complex)
                    continue
                Vh, s, shape = svds[(bi, k)]
                r = int(np.sum(s > thr)) if s.size and thr > 0 else 0
                K = Vh[r:].conj().T
                M = B.mass(k)
                self.block_Q[(bi, k)] = _m_orthonormalize(K, M)
        self._full = {}

    def block_dim(self, bi, k):
        return self.block_Q[(bi, k)].shape[1]

    def dim(self, k):
        return sum(B.weight * self.block_dim(bi, k) for bi, B in enumerate(self.blocks))

    def full_basis(self, k) -> SubspaceBasis:
        if k in self._full:
            return self._full[k]
        C = self.C
        cols = []
        for bi, B in enumerate(self.blocks):
            Qb = self.block_Q[(bi, k)]
            for c in range(Qb.shape[1]):
                for copy in range(B.copies):
                    cols.append(B.lift(k, Qb[:, c], copy))
        expected = self.dim(k)
        N = C.dim(k)
        if not cols:
            Q = np.zeros((N, 0), dtype=complex if C.is_complex else float)
        elif C.is_complex:
            Q = np.array(cols).T
        else:
            Z = np.array(cols).T
            Z = np.hstack([Z.real, Z.imag])
            Q = _m_orthonormalize_real(Z, C.mass(k), expected)
        M = C.mass(k)
        G = Q.conj().T @ (M @ Q) if Q.shape[1] else np.zeros((0, 0))
        gram_res = float(np.max(np.abs(G - np.eye(Q.shape[1])))) if Q.shape[1] else 0.0
        con = basic_constraint(C, k)
        cres = 0.0
        for c in range(Q.shape[1]):
            v = Q[:, c]
            val = con(v)
            if val.size:
                cres = max(cres, float(np.linalg.norm(val) / max(np.linalg.norm(v), 1e-300)))
        basis = SubspaceBasis(k, Q, gram_res, cres, self.gap[k])
        self._full[k] = basis
        return basis


def _m_orthonormalize(K, M):
    if K.shape[1] == 0:
        return K
    G = K.conj().T @ M @ K
    w, V = np.linalg.eigh(G)
    return K @ (V / np.sqrt(w))


def _m_orthonormalize_real(Z, M, expected):
    G = Z.T @ (M @ Z)
    G = 0.5 * (G + G.T)
    w, V = np.linalg.eigh(G)
    keep = w > 1e-8 * w.max()
    if int(keep.sum()) != expected:
        raise linalg.IllConditionedError("real basic basis", float(keep.sum()), w)
    return Z @ (V[:, keep] / np.sqrt(w[keep]))


def basic_basis(C, k, structure: BasicStructure | None = None) -> SubspaceBasis:
    if C.p < 1:
        raise UnsupportedConfiguration("leaf dimension must be at least 1")
    structure = structure or BasicStructure(C)
    return structure.full_basis(k)


# ---------------------------------------------------------------- projectors and zoo


class Calculus:
    """Full-space operator calculus for one complex and its basic structure."""

    def __init__(self, C, structure: BasicStructure):
        self.C = C
        self.S = structure
        self.n = C.n
        self.Q = {k: structure.full_basis(k).Q for k in range(C.n + 1)}
        self.M = {k: C.mass(k) for k in range(C.n + 1)}
        self.D = {k: C.d(k) for k in range(C.n + 1)}
        self.Dl = {k: C.delta(k) for k in range(C.n + 1)}
        xi, chi, kappa, phi0 = derive_characteristic(C)
        kappa_a = self.Pa(kappa, 1)
        nu, kappa_N = normal_data(C, chi)
        self.pkg = FoliationPackage(C, xi, chi, kappa, kappa_a, phi0, nu, kappa_N)
        self._eps = {}
        self._eps_star = {}
        self._package_invariants()

    def _package_invariants(self):
        C, pkg = self.C, self.pkg
        inv = pkg.invariants
        p = C.p
        dchi = C.d(p) @ pkg.chi
        rum = dchi + C.wedge(pkg.kappa, pkg.chi, 1, p) - pkg.phi0
        inv["rummler_residual"] = float(np.max(np.abs(rum))) if rum.size else 0.0
        if p == 1:
            ip = C.interior(pkg.xi, pkg.phi0, 2)
            inv["i_xi_phi0"] = float(np.max(np.abs(ip)))
            inv["i_xi_chi_minus_1"] = float(np.max(np.abs(C.interior(pkg.xi, pkg.chi, 1) - C.constant_function())))
        if C.backend == "grid":
            nrm = C.pointwise_norm_sq(pkg.chi, p)
        else:
            nrm = np.array([C.pointwise_norm_sq(pkg.chi, p)])
        inv["chi_unit_residual"] = float(np.max(np.abs(np.sqrt(nrm) - 1)))
        inv["kappa_sup"] = _sup_norm(C, pkg.kappa, 1)
        inv["kappa_a_sup"] = _sup_norm(C, pkg.kappa_a, 1)
        inv["phi0_sup"] = _sup_norm(C, pkg.phi0, p + 1)
        if pkg.kappa_N is not None:
            kn = np.sqrt(C.pointwise_norm_sq(pkg.kappa_N, 1))
            inv["kappa_N_min"] = float(np.min(kn))

    # projectors ---------------------------------------------------------
    def Pb(self, x, k):
        if not 0 <= k <= self.n:
            return x
        Q = self.Q[k]
        if Q.shape[1] == 0:
            return np.zeros_like(x)
        return Q @ (Q.conj().T @ (self.M[k] @ x))

    def Pa(self, x, k):
        return x - self.Pb(x, k)

    # primitive maps with degree bookkeeping --------------------------------
    def d(self, x, k):
        return self.D[k] @ x

    def delta(self, x, k):
        return self.Dl[k] @ x

    def _pointwise_full(self, op):
        return self.C.full(op)

    def eps_matrix(self, k):
        """epsilon on degree k: -kappa_a contraction + (-1)^p (phi0 contraction)(chi ^)."""
        if k in self._eps:
            return self._eps[k]
        C, pkg, p = self.C, self.pkg, self.C.p
        N_out = C.dim(k - 1) if k >= 1 else 0
        if k < 1:
            E = sp.csr_matrix((0, C.dim(k))) if not C.is_complex else np.zeros((0, C.dim(k)))
        else:
            op = -C.contract_op(pkg.kappa_a, 1, k)
            if k + p <= C.n:
                second = C.contract_op(pkg.phi0, p + 1, k + p) @ C.wedge_op(pkg.chi, p, k)
                op = op + second.scaled((-1) ** p)
            E = C.full(op)
        self._eps[k] = E
        return E

    def eps_star_matrix(self, k):
        """epsilon* on degree k: -kappa_a ^ + (-1)^p (chi contraction)(phi0 ^)."""
        if k in self._eps_star:
            return self._eps_star[k]
        C, pkg, p = self.C, self.pkg, self.C.p
        if k >= C.n:
            E = sp.csr_matrix((0, C.dim(k))) if not C.is_complex else np.zeros((0, C.dim(k)))
        else:
            op = -C.wedge_op(pkg.kappa_a, 1, k)
            if k + p + 1 <= C.n:
                second = C.contract_op(pkg.chi, p, k + p + 1) @ C.wedge_op(pkg.phi0, p + 1, k)
                op = op + second.scaled((-1) ** p)
            E = C.full(op)
        self._eps_star[k] = E
        return E

    def eps(self, x, k):
        return self.eps_matrix(k) @ x

    def eps_star(self, x, k):
        return self.eps_star_matrix(k) @ x

    # composite named operators ---------------------------------------------
    def d_a(self, x, k):
        return self.Pa(self.d(self.Pa(x, k), k), k + 1)

    def delta_a(self, x, k):
        return self.Pa(self.delta(self.Pa(x, k), k), k - 1)

    def d_b(self, x, k):
        return self.Pb(self.d(self.Pb(x, k), k), k + 1)

    def delta_b(self, x, k):
        return self.Pb(self.delta(self.Pb(x, k), k), k - 1)

    def laplacian(self, x, k):
        out = np.zeros_like(x, dtype=np.result_type(x, float))
        if k < self.n:
            out = out + self.delta(self.d(x, k), k + 1)
        if k > 0:
            out = out + self.d(self.delta(x, k), k - 1)
        return out

    def laplacian_a(self, x, k):
        out = np.zeros_like(x, dtype=np.result_type(x, float))
        if k < self.n:
            out = out + self.delta_a(self.d_a(x, k), k + 1)
        if k > 0:
            out = out + self.d_a(self.delta_a(x, k), k - 1)
        return out

    def laplacian_b(self, x, k):
        out = np.zeros_like(x, dtype=np.result_type(x, float))
        if k < self.n:
            out = out + self.delta_b(self.d_b(x, k), k + 1)
        if k > 0:
            out = out + self.d_b(self.delta_b(x, k), k - 1)
        return out

    def lap_tilde(self, x, k):
        """Delta + delta P_b eps* + P_b eps* delta."""
        out = self.laplacian(x, k)
        if k < self.n:
            out = out + self.delta(self.Pb(self.eps_star(x, k), k + 1), k + 1)
        if k > 0:
            out = out + self.Pb(self.eps_star(self.delta(x, k), k - 1), k)
        return out

    def lap_tilde_star(self, x, k):
        """Delta + eps P_b d + d eps P_b."""
        out = self.laplacian(x, k)
        if k < self.n:
            out = out + self.eps(self.Pb(self.d(x, k), k + 1), k + 1)
        if k > 0:
            out = out + self.d(self.eps(self.Pb(x, k), k), k - 1)
        return out

    def lap_bar(self, x, k):
        """Delta - eps P_b eps*."""
        out = self.laplacian(x, k)
        if k < self.n:
            out = out - self.eps(self.Pb(self.eps_star(x, k), k + 1), k + 1)
        return out

    def lap_eps(self, x, k):
        """Delta + eps* delta + delta eps*."""
        out = self.laplacian(x, k)
        if k > 0:
            out = out + self.eps_star(self.delta(x, k), k - 1)
        if k < self.n:
            out = out + self.delta(self.eps_star(x, k), k + 1)
        return out

    def dirac_a(self, x, k):
        out = {}
        if k < self.n:
            out[k + 1] = self.d_a(x, k)
        if k > 0:
            out[k - 1] = self.delta_a(x, k)
        return out

    def dirac_eps(self, x, k):
        out = {}
        if k < self.n:
            out[k + 1] = self.d(x, k) + self.eps_star(x, k)
        if k > 0:
            out[k - 1] = self.delta(x, k)
        return out

    def inner(self, k, x, y):
        return complex(np.vdot(y, self.M[k] @ x))

    def norm(self, k, x):
        return float(np.sqrt(max(np.real(self.inner(k, x, x)), 0.0)))


NAMED = {
    "d": ("d", +1),
    "δ": ("delta", -1),
    "d_a": ("d_a", +1),
    "δ_a": ("delta_a", -1),
    "d_b": ("d_b", +1),
    "δ_b": ("delta_b", -1),
    "Δ": ("laplacian", 0),
    "Δ_a": ("laplacian_a", 0),
    "Δ_b": ("laplacian_b", 0),
    "Δ^ε": ("lap_eps", 0),
    "Δ̃": ("lap_tilde", 0),
    "Δ̃*": ("lap_tilde_star", 0),
    "Δ̄": ("lap_bar", 0),
    "D_a": ("dirac_a", None),
    "D^ε": ("dirac_eps", None),
}
ALIASES = {
    "delta": "δ",
    "delta_a": "δ_a",
    "delta_b": "δ_b",
    "Delta": "Δ",
    "Delta_a": "Δ_a",
    "Delta_b": "Δ_b",
    "Delta_eps": "Δ^ε",
    "Delta_tilde": "Δ̃",
    "Delta_tilde_star": "Δ̃*",
    "Delta_bar": "Δ̄",
    "D_eps": "D^ε",
}
_ADJOINTS = {"d": "δ", "δ": "d", "d_a": "δ_a", "δ_a": "d_a", "d_b": "δ_b", "δ_b": "d_b"}
_SELF_ADJOINT = {"Δ", "Δ_a", "Δ_b", "D_a"}


def named_operator(calc: Calculus, name: str, k: int) -> LinearOperatorHandle:
    name = ALIASES.get(name, name)
    if name not in NAMED:
        raise KeyError(f"unknown operator {name!r}; known: {sorted(NAMED)}")
    method, shift = NAMED[name]
    fn = getattr(calc, method)
    k_cod = (k - 1, k + 1) if shift is None else k + shift
    adjoint = None
    if name in _ADJOINTS:
        adj_method = NAMED[_ADJOINTS[name]][0]
        adjoint = lambda y, f=getattr(calc, adj_method): f(y, k_cod)
    elif name in _SELF_ADJOINT:
        adjoint = lambda y: fn(y, k) if shift is not None else None
    return LinearOperatorHandle(name, k, k_cod, lambda x: fn(x, k), adjoint)


def _sup_norm(C, x, k):
    if x is None:
        return 0.0
    if C.backend == "grid":
        return float(np.sqrt(np.max(C.pointwise_norm_sq(x, k)))) if x.size else 0.0
    return float(np.sqrt(C.pointwise_norm_sq(x, k)))
