"""Peter-Weyl backend on SU(2) = S^3 with the Hopf flow.

A k-form is sum_{j,m,n,I} c^j_{mnI} D^j_{mn} sigma^I with sigma^1..3 the
left-invariant coframe dual to E_1..E_3.  Conventions (recorded once here):

* dpi(E_k) = -2i J_k on the spin-j representation, so [E_i, E_j] = 2 eps_ijk E_k;
* consequently d sigma^k = C * sigma^i ^ sigma^j for (i, j, k) cyclic, C = -2;
* the metric is g = sum a_i^2 (sigma^i)^2 and the volume is 2 pi^2 a1 a2 a3;
* the Hopf field is xi = E_3 / a_3 with characteristic form chi = a_3 sigma^3.

A left-invariant field acts on the right index n only, so every operator
is block diagonal in (j, m), and blocks with equal j are identical.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

import numpy as np
import scipy.linalg as sla

from . import multilinear as ml
from .blocks import Block, PointwiseOp

STRUCTURE_CONSTANT = -2.0


class Su2Error(ValueError):
    pass


def spin_matrices(two_j: int):
    """(Jx, Jy, Jz) in the basis |j, n>, n = -j..j ascending."""
    j = two_j / 2
    ns = np.arange(-j, j + 1)
    dim = two_j + 1
    Jp = np.zeros((dim, dim))
    for a in range(dim - 1):
        n = ns[a]
        Jp[a + 1, a] = np.sqrt(j * (j + 1) - n * (n + 1))
    Jm = Jp.T
    Jx = (Jp + Jm) / 2
    Jy = (Jp - Jm) / (2j)
    Jz = np.diag(ns)
    return Jx.astype(complex), Jy.astype(complex), Jz.astype(complex)


def frame_action(two_j: int):
    """Matrices of E_1, E_2, E_3 on the n index."""
    return [-2j * J for J in spin_matrices(two_j)]


def wigner_D(two_j: int, alpha, beta, gamma):
    """D^j(g) for g = exp(alpha E3/2) exp(beta E2/2) exp(gamma E3/2) in ZYZ Euler angles."""
    Jx, Jy, Jz = spin_matrices(two_j)
    return sla.expm(-1j * alpha * Jz) @ sla.expm(-1j * beta * Jy) @ sla.expm(-1j * gamma * Jz)


def _dsigma():
    """2-form coefficients of d sigma^k in the basis (12, 13, 23) (0-based (01, 02, 12))."""
    c = STRUCTURE_CONSTANT
    imap = ml.index_map(3, 2)
    out = np.zeros((3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        pair = tuple(sorted((i, j)))
        sign = 1 if (i, j) == pair else -1
        out[k, imap[pair]] = c * sign
    return out


def ce_differential(k: int) -> np.ndarray:
    """Chevalley-Eilenberg differential on Lambda^k (frame-constant coefficients)."""
    n = 3
    if k >= n:
        return np.zeros((0, comb(n, k)))
    ds = _dsigma()
    idx = ml.multi_indices(n, k)
    out = np.zeros((comb(n, k + 1), len(idx)))
    for a, I in enumerate(idx):
        # d(s^{i1} ^ ... ^ s^{ik}) = sum_r (-1)^r s^{i1} ^ .. ^ d s^{ir} ^ .. ^ s^{ik}
        total = np.zeros((1, comb(n, k + 1)))
        for r, ir in enumerate(I):
            left = _basis(n, I[:r])
            right = _basis(n, I[r + 1 :])
            term = ml.wedge(left, ds[ir][None, :], n, r, 2)
            term = ml.wedge(term, right, n, r + 2, k - r - 1)
            total += (-1) ** r * term
        out[:, a] = total[0]
    return out


def _basis(n, I):
    v = np.zeros((1, comb(n, len(I))))
    v[0, ml.index_map(n, len(I))[tuple(I)]] = 1.0
    return v


class Su2Complex:
    """Truncated Peter-Weyl model of (S^3, Hopf flow, Berger metric)."""

    backend = "su2"
    is_complex = True

    def __init__(self, jmax, scales=(1.0, 1.0, 1.0), name="hopf"):
        two_J = Fraction(jmax) * 2
        if two_J.denominator != 1:
            raise Su2Error("J_max must be a multiple of 1/2")
        self.two_J = int(two_J)
        if self.two_J < 2:
            raise Su2Error("J_max must be at least 1")
        self.a = np.asarray(scales, dtype=float)
        if self.a.shape != (3,) or np.any(self.a <= 0):
            raise Su2Error("Berger scales must be three positive numbers")
        self.name = name
        self.n, self.p, self.q = 3, 1, 2
        self.jmax = self.two_J / 2
        self.spins = list(range(self.two_J + 1))  # stored as 2j
        self.volume = 2 * np.pi**2 * float(np.prod(self.a))
        self.flags = {}
        self.checks = {"structure_constant": STRUCTURE_CONSTANT}
        self.metric = np.diag(self.a**2)[None]
        self.ginv = np.diag(self.a**-2.0)[None]
        self._cache = {}
        # mode bookkeeping: one slot per (j, m, n)
        self.nmodes = sum((tj + 1) ** 2 for tj in self.spins)
        self._offsets = {}
        off = 0
        for tj in self.spins:
            self._offsets[tj] = off
            off += (tj + 1) ** 2

    # ------------------------------------------------------------ sizes
    def ncomp(self, k):
        return comb(3, k) if 0 <= k <= 3 else 0

    def dim(self, k):
        return self.nmodes * self.ncomp(k)

    def _slices(self, k):
        """For each 2j: (start, size) of its span in the degree-k coefficient vector."""
        C = self.ncomp(k)
        return {tj: (self._offsets[tj] * C, (tj + 1) ** 2 * C) for tj in self.spins}

    # ------------------------------------------------------------ per-spin operators
    def spin_d(self, tj, k):
        key = ("d", tj, k)
        if key in self._cache:
            return self._cache[key]
        dim = tj + 1
        if k >= 3:
            D = np.zeros((0, dim * self.ncomp(k)), dtype=complex)
        else:
            W = ml.coordinate_wedge(3, k)
            E = frame_action(tj)
            D = sum(np.kron(E[i], W[i]) for i in range(3)) + np.kron(np.eye(dim), ce_differential(k))
        self._cache[key] = D
        return D

    def gram(self, k):
        return ml.gram(self.ginv, k)[0]

    def spin_mass(self, tj, k):
        return self.volume / (tj + 1) * np.kron(np.eye(tj + 1), self.gram(k))

    # ------------------------------------------------------------ full operators
    def _full(self, per_spin, k_dom, k_cod):
        rows = self.dim(k_cod) if 0 <= k_cod <= 3 else 0
        out = np.zeros((rows, self.dim(k_dom)), dtype=complex)
        sd, sc = self._slices(k_dom), self._slices(k_cod) if rows else None
        for tj in self.spins:
            B = per_spin(tj)
            r, c = B.shape
            d0 = sd[tj][0]
            c0 = sc[tj][0] if rows else 0
            for m in range(tj + 1):
                out[c0 + m * r : c0 + (m + 1) * r, d0 + m * c : d0 + (m + 1) * c] = B
        return out

    def d(self, k):
        key = ("D", k)
        if key not in self._cache:
            self._cache[key] = self._full(lambda tj: self.spin_d(tj, k), k, k + 1)
        return self._cache[key]

    def mass(self, k):
        key = ("M", k)
        if key not in self._cache:
            self._cache[key] = self._full(lambda tj: self.spin_mass(tj, k), k, k)
        return self._cache[key]

    def mass_inv(self, k):
        key = ("Minv", k)
        if key not in self._cache:
            self._cache[key] = self._full(lambda tj: np.linalg.inv(self.spin_mass(tj, k)), k, k)
        return self._cache[key]

    def delta(self, k):
        key = ("delta", k)
        if key in self._cache:
            return self._cache[key]
        if k <= 0:
            D = np.zeros((0, self.dim(0)), dtype=complex)
        else:
            D = self.mass_inv(k - 1) @ self.d(k - 1).conj().T @ self.mass(k)
        self._cache[key] = D
        return D

    def inner(self, k, x, y):
        return complex(np.vdot(y, self.mass(k) @ x))

    # ------------------------------------------------------------ reality
    def conjugation(self, x, k):
        """The antilinear map whose fixed points are real forms."""
        C = self.ncomp(k)
        out = np.empty_like(np.asarray(x, dtype=complex))
        for tj in self.spins:
            s0, size = self._slices(k)[tj]
            dim = tj + 1
            blk = np.asarray(x[s0 : s0 + size]).reshape(dim, dim, C)
            flipped = blk[::-1, ::-1, :]
            idx = np.arange(dim)
            sign = (-1.0) ** (idx[:, None] - idx[None, :])
            out[s0 : s0 + size] = (sign[:, :, None] * np.conj(flipped)).reshape(-1)
        return out

    def realify(self, x, k):
        return 0.5 * (x + self.conjugation(x, k))

    def reality_residual(self, x, k):
        x = np.asarray(x)
        return float(np.max(np.abs(x - self.conjugation(x, k)))) if x.size else 0.0

    def random_form(self, k, rng):
        x = rng.standard_normal(self.dim(k)) + 1j * rng.standard_normal(self.dim(k))
        return self.realify(x, k)

    def block_component(self, x, k, tj, m):
        s0, size = self._slices(k)[tj]
        bs = size // (tj + 1)
        return x[s0 + m * bs : s0 + (m + 1) * bs]

    # ------------------------------------------------------------ invariant forms
    def invariant_form(self, coeffs, k):
        """Full vector of the left-invariant form sum coeffs_I sigma^I."""
        x = np.zeros(self.dim(k), dtype=complex)
        x[: self.ncomp(k)] = coeffs
        return x

    def constant_function(self, c=1.0):
        return self.invariant_form([c], 0)

    def invariant_part(self, x, k):
        C = self.ncomp(k)
        x = np.asarray(x)
        rest = np.max(np.abs(x[C:])) if x.size > C else 0.0
        if rest > 1e-12 * max(1.0, np.max(np.abs(x))):
            raise Su2Error(
                "wedge/contract with a non-invariant form would need Clebsch-Gordan products beyond this backend"
            )
        return x[:C]

    def wedge_op(self, form, k1, k):
        a = self.invariant_part(form, k1)
        return PointwiseOp(ml.wedge_matrix(a[None], 3, k1, k), k, k1 + k)

    def interior_op(self, X, k):
        return PointwiseOp(ml.interior_matrix(np.asarray(X, dtype=complex)[None], 3, k), k, k - 1)

    def contract_op(self, form, k1, k):
        a = self.invariant_part(form, k1)
        W = ml.wedge_matrix(a[None], 3, k1, k - k1)
        A = ml.adjoint_pointwise(W, self.gram(k - k1)[None], self.gram(k)[None])
        return PointwiseOp(A, k, k - k1)

    def full(self, op: PointwiseOp):
        m = op.mat[0]
        return np.kron(np.eye(self.nmodes), m)

    def pointwise_gram(self, k):
        return self.gram(k)[None]

    def pointwise_norm_sq(self, form, k):
        a = self.invariant_part(form, k)
        return float(np.real(np.conj(a) @ self.gram(k) @ a))

    def pointwise_inner_op(self, form, k):
        """Operator alpha -> (alpha, form) pointwise, for an invariant form."""
        a = self.invariant_part(form, k)
        row = np.conj(a) @ self.gram(k)
        return PointwiseOp(row[None, None, :], k, 0)

    def multiply_function(self, f, x, k):
        if np.ndim(f) != 0:
            raise Su2Error("only constant multipliers are supported on this backend")
        return f * x

    def star_matrix(self, k):
        return ml.hodge_star_matrix(self.metric, k)

    def star(self, x, k, metric=None):
        g = self.metric if metric is None else metric
        return self.full(PointwiseOp(ml.hodge_star_matrix(g, k), k, 3 - k)) @ x

    def metric_change(self, x, k, metric2):
        """B^k = *' o *^{-1} towards another left-invariant metric."""
        sign = (-1) ** (k * (3 - k))
        B = sign * ml.hodge_star_matrix(np.asarray(metric2), 3 - k) @ self.star_matrix(k)
        return self.full(PointwiseOp(B, k, k)) @ x

    def wedge(self, a, b, k1, k2):
        """a ^ b where a is invariant."""
        return self.full(self.wedge_op(a, k1, k2)) @ b

    def interior(self, X, x, k):
        return self.full(self.interior_op(X, k)) @ x

    def frame_field(self, a=0):
        return np.array([0.0, 0.0, 1.0 / self.a[2]])

    @property
    def frame(self):
        return self.frame_field()[None, None, :]

    # ------------------------------------------------------------ blocks
    def blocks(self):
        key = ("blocks",)
        if key not in self._cache:
            self._cache[key] = [SpinBlock(self, tj) for tj in self.spins]
        return self._cache[key]


class SpinBlock(Block):
    """All (j, m) blocks for a fixed j; they are identical, so weight = 2j + 1."""

    def __init__(self, S: Su2Complex, two_j: int):
        self.S = S
        self.two_j = two_j
        self.key = (Fraction(two_j, 2),)
        self.weight = two_j + 1
        self.copies = two_j + 1
        self.dims = [(two_j + 1) * S.ncomp(k) for k in range(4)]

    def d(self, k):
        return self.S.spin_d(self.two_j, k)

    def mass(self, k):
        return self.S.spin_mass(self.two_j, k).astype(complex)

    def pointwise(self, op: PointwiseOp):
        return np.kron(np.eye(self.two_j + 1), op.mat[0])

    def lift(self, k, v, copy=0):
        x = np.zeros(self.S.dim(k), dtype=complex)
        s0, size = self.S._slices(k)[self.two_j]
        bs = size // (self.two_j + 1)
        x[s0 + copy * bs : s0 + (copy + 1) * bs] = v
        return x

    def restrict(self, k, x, copy=0):
        return np.asarray(self.S.block_component(np.asarray(x), k, self.two_j, copy), dtype=complex)
