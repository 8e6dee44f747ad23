"""Betti numbers, antibasic spectra and Hodge decomposition.

All dense work happens per block.  Within a block of degree k let L_k be
the Cholesky factor of the mass matrix; in the coordinates y = L_k^H x the
inner product is Euclidean and

    d~_k = L_{k+1}^H d_k L_k^{-H},     delta~ = d~^H.

Q~_k = L_k^H Q_k is an orthonormal basis of the basic subspace and R~_k
of its complement, so the antibasic operators are

    delta_a^k = R~_{k-1}^H d~_{k-1}^H R~_k,    d_a^k = R~_{k+1}^H d~_k R~_k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import linalg
from .foliation import BasicStructure, Calculus

FAMILIES = ("d", "dirac", "d_b", "dirac_b", "delta_a", "d_a", "dirac_a")


class HodgeMismatch(RuntimeError):
    def __init__(self, rank, harmonic, spectra):
        self.rank = rank
        self.harmonic = harmonic
        self.spectra = spectra
        super().__init__(f"antibasic Betti numbers disagree: rank {rank} vs harmonic {harmonic}")


class NotAntibasic(ValueError):
    pass


@dataclass
class BlockAlgebra:
    """Dense per-block matrices in mass-orthonormal coordinates."""

    L: dict = field(default_factory=dict)
    dt: dict = field(default_factory=dict)
    Qt: dict = field(default_factory=dict)
    Rt: dict = field(default_factory=dict)
    db: dict = field(default_factory=dict)
    da: dict = field(default_factory=dict)
    dla: dict = field(default_factory=dict)
    svd: dict = field(default_factory=dict)  # (family, k) -> (U, s, Vh)


def _stack(top, bottom, ncols, dtype=complex):
    parts = [m for m in (top, bottom) if m is not None and m.shape[0]]
    if not parts:
        return np.zeros((0, ncols), dtype=dtype)
    return np.vstack(parts)


def _pad_sigma(s, ncols):
    out = np.zeros(ncols)
    out[: min(len(s), ncols)] = s[:ncols]
    return out


class CohomologyEngine:
    """Computes and caches everything that depends on block linear algebra."""

    def __init__(self, C, tau=linalg.DEFAULT_TAU, structure: BasicStructure | None = None, audit=True):
        self.C = C
        self.tau = tau
        self.S = structure or BasicStructure(C, tau, audit=audit)
        self.blocks = self.S.blocks
        self.n = C.n
        self.alg = [self._block_algebra(bi, B) for bi, B in enumerate(self.blocks)]
        self.families = {(f, k): linalg.SpectrumFamily(f"{f}_{k}", tau) for f in FAMILIES for k in range(self.n + 1)}
        for bi, (B, A) in enumerate(zip(self.blocks, self.alg)):
            for (fam, k), (U, s, Vh) in A.svd.items():
                self.families[(fam, k)].add(bi, s, B.weight)
        self.scale = max([F.sigma_max for (fam, k), F in self.families.items() if fam == "d"] + [0.0])
        for F in self.families.values():
            F.scale = self.scale
        self.audit_ok = True
        self.gaps = {}
        for key, fam in self.families.items():
            if not fam.entries:
                continue
            self.gaps[key] = fam.gap_ratio()
            if audit:
                fam.audit()
        self._calc = None

    # ------------------------------------------------------------ block algebra
    def _block_algebra(self, bi, B):
        n = self.n
        A = BlockAlgebra()
        Linv_H = {}
        for k in range(n + 1):
            M = B.mass(k)
            L = linalg.cholesky_factor(M) if M.shape[0] else M
            A.L[k] = L
            Linv_H[k] = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True).conj().T if L.shape[0] else L
            Q = self.S.block_Q[(bi, k)]
            Qt = L.conj().T @ Q
            A.Qt[k] = Qt
            A.Rt[k] = linalg.orthonormal_complement(Qt, B.dims[k]) if B.dims[k] else np.zeros((0, 0), complex)
        for k in range(n + 1):
            if k < n:
                A.dt[k] = A.L[k + 1].conj().T @ B.d(k) @ Linv_H[k]
            else:
                A.dt[k] = np.zeros((0, B.dims[k]), dtype=complex)
        for k in range(n + 1):
            if k < n:
                A.db[k] = A.Qt[k + 1].conj().T @ A.dt[k] @ A.Qt[k]
                A.da[k] = A.Rt[k + 1].conj().T @ A.dt[k] @ A.Rt[k]
            else:
                A.db[k] = np.zeros((0, A.Qt[k].shape[1]), dtype=complex)
                A.da[k] = np.zeros((0, A.Rt[k].shape[1]), dtype=complex)
            if k > 0:
                A.dla[k] = A.Rt[k - 1].conj().T @ A.dt[k - 1].conj().T @ A.Rt[k]
            else:
                A.dla[k] = np.zeros((0, A.Rt[k].shape[1]), dtype=complex)
        for k in range(n + 1):
            prev_dt = A.dt[k - 1].conj().T if k > 0 else None
            prev_db = A.db[k - 1].conj().T if k > 0 else None
            mats = {
                "d": A.dt[k],
                "dirac": _stack(A.dt[k], prev_dt, B.dims[k]),
                "d_b": A.db[k],
                "dirac_b": _stack(A.db[k], prev_db, A.Qt[k].shape[1]),
                "delta_a": A.dla[k],
                "d_a": A.da[k],
                "dirac_a": _stack(A.da[k], A.dla[k], A.Rt[k].shape[1]),
            }
            for fam, mat in mats.items():
                if fam in ("dirac_a", "dirac_b"):
                    U, s, Vh = linalg.svd(mat, full=True)
                    A.svd[(fam, k)] = (U, _pad_sigma(s, mat.shape[1]), Vh)
                else:
                    s = linalg.singular_values(mat)
                    if fam == "dirac":
                        s = _pad_sigma(s, mat.shape[1])
                    A.svd[(fam, k)] = (None, s, None)
        return A

    # ------------------------------------------------------------ counting
    def _rank(self, fam, k, tau=None):
        F = self.families[(fam, k)]
        return F.total_rank(tau) if F.entries else 0

    def _zeros(self, fam, k, tau=None):
        F = self.families[(fam, k)]
        thr = F.threshold(tau)
        total = 0
        for bi, (s, w) in F.entries.items():
            total += w * int(np.sum(s <= thr))
        return total

    def dims(self, k):
        C = self.C
        total = C.dim(k)
        basic = self.S.dim(k)
        return total, basic, total - basic

    def betti_ordinary(self, tau=None):
        n = self.n
        h = []
        for k in range(n + 1):
            r_out = self._rank("d", k, tau) if k < n else 0
            r_in = self._rank("d", k - 1, tau) if k > 0 else 0
            h.append(self.dims(k)[0] - r_out - r_in)
        return h

    def betti_ordinary_harmonic(self, tau=None):
        return [self._zeros("dirac", k, tau) for k in range(self.n + 1)]

    def betti_basic(self, tau=None, degrees=None):
        n = self.n
        out = []
        for k in range(n + 1):
            r_out = self._rank("d_b", k, tau) if k < n else 0
            r_in = self._rank("d_b", k - 1, tau) if k > 0 else 0
            out.append(self.dims(k)[1] - r_out - r_in)
        return out

    def betti_basic_harmonic(self, tau=None):
        return [self._zeros("dirac_b", k, tau) for k in range(self.n + 1)]

    def betti_antibasic(self, method="rank", tau=None):
        n = self.n
        out = []
        for k in range(n + 1):
            dima = self.dims(k)[2]
            if method == "rank":
                r_here = self._rank("delta_a", k, tau) if k > 0 else 0
                r_up = self._rank("delta_a", k + 1, tau) if k < n else 0
                out.append(dima - r_here - r_up)
            elif method == "d_a":
                r_out = self._rank("d_a", k, tau) if k < n else 0
                r_in = self._rank("d_a", k - 1, tau) if k > 0 else 0
                out.append(dima - r_out - r_in)
            elif method == "harmonic":
                out.append(self._zeros("dirac_a", k, tau))
            else:
                raise ValueError(f"unknown method {method!r}")
        return out

    def betti(self, tau=None):
        """All Betti vectors; raises HodgeMismatch if the two h_a methods disagree."""
        hr = self.betti_antibasic("rank", tau)
        hh = self.betti_antibasic("harmonic", tau)
        if hr != hh:
            raise HodgeMismatch(hr, hh, {k: self.spectrum(k) for k in range(self.n + 1)})
        return {
            "h": self.betti_ordinary(tau),
            "h_harmonic": self.betti_ordinary_harmonic(tau),
            "h_b": self.betti_basic(tau),
            "h_a_rank": hr,
            "h_a_harmonic": hh,
            "h_a_d_complex": self.betti_antibasic("d_a", tau),
            "dim_basic": [self.S.dim(k) for k in range(self.n + 1)],
        }

    def gap_summary(self):
        out = {}
        for (fam, k), F in self.families.items():
            if F.entries:
                out[f"{fam}_{k}"] = F.gap_ratio()
        for k, g in self.S.gap.items():
            out[f"constraint_{k}"] = g
        return out

    def thresholds(self):
        out = {f"{fam}_{k}": F.threshold() for (fam, k), F in self.families.items() if F.entries}
        for k, F in self.S.families.items():
            out[f"constraint_{k}"] = F.threshold()
        return out

    # ------------------------------------------------------------ spectra
    def spectrum(self, k, m=None):
        vals = []
        for bi, B in enumerate(self.blocks):
            U, s, Vh = self.alg[bi].svd[("dirac_a", k)]
            for v in s**2:
                vals.extend([float(v)] * B.weight)
        vals = np.sort(np.asarray(vals))
        return vals if m is None else vals[:m]

    def _antibasic_vector(self, bi, k, coeffs, copy=0):
        """Full-space vector from antibasic block coordinates."""
        B, A = self.blocks[bi], self.alg[bi]
        y = A.Rt[k] @ coeffs
        x = sla.solve_triangular(A.L[k].conj().T, y, lower=False)
        return B.lift(k, x, copy)

    def eigenpairs(self, k, m):
        """The m smallest Delta_a eigenpairs as (lambda, full vector)."""
        cands = []
        for bi, B in enumerate(self.blocks):
            U, s, Vh = self.alg[bi].svd[("dirac_a", k)]
            for i, sv in enumerate(s):
                cands.append((float(sv**2), bi, i))
        cands.sort()
        out = []
        for lam, bi, i in cands[:m]:
            Vh = self.alg[bi].svd[("dirac_a", k)][2]
            v = Vh[i].conj()
            x = self._antibasic_vector(bi, k, v)
            if not self.C.is_complex:
                x = x.real if np.linalg.norm(x.real) >= np.linalg.norm(x.imag) else x.imag
            out.append((lam, x))
        return out

    def eigen_residuals(self, k, m):
        calc = self.calculus()
        res = []
        for lam, x in self.eigenpairs(k, m):
            r = calc.laplacian_a(x, k) - lam * x
            res.append(calc.norm(k, r) / max(calc.norm(k, x), 1e-300))
        return res

    # ------------------------------------------------------------ full-space
    def calculus(self) -> Calculus:
        if self._calc is None:
            self._calc = Calculus(self.C, self.S)
        return self._calc

    def _restrict_all(self, x, k):
        out = []
        for bi, B in enumerate(self.blocks):
            out.append([B.restrict(k, x, c) for c in range(B.copies)])
        return out

    def hodge_decompose(self, x, k, tol=1e-10):
        """(harmonic, delta_a-exact, d_a-exact) parts of an antibasic form."""
        calc = self.calculus()
        pb = calc.Pb(x, k)
        if calc.norm(k, pb) > tol * max(calc.norm(k, x), 1e-300):
            raise NotAntibasic("input is not antibasic")
        n = self.n
        parts = [np.zeros(self.C.dim(k), dtype=complex) for _ in range(3)]
        for bi, B in enumerate(self.blocks):
            A = self.alg[bi]
            Rt = A.Rt[k]
            if Rt.shape[1] == 0:
                continue
            thr = self.families[("dirac_a", k)].threshold()
            U, s, Vh = A.svd[("dirac_a", k)]
            pos = s > thr
            V = Vh.conj().T
            for c in range(B.copies):
                b = B.restrict(k, x, c)
                y = A.L[k].conj().T @ b
                a = Rt.conj().T @ y
                coef = Vh @ a
                g = V[:, pos] @ (coef[pos] / s[pos] ** 2)  # Green's operator
                harm = V[:, ~pos] @ coef[~pos]
                up = A.dla[k + 1] @ (A.da[k] @ g) if k < n else np.zeros_like(a)
                down = A.da[k - 1] @ (A.dla[k] @ g) if k > 0 else np.zeros_like(a)
                for slot, vec in enumerate((harm, up, down)):
                    yy = Rt @ vec
                    xx = sla.solve_triangular(A.L[k].conj().T, yy, lower=False)
                    parts[slot] += B.lift(k, xx, c)
        if not self.C.is_complex:
            parts = [p.real for p in parts]
        return tuple(parts)

    def basic_harmonic_forms(self, k):
        """Full-space basis of basic harmonic k-forms (kernel of the basic Dirac operator)."""
        out = []
        thr = self.families[("dirac_b", k)].threshold()
        for bi, B in enumerate(self.blocks):
            A = self.alg[bi]
            U, s, Vh = A.svd[("dirac_b", k)]
            if A.Qt[k].shape[1] == 0:
                continue
            ker = Vh[s <= thr].conj().T
            for j in range(ker.shape[1]):
                y = A.Qt[k] @ ker[:, j]
                xb = sla.solve_triangular(A.L[k].conj().T, y, lower=False)
                for c in range(B.copies):
                    out.append(B.lift(k, xb, c))
        if not out:
            return np.zeros((self.C.dim(k), 0))
        X = np.array(out).T
        if not self.C.is_complex:
            Z = np.hstack([X.real, X.imag])
            U, s, Vh = linalg.svd(Z)
            r = int(np.sum(s > 1e-8 * s.max()))
            X = U[:, :r]
        return X
