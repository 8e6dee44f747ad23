"""Audited rank and kernel decisions shared by all Betti computations.

Every rank decision goes through a ``SpectrumFamily``: the singular values
of one operator, gathered over all blocks, judged against a single relative
threshold tau * sigma_max with a mandatory gap audit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

DEFAULT_TAU = 1e-8
GAP_REQUIRED = 1e3


class IllConditionedError(RuntimeError):
    """Raised when a rank decision has no clean spectral gap."""

    def __init__(self, family, gap, spectrum):
        self.family = family
        self.gap = gap
        self.spectrum = spectrum
        super().__init__(f"ill-conditioned kernel in {family}: gap ratio {gap:.3e} below {GAP_REQUIRED:.0e}")


def svd(A, full=False):
    """SVD with a fallback driver; returns (U, s, Vh)."""
    A = np.asarray(A)
    if A.size == 0:
        m, n = A.shape
        return np.eye(m, dtype=A.dtype), np.zeros(0), np.eye(n, dtype=A.dtype)
    try:
        return sla.svd(A, full_matrices=full, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        return sla.svd(A, full_matrices=full, lapack_driver="gesvd")


def singular_values(A):
    A = np.asarray(A)
    if A.size == 0:
        return np.zeros(0)
    try:
        return sla.svd(A, compute_uv=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        return sla.svd(A, compute_uv=False, lapack_driver="gesvd")


@dataclass
class SpectrumFamily:
    """Singular values of one operator family across blocks."""

    name: str
    tau: float = DEFAULT_TAU
    entries: dict = field(default_factory=dict)  # key -> (sigma, weight)
    scale: float = 0.0  # floor for sigma_max, so an all-round-off family is not promoted to rank


    def add(self, key, sigma, weight=1):
        self.entries[key] = (np.asarray(sigma, dtype=float), int(weight))

    @property
    def sigma_max(self):
        vals = [s.max() for s, _ in self.entries.values() if s.size]
        return max(vals) if vals else 0.0

    def threshold(self, tau=None):
        return (self.tau if tau is None else tau) * max(self.sigma_max, self.scale)

    def rank(self, key, tau=None):
        s, _ = self.entries[key]
        thr = self.threshold(tau)
        return int(np.sum(s > thr)) if s.size and thr > 0 else 0

    def total_rank(self, tau=None):
        return sum(w * self.rank(k, tau) for k, (_, w) in self.entries.items())

    def gap_ratio(self, tau=None):
        thr = self.threshold(tau)
        acc = [s[s > thr].min() for s, _ in self.entries.values() if np.any(s > thr)]
        rej = [s[s <= thr].max() for s, _ in self.entries.values() if np.any(s <= thr)]
        if not acc or not rej:
            return float("inf")
        top = max(rej)
        return float("inf") if top == 0 else float(min(acc) / top)

    def audit(self):
        g = self.gap_ratio()
        if g < GAP_REQUIRED:
            spec = np.sort(np.concatenate([s for s, _ in self.entries.values()]))
            raise IllConditionedError(self.name, g, spec)
        return g

    def summary(self):
        return {
            "sigma_max": self.sigma_max,
            "scale": self.scale,
            "threshold": self.threshold(),
            "gap_ratio": self.gap_ratio(),
        }


def kernel_from_svd(A, sigma_thr):
    """Orthonormal basis of the numerical kernel of A for an absolute threshold."""
    m, n = A.shape
    if n == 0:
        return np.zeros((0, 0), dtype=A.dtype), np.zeros(0)
    U, s, Vh = svd(A, full=True)
    r = int(np.sum(s > sigma_thr)) if s.size else 0
    return Vh[r:].conj().T, s


def orthonormal_complement(Q, n):
    """Orthonormal basis of the Euclidean complement of the columns of Q in C^n."""
    if Q.shape[1] == 0:
        return np.eye(n, dtype=complex)
    U, s, Vh = svd(Q, full=True)
    r = Q.shape[1]
    return U[:, r:]


def cholesky_factor(M):
    """Lower L with M = L L^H."""
    return sla.cholesky(M, lower=True)
