"""Pointwise exterior algebra on R^n in the coordinate coframe dx^I.

Everything here works on coefficient vectors indexed by increasing
multi-indices (lexicographic order) and is vectorized over a leading
point axis where that makes sense.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np


@lru_cache(maxsize=None)
def multi_indices(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(n), k))


@lru_cache(maxsize=None)
def index_map(n: int, k: int) -> dict:
    return {I: a for a, I in enumerate(multi_indices(n, k))}


def perm_sign(seq) -> int:
    seq = list(seq)
    s = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                s = -s
    return s


@lru_cache(maxsize=None)
def wedge_table(n: int, k1: int, k2: int):
    """Sparse table of (K, I, J, sign) with dx^I ^ dx^J = sign dx^K."""
    out = []
    imap = index_map(n, k1 + k2)
    for a, I in enumerate(multi_indices(n, k1)):
        for b, J in enumerate(multi_indices(n, k2)):
            if set(I) & set(J):
                continue
            K = tuple(sorted(I + J))
            out.append((imap[K], a, b, perm_sign(I + J)))
    return tuple(out)


@lru_cache(maxsize=None)
def coordinate_wedge(n: int, k: int) -> np.ndarray:
    """W[i] is the matrix of dx^i ^ on degree k (shape C(n,k+1) x C(n,k))."""
    W = np.zeros((n, comb(n, k + 1), comb(n, k)))
    for K, a, b, s in wedge_table(n, 1, k):
        W[a, K, b] = s
    return W


@lru_cache(maxsize=None)
def coordinate_interior(n: int, k: int) -> np.ndarray:
    """Iota[i] is the matrix of i_{d/dx^i} on degree k (shape C(n,k-1) x C(n,k))."""
    # i_{e_i} is the transpose of e^i ^ in the Euclidean coframe
    return coordinate_wedge(n, k - 1).transpose(0, 2, 1).copy()


def wedge_matrix(alpha: np.ndarray, n: int, k1: int, k: int) -> np.ndarray:
    """Matrices of beta -> alpha ^ beta; alpha has shape (P, C(n,k1))."""
    alpha = np.atleast_2d(alpha)
    out = np.zeros((alpha.shape[0], comb(n, k1 + k), comb(n, k)), dtype=alpha.dtype)
    if k1 + k > n:
        return out
    for K, a, b, s in wedge_table(n, k1, k):
        out[:, K, b] += s * alpha[:, a]
    return out


def wedge(alpha: np.ndarray, beta: np.ndarray, n: int, k1: int, k2: int) -> np.ndarray:
    """Pointwise alpha ^ beta for coefficient arrays of shape (P, C)."""
    P = alpha.shape[0]
    out = np.zeros((P, comb(n, k1 + k2)), dtype=np.result_type(alpha, beta))
    if k1 + k2 > n:
        return out
    for K, a, b, s in wedge_table(n, k1, k2):
        out[:, K] += s * alpha[:, a] * beta[:, b]
    return out


def interior_matrix(X: np.ndarray, n: int, k: int) -> np.ndarray:
    """Matrices of i_X on degree k; X has shape (P, n)."""
    X = np.atleast_2d(X)
    return np.einsum("pi,iab->pab", X, coordinate_interior(n, k))


def gram(ginv: np.ndarray, k: int) -> np.ndarray:
    """Lambda^k Gramian of the inverse metric: G[I,J] = det(ginv[I,J])."""
    P, n, _ = ginv.shape
    idx = multi_indices(n, k)
    m = len(idx)
    if k == 0:
        return np.ones((P, 1, 1))
    G = np.empty((P, m, m))
    for a, I in enumerate(idx):
        for b, J in enumerate(idx):
            G[:, a, b] = np.linalg.det(ginv[:, list(I)][:, :, list(J)])
    return G


def hodge_star_matrix(g: np.ndarray, k: int) -> np.ndarray:
    """Pointwise matrices of * : Lambda^k -> Lambda^{n-k}.

    Defined by alpha ^ *beta = <alpha, beta> vol_g with
    vol_g = sqrt(det g) dx^1..n.
    """
    P, n, _ = g.shape
    ginv = np.linalg.inv(g)
    G = gram(ginv, k)
    sq = np.sqrt(np.linalg.det(g))
    src = multi_indices(n, k)
    tgt = index_map(n, n - k)
    S = np.zeros((P, comb(n, n - k), len(src)))
    for a, I in enumerate(src):
        Ic = tuple(i for i in range(n) if i not in I)
        s = perm_sign(I + Ic)
        S[:, tgt[Ic], :] = s * sq[:, None] * G[:, a, :]
    return S


def adjoint_pointwise(A: np.ndarray, G_dom: np.ndarray, G_cod: np.ndarray) -> np.ndarray:
    """Pointwise metric adjoint: G_dom^{-1} A^H G_cod."""
    AH = np.conj(A.transpose(0, 2, 1))
    return np.linalg.solve(G_dom, AH @ G_cod)
