"""Cellular chain maps for lattice automorphisms of a cubical torus.

Pulling coefficients back pointwise through a hyperbolic matrix does not
commute with forward differences, so the glued coboundary would fail to
square to zero.  Instead the integral matrix is realized as a cellular
chain map f#: vertices go to vertices, an edge goes to a staircase lattice
path between the image vertices, and a square goes to the integer filling
(winding numbers) of the image of its boundary loop.  The cochain pullback
(f#)^T then commutes with the coboundary exactly.

Fiber dimensions 1 and 2 are supported.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


class MonodromyError(ValueError):
    pass


def _staircase(v, start):
    """Signed unit edges of the path start -> start+v (axis 0 first)."""
    p = list(start)
    edges = []
    for ax in range(len(v)):
        steps = int(v[ax])
        for _ in range(abs(steps)):
            if steps > 0:
                edges.append((tuple(p), ax, 1))
                p[ax] += 1
            else:
                p[ax] -= 1
                edges.append((tuple(p), ax, -1))
    return edges


def _fill_loop(edges):
    """2-chain whose boundary is the given closed loop of unit edges."""
    ax_x = {}
    for pos, ax, s in edges:
        if ax == 0:
            ax_x[pos] = ax_x.get(pos, 0) + s
    if not edges:
        return {}
    ys = [pos[1] for pos, _, _ in edges]
    xs = [pos[0] for pos, _, _ in edges]
    squares = {}
    for i in range(min(xs) - 1, max(xs) + 2):
        c = 0
        for y in range(min(ys) - 1, max(ys) + 2):
            c += ax_x.get((i, y), 0)
            if c:
                squares[(i, y)] = c
    # boundary check: d(sq(i,j)) = ex(i,j) + ey(i+1,j) - ex(i,j+1) - ey(i,j)
    bd = {}
    for (i, j), c in squares.items():
        for key, s in (
            (((i, j), 0), 1),
            (((i + 1, j), 1), 1),
            (((i, j + 1), 0), -1),
            (((i, j), 1), -1),
        ):
            bd[key] = bd.get(key, 0) + s * c
    target = {}
    for pos, ax, s in edges:
        target[(pos, ax)] = target.get((pos, ax), 0) + s
    keys = set(bd) | set(target)
    if any(bd.get(k, 0) != target.get(k, 0) for k in keys):
        raise MonodromyError("loop filling failed; image loop not closed")
    return squares


def cellular_images(At: np.ndarray) -> dict:
    """Images of unit cells under the chain map of the index-space matrix At.

    Returns ``{k: [[(offset, K_index, weight), ...] for each K]}`` where K
    runs over increasing multi-indices of the fiber of size k and offsets
    are relative to the image vertex At @ u.
    """
    At = np.asarray(At, dtype=int)
    f = At.shape[0]
    out = {0: [[((0,) * f, 0, 1)]]}
    if f == 1:
        s = int(At[0, 0])
        out[1] = [[((0,), 0, 1)]] if s == 1 else [[((-1,), 0, -1)]]
        return out
    if f != 2:
        raise MonodromyError("monodromy supported on fiber dimension 1 or 2 only")
    e0, e1 = At[:, 0], At[:, 1]
    out[1] = []
    for a in range(2):
        v = At[:, a]
        out[1].append([(pos, ax, s) for pos, ax, s in _staircase(v, (0, 0))])
    loop = (
        _staircase(e0, (0, 0))
        + _staircase(e1, tuple(e0))
        + [(p, a, -s) for p, a, s in _staircase(e0, tuple(e1))]
        + [(p, a, -s) for p, a, s in _staircase(e1, (0, 0))]
    )
    squares = _fill_loop(loop)
    out[2] = [[(pos, 0, c) for pos, c in sorted(squares.items())]]
    return out


def index_matrix(A, h) -> np.ndarray:
    """Matrix acting on lattice indices: H^-1 A H, required to be integral."""
    A = np.asarray(A, dtype=float)
    h = np.asarray(h, dtype=float)
    At = A * h[None, :] / h[:, None]
    Ai = np.rint(At)
    if np.max(np.abs(At - Ai)) > 1e-9:
        raise MonodromyError("monodromy does not map the fiber grid lattice to itself")
    return Ai.astype(int)


def validate(A, sizes, h):
    A = np.asarray(A, dtype=float)
    if np.max(np.abs(A - np.rint(A))) > 0:
        raise MonodromyError("monodromy matrix must be integral")
    det = round(float(np.linalg.det(A)))
    if abs(det) != 1:
        raise MonodromyError(f"monodromy determinant must be +-1, got {det}")
    At = index_matrix(A, h)
    N = np.asarray(sizes, dtype=int)
    # the image of each period vector must again be a period vector
    for b in range(len(N)):
        col = At[:, b] * N[b]
        if np.any(col % N):
            raise MonodromyError("monodromy does not preserve the fiber period lattice")
    return At


def mode_map(At, sizes) -> np.ndarray:
    """Integer matrix T with eta = T xi (mod N): F sends mode xi to mode eta."""
    f = len(sizes)
    T = np.zeros((f, f), dtype=object)
    for b in range(f):
        for a in range(f):
            num = int(At[a, b]) * int(sizes[b])
            if num % int(sizes[a]):
                raise MonodromyError("mode map not integral for these fiber sizes")
            T[b, a] = num // int(sizes[a])
    return np.array(T, dtype=int)


def fiber_components(f: int, k: int):
    return list(combinations(range(f), k))
