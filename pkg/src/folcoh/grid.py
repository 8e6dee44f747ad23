"""Grid backend: cubical cochains on periodic boxes with optional monodromy.

A k-form is stored as coefficients in the coordinate coframe dx^I at each
grid point, shape ``(npoints, C(n, k))`` flattened point-major.  The
exterior derivative is the cubical coboundary written in coefficient units
(forward differences divided by the spacing), so d o d = 0 holds exactly.

Across a monodromy wrap the coboundary reads the layer-0 cochain through the
cellular pullback of the integral gluing matrix (see ``monodromy``).  A point
(u, t = L_t) on the top face is identified with (A u, 0).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp

from . import expr, monodromy
from . import multilinear as ml
from .blocks import Block, PointwiseOp

SPD_FLOOR = 1e-8
RANK_FLOOR = 1e-8
WRAP_TOL = 1e-10


class GridSpecError(ValueError):
    pass


@dataclass
class Axis:
    name: str
    size: int
    length: float = 1.0
    monodromy: np.ndarray | None = None
    fiber: tuple[str, ...] = ()
    offset: float = 0.0  # sample positions (i + offset) * h

    @property
    def h(self):
        return self.length / self.size


def _bsr_blockdiag(blocks: np.ndarray):
    P, r, c = blocks.shape
    if r == 0 or c == 0:
        return sp.csr_matrix((P * r, P * c), dtype=blocks.dtype)
    return sp.bsr_matrix((blocks, np.arange(P), np.arange(P + 1)), shape=(P * r, P * c)).tocsr()


class GridComplex:
    """Finite model of a foliated flat torus quotient."""

    backend = "grid"
    is_complex = False

    def __init__(self, spec: dict):
        self.spec = copy.deepcopy(spec)
        self.name = spec.get("name", "grid")
        self.constants = {k: float(v) for k, v in spec.get("constants", {}).items()}
        self.flags = dict(spec.get("flags", {}))
        self.axes = []
        for a in spec["axes"]:
            wrap = a.get("wrap", "periodic")
            mono, fiber = None, ()
            if isinstance(wrap, dict):
                mono = np.asarray(wrap["monodromy"], dtype=float)
                fiber = tuple(wrap["fiber"])
            elif wrap != "periodic":
                raise GridSpecError(f"unknown wrap rule {wrap!r}")
            size = int(a["size"])
            if size < 1:
                raise GridSpecError(f"axis {a['name']} needs a positive size")
            offset = float(a.get("offset", 0.0))
            if not 0.0 <= offset < 1.0:
                raise GridSpecError(f"axis {a['name']}: offset must lie in [0, 1)")
            self.axes.append(Axis(a["name"], size, float(a.get("length", 1.0)), mono, fiber, offset))
        self.n = len(self.axes)
        self.names = [a.name for a in self.axes]
        self.shape = tuple(a.size for a in self.axes)
        self.h = np.array([a.h for a in self.axes])
        self.npts = int(np.prod(self.shape))
        self.cell_volume = float(np.prod(self.h))
        self._setup_monodromy()
        self._evaluate_fields()
        self.p = self.frame.shape[1]
        self.q = self.n - self.p
        self._cache = {}
        self.checks = {}
        self._run_checks()

    # ------------------------------------------------------------ setup
    def _setup_monodromy(self):
        wraps = [i for i, a in enumerate(self.axes) if a.monodromy is not None]
        self.wrap_axis = None
        if not wraps:
            return
        if len(wraps) > 1:
            raise GridSpecError("at most one monodromy axis is supported")
        t = wraps[0]
        ax = self.axes[t]
        fib = [self.names.index(f) for f in ax.fiber]
        if fib != sorted(fib) or t in fib:
            raise GridSpecError("fiber axes must be listed in axis order and exclude the wrap axis")
        if sorted(fib + [t]) != list(range(self.n)):
            raise GridSpecError("every axis other than the wrap axis must be a fiber axis")
        if ax.size < 3:
            raise GridSpecError("a monodromy axis needs at least 3 points")
        if any(self.axes[i].offset for i in fib + [t]):
            raise GridSpecError("sample offsets are only allowed on plain periodic grids")
        self.wrap_axis = t
        self.fiber_axes = fib
        sizes = [self.shape[i] for i in fib]
        hf = [self.h[i] for i in fib]
        self.mono_A = ax.monodromy
        try:
            self.mono_At = monodromy.validate(ax.monodromy, sizes, hf)
        except monodromy.MonodromyError as e:
            raise GridSpecError(str(e)) from e
        self.mono_cells = monodromy.cellular_images(self.mono_At)
        self.mono_T = monodromy.mode_map(self.mono_At, sizes)

    def coordinates(self):
        grids = [(np.arange(a.size) + a.offset) * a.h for a in self.axes]
        mesh = np.meshgrid(*grids, indexing="ij")
        return {a.name: m.reshape(-1) for a, m in zip(self.axes, mesh)}

    def _field(self, entries, shape, env):
        out = np.empty((self.npts,) + shape)
        for idx in np.ndindex(*shape):
            src = entries
            for i in idx:
                src = src[i]
            f = expr.compile_expr(src, self.names, self.constants)
            out[(slice(None),) + idx] = np.broadcast_to(f(**env), (self.npts,))
        return out

    def _metric_at(self, env, npts):
        m = self.spec.get("metric", "euclidean")
        if m == "euclidean":
            return np.broadcast_to(np.eye(self.n), (npts, self.n, self.n)).copy()
        out = np.empty((npts, self.n, self.n))
        for i in range(self.n):
            for j in range(self.n):
                f = expr.compile_expr(m[i][j], self.names, self.constants)
                out[:, i, j] = np.broadcast_to(f(**env), (npts,))
        return out

    def _frame_at(self, env, npts):
        fr = self.spec["frame"]
        p = len(fr)
        out = np.empty((npts, p, self.n))
        for a in range(p):
            for i in range(self.n):
                f = expr.compile_expr(fr[a][i], self.names, self.constants)
                out[:, a, i] = np.broadcast_to(f(**env), (npts,))
        return out

    def _evaluate_fields(self):
        env = self.coordinates()
        self.metric = self._metric_at(env, self.npts)
        if len(self.spec.get("frame", [])) < 1:
            raise GridSpecError("leaf dimension p must be at least 1")
        self.frame = self._frame_at(env, self.npts)
        sym = np.max(np.abs(self.metric - self.metric.transpose(0, 2, 1)))
        if sym > 1e-12 * max(1.0, np.max(np.abs(self.metric))):
            raise GridSpecError("metric is not symmetric")
        ev = np.linalg.eigvalsh(self.metric)
        bad = np.argmin(ev[:, 0])
        if ev[bad, 0] <= SPD_FLOOR:
            pt = np.unravel_index(bad, self.shape)
            raise GridSpecError(f"metric not positive definite at grid point {tuple(int(i) for i in pt)}")
        sv = np.linalg.svd(self.frame, compute_uv=False)
        bad = np.argmin(sv[:, -1])
        if sv[bad, -1] <= RANK_FLOOR:
            pt = np.unravel_index(bad, self.shape)
            raise GridSpecError(f"foliation frame rank deficient at grid point {tuple(int(i) for i in pt)}")
        self.ginv = np.linalg.inv(self.metric)
        self.sqrt_det = np.sqrt(np.linalg.det(self.metric))

    def _run_checks(self):
        self.checks["min_metric_eigenvalue"] = float(np.min(np.linalg.eigvalsh(self.metric)))
        self.checks["min_frame_singular_value"] = float(np.min(np.linalg.svd(self.frame, compute_uv=False)))
        if self.wrap_axis is None:
            return
        # metric and frame on the top face against the identified bottom face
        t = self.wrap_axis
        env = self.coordinates()
        top = {k: v.copy() for k, v in env.items()}
        sel = np.isclose(env[self.names[t]], 0.0)
        top = {k: v[sel] for k, v in top.items()}
        top[self.names[t]] = np.full(sel.sum(), self.axes[t].length)
        m = int(sel.sum())
        g_top = self._metric_at(top, m)
        X_top = self._frame_at(top, m)
        fib = self.fiber_axes
        u = np.stack([top[self.names[i]] for i in fib], axis=1)
        img = u @ self.mono_A.T
        bottom = dict(top)
        for c, i in enumerate(fib):
            L = self.axes[i].length
            bottom[self.names[i]] = np.mod(img[:, c], L)
        bottom[self.names[t]] = np.zeros(m)
        g_bot = self._metric_at(bottom, m)
        X_bot = self._frame_at(bottom, m)
        J = np.eye(self.n)
        J[np.ix_(fib, fib)] = self.mono_A
        pulled = J.T @ g_bot @ J
        err = np.max(np.abs(g_top - pulled)) / np.max(np.abs(g_top))
        self.checks["wrap_metric_residual"] = float(err)
        if err > WRAP_TOL:
            raise GridSpecError(f"metric incompatible with monodromy across the wrap (relative residual {err:.3e})")
        pushed = X_top @ J.T
        errX = np.max(np.abs(pushed - X_bot)) / max(1.0, np.max(np.abs(X_bot)))
        self.checks["wrap_frame_residual"] = float(errX)
        if errX > WRAP_TOL:
            raise GridSpecError(f"frame incompatible with monodromy across the wrap (relative residual {errX:.3e})")

    # ------------------------------------------------------------ sizes
    def ncomp(self, k):
        return comb(self.n, k) if 0 <= k <= self.n else 0

    def dim(self, k):
        return self.npts * self.ncomp(k)

    # ------------------------------------------------------------ shifts and d
    def _point_index(self):
        return np.arange(self.npts).reshape(self.shape)

    def _shift(self, axis, k):
        """Sparse matrix of x -> x(. + e_axis) on degree-k coefficients."""
        key = ("shift", axis, k)
        if key in self._cache:
            return self._cache[key]
        C = self.ncomp(k)
        idx = self._point_index()
        nxt = np.roll(idx, -1, axis=axis)
        rows, cols, vals = [], [], []
        comp = np.arange(C)
        if axis != self.wrap_axis:
            r = (idx.reshape(-1)[:, None] * C + comp).reshape(-1)
            c = (nxt.reshape(-1)[:, None] * C + comp).reshape(-1)
            S = sp.csr_matrix((np.ones(r.size), (r, c)), shape=(self.dim(k), self.dim(k)))
        else:
            N_t = self.shape[axis]
            inner = np.take(idx, np.arange(N_t - 1), axis=axis).reshape(-1)
            inner_n = np.take(nxt, np.arange(N_t - 1), axis=axis).reshape(-1)
            rows.append((inner[:, None] * C + comp).reshape(-1))
            cols.append((inner_n[:, None] * C + comp).reshape(-1))
            vals.append(np.ones(inner.size * C))
            top = np.take(idx, [N_t - 1], axis=axis).reshape(-1)
            bottom_grid = np.take(idx, [0], axis=axis)
            r_, c_, v_ = self._wrap_entries(top, bottom_grid, k)
            rows.append(r_)
            cols.append(c_)
            vals.append(v_)
            S = sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(self.dim(k), self.dim(k)),
            )
        self._cache[key] = S
        return S

    def _component_maps(self, k):
        """For degree k: list of (K index, [(offset, K' index, weight)]) for t-free K."""
        fib = self.fiber_axes
        f = len(fib)
        fcomps = monodromy.fiber_components(f, k)
        imap = ml.index_map(self.n, k)
        out = []
        hf = np.array([self.h[i] for i in fib])
        for a, Kf in enumerate(fcomps):
            K = tuple(fib[i] for i in Kf)
            terms = []
            cells = self.mono_cells[k][a] if k in self.mono_cells else []
            for off, b, w in cells:
                Kf2 = fcomps[b]
                K2 = tuple(fib[i] for i in Kf2)
                scale = np.prod(hf[list(Kf2)]) / np.prod(hf[list(Kf)])
                terms.append((np.asarray(off), imap[K2], w * scale))
            out.append((imap[K], terms))
        return out

    def _wrap_entries(self, top_pts, bottom_grid, k):
        C = self.ncomp(k)
        fib = self.fiber_axes
        sizes = np.array([self.shape[i] for i in fib])
        coords = np.array(np.unravel_index(top_pts, self.shape)).T  # (m, n)
        u = coords[:, fib]
        img = u @ self.mono_At.T
        bshape = bottom_grid.shape
        rows, cols, vals = [], [], []
        for K, terms in self._component_maps(k):
            for off, K2, w in terms:
                v = np.mod(img + off[None, :], sizes[None, :])
                full = np.zeros((len(top_pts), self.n), dtype=int)
                full[:, fib] = v
                full[:, self.wrap_axis] = 0
                col_pts = np.ravel_multi_index(full.T, self.shape)
                rows.append(top_pts * C + K)
                cols.append(col_pts * C + K2)
                vals.append(np.full(len(top_pts), w))
        if not rows:
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)

    def d(self, k):
        """Exterior derivative on degree k as a sparse matrix (zero map for k = n)."""
        key = ("d", k)
        if key in self._cache:
            return self._cache[key]
        if k >= self.n:
            D = sp.csr_matrix((0, self.dim(k)))
        else:
            W = ml.coordinate_wedge(self.n, k)
            I = sp.identity(self.dim(k), format="csr")
            D = sp.csr_matrix((self.dim(k + 1), self.dim(k)))
            for i in range(self.n):
                Wi = sp.kron(sp.identity(self.npts), sp.csr_matrix(W[i]), format="csr")
                D = D + Wi @ ((self._shift(i, k) - I) / self.h[i])
            D = D.tocsr()
            D.eliminate_zeros()
        self._cache[key] = D
        return D

    # ------------------------------------------------------------ metric data
    def gram(self, k):
        key = ("gram", k)
        if key not in self._cache:
            self._cache[key] = ml.gram(self.ginv, k)
        return self._cache[key]

    def mass_blocks(self, k):
        return self.gram(k) * (self.sqrt_det * self.cell_volume)[:, None, None]

    def mass(self, k):
        key = ("mass", k)
        if key not in self._cache:
            self._cache[key] = _bsr_blockdiag(self.mass_blocks(k))
        return self._cache[key]

    def mass_inv(self, k):
        key = ("mass_inv", k)
        if key not in self._cache:
            self._cache[key] = _bsr_blockdiag(np.linalg.inv(self.mass_blocks(k)))
        return self._cache[key]

    def delta(self, k):
        """Codifferential on degree k: M_{k-1}^-1 d^T M_k (zero map for k = 0)."""
        key = ("delta", k)
        if key in self._cache:
            return self._cache[key]
        if k <= 0:
            D = sp.csr_matrix((0, self.dim(0)))
        else:
            D = (self.mass_inv(k - 1) @ self.d(k - 1).T @ self.mass(k)).tocsr()
        self._cache[key] = D
        return D

    def inner(self, k, x, y):
        return float(np.dot(y, self.mass(k) @ x))

    def star_blocks(self, k, metric=None):
        g = self.metric if metric is None else metric
        return ml.hodge_star_matrix(g, k)

    def pointwise_gram(self, k):
        return self.gram(k)

    # ------------------------------------------------------------ pointwise ops
    def constant_function(self, c=1.0):
        return np.full(self.npts, float(c))

    def as_field(self, x, k):
        return np.asarray(x).reshape(self.npts, self.ncomp(k))

    def wedge_op(self, form, k1, k):
        """PointwiseOp for beta -> form ^ beta with form of degree k1."""
        return PointwiseOp(ml.wedge_matrix(self.as_field(form, k1), self.n, k1, k), k, k1 + k)

    def interior_op(self, X, k):
        return PointwiseOp(ml.interior_matrix(np.asarray(X).reshape(self.npts, self.n), self.n, k), k, k - 1)

    def contract_op(self, form, k1, k):
        """Metric adjoint of wedge-with-form: degree k -> k - k1."""
        W = ml.wedge_matrix(self.as_field(form, k1), self.n, k1, k - k1)
        A = ml.adjoint_pointwise(W, self.gram(k - k1), self.gram(k))
        return PointwiseOp(A, k, k - k1)

    def full(self, op: PointwiseOp):
        return _bsr_blockdiag(op.mat)

    def pointwise_inner(self, a, b, k):
        """Pointwise metric inner product of two degree-k forms, one value per point."""
        A, B = self.as_field(a, k), self.as_field(b, k)
        return np.einsum("pi,pij,pj->p", np.conj(B), self.gram(k), A)

    def pointwise_norm_sq(self, a, k):
        return np.real(self.pointwise_inner(a, a, k))

    def multiply_function(self, f, x, k):
        return (self.as_field(x, k) * np.asarray(f).reshape(self.npts, 1)).reshape(-1)

    def wedge(self, a, b, k1, k2):
        return ml.wedge(self.as_field(a, k1), self.as_field(b, k2), self.n, k1, k2).reshape(-1)

    def interior(self, X, x, k):
        return self.full(self.interior_op(X, k)) @ x

    def star(self, x, k, metric=None):
        S = self.star_blocks(k, metric)
        return np.einsum("pab,pb->pa", S, self.as_field(x, k)).reshape(-1)

    def metric_change(self, x, k, metric2):
        """B^k = *' o *^{-1} from the current metric to ``metric2``."""
        sign = (-1) ** (k * (self.n - k))
        y = sign * np.einsum("pab,pb->pa", self.star_blocks(k), self.as_field(x, k))
        S2 = self.star_blocks(self.n - k, metric2)
        return np.einsum("pab,pb->pa", S2, y).reshape(-1)

    def frame_field(self, a=0):
        return self.frame[:, a, :]

    def random_form(self, k, rng):
        return rng.standard_normal(self.dim(k))

    def sample_form(self, k, fn):
        """Evaluate ``fn(**coords) -> (npts, C)`` into a coefficient vector."""
        return np.asarray(fn(**self.coordinates()), dtype=float).reshape(-1)

    # ------------------------------------------------------------ blocks
    def fourier_axes(self):
        """Axes along which every field is constant and the wrap commutes with translation."""
        key = ("faxes",)
        if key in self._cache:
            return self._cache[key]
        fields = [self.metric.reshape(self.shape + (-1,)), self.frame.reshape(self.shape + (-1,))]

        def invariant(ax):
            for f in fields:
                scale = max(1.0, np.max(np.abs(f)))
                if np.max(np.abs(f - np.roll(f, 1, axis=ax))) > 1e-13 * scale:
                    return False
            return True

        if self.wrap_axis is None:
            F = [i for i in range(self.n) if invariant(i)]
        else:
            F = list(self.fiber_axes) if all(invariant(i) for i in self.fiber_axes) else []
        self._cache[key] = F
        return F

    def blocks(self):
        key = ("blocks",)
        if key not in self._cache:
            self._cache[key] = _GridBlocks(self).build()
        return self._cache[key]

    def block_of(self, block, k):
        return block


class _GridBlocks:
    """Fourier / monodromy-orbit block decomposition of a GridComplex."""

    def __init__(self, C: GridComplex):
        self.C = C
        self.F = C.fourier_axes()
        self.R = [i for i in range(C.n) if i not in self.F]
        self.Fshape = tuple(C.shape[i] for i in self.F)
        self.Rshape = tuple(C.shape[i] for i in self.R)
        self.NF = int(np.prod(self.Fshape)) if self.F else 1
        self.NR = int(np.prod(self.Rshape)) if self.R else 1

    def orbits(self):
        C = self.C
        if not self.F:
            return [[()]]
        modes = list(np.ndindex(*self.Fshape))
        seen = set()
        orbits = []
        twisted = C.wrap_axis is not None
        sizes = np.array(self.Fshape)
        for xi in modes:
            if xi in seen:
                continue
            orb = [xi]
            seen.add(xi)
            if twisted:
                cur = np.array(xi)
                while True:
                    cur = np.mod(C.mono_T @ cur, sizes)
                    tc = tuple(int(v) for v in cur)
                    if tc == xi:
                        break
                    orb.append(tc)
                    seen.add(tc)
            orbits.append(orb)
        return orbits

    def build(self):
        return [GridBlock(self, orb) for orb in self.orbits()]


class GridBlock(Block):
    def __init__(self, G: _GridBlocks, orbit):
        self.G = G
        self.C = G.C
        self.orbit = orbit
        self.key = tuple(orbit[0])
        self.weight = 1
        self.copies = 1
        C = self.C
        self.dims = [len(orbit) * G.NR * C.ncomp(k) for k in range(C.n + 1)]
        self._pos = {xi: i for i, xi in enumerate(orbit)}
        self._cache = {}
        self.aliased = self._is_aliased()

    def _is_aliased(self):
        """True when the mode orbit closes only through mod-N wraparound.

        The integer monodromy acts on Fourier modes of the continuum fiber; an
        orbit that is finite only on the lattice has no smooth invariant
        counterpart, so forms supported on it are never counted as basic.
        """
        C, G = self.C, self.G
        if C.wrap_axis is None or not G.F:
            return False
        sizes = np.array(G.Fshape)

        def centred(v):
            v = np.mod(v, sizes)
            return np.where(v > sizes // 2, v - sizes, v)

        for xi in self.orbit:
            c = centred(np.array(xi))
            image = C.mono_T @ c
            if not np.allclose(image, centred(np.rint(image).astype(int))) or np.any(np.abs(image) > sizes / 2):
                return True
        return False

    # coordinate transforms ---------------------------------------------
    def _to_FR(self, x, k):
        C, G = self.C, self.G
        arr = np.asarray(x).reshape(C.shape + (C.ncomp(k),))
        perm = G.F + G.R + [C.n]
        return np.transpose(arr, perm)

    def restrict(self, k, x, copy=0):
        C, G = self.C, self.G
        arr = self._to_FR(x, k)
        if G.F:
            arr = np.fft.fftn(arr, axes=tuple(range(len(G.F))), norm="ortho")
        arr = arr.reshape(G.NF, G.NR, C.ncomp(k))
        if G.F:
            flat = [np.ravel_multi_index(xi, G.Fshape) for xi in self.orbit]
        else:
            flat = [0]
        return arr[flat].reshape(-1)

    def lift(self, k, v, copy=0):
        C, G = self.C, self.G
        out = np.zeros((G.NF, G.NR, C.ncomp(k)), dtype=complex)
        if G.F:
            flat = [np.ravel_multi_index(xi, G.Fshape) for xi in self.orbit]
        else:
            flat = [0]
        out[flat] = np.asarray(v).reshape(len(self.orbit), G.NR, C.ncomp(k))
        out = out.reshape(G.Fshape + G.Rshape + (C.ncomp(k),))
        if G.F:
            out = np.fft.ifftn(out, axes=tuple(range(len(G.F))), norm="ortho")
        inv = np.argsort(G.F + G.R + [C.n])
        return np.transpose(out, inv).reshape(-1)

    # operators ------------------------------------------------------------
    def _R_slice(self, arr):
        """Per-point array restricted to F-coordinate 0, ordered over R points."""
        C, G = self.C, self.G
        a = arr.reshape(C.shape + arr.shape[1:])
        idx = tuple(0 if i in G.F else slice(None) for i in range(C.n))
        sub = a[idx]
        Rrest = sub.reshape((G.NR,) + arr.shape[1:])
        full = np.moveaxis(a, G.F + G.R, list(range(C.n)))
        full = full.reshape((G.NF, G.NR) + arr.shape[1:])
        scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
        if np.max(np.abs(full - Rrest[None])) > 1e-11 * scale:
            raise ValueError("pointwise field is not invariant along the Fourier axes")
        return Rrest

    def pointwise(self, op: PointwiseOp):
        mats = op.mat
        if mats.shape[0] == 1:
            mats = np.broadcast_to(mats, (self.C.npts,) + mats.shape[1:])
        Rm = self._R_slice(mats)
        nO = len(self.orbit)
        NR, r, c = Rm.shape
        out = np.zeros((nO * NR * r, nO * NR * c), dtype=Rm.dtype)
        for o in range(nO):
            for p in range(NR):
                i0 = (o * NR + p) * r
                j0 = (o * NR + p) * c
                out[i0 : i0 + r, j0 : j0 + c] = Rm[p]
        return out

    def mass(self, k):
        key = ("mass", k)
        if key not in self._cache:
            self._cache[key] = self.pointwise(PointwiseOp(self.C.mass_blocks(k), k, k))
        return self._cache[key]

    def _shift(self, axis, k):
        C, G = self.C, self.G
        Cn = C.ncomp(k)
        nO, NR = len(self.orbit), G.NR
        dim = nO * NR * Cn
        S = np.zeros((dim, dim), dtype=complex)

        def idx(o, r, c):
            return (o * NR + r) * Cn + c

        if axis in G.F:
            fpos = G.F.index(axis)
            for o, xi in enumerate(self.orbit):
                w = np.exp(2j * np.pi * xi[fpos] / C.shape[axis])
                for r in range(NR):
                    for c in range(Cn):
                        S[idx(o, r, c), idx(o, r, c)] = w
            return S
        rpos = G.R.index(axis)
        Ridx = np.arange(NR).reshape(G.Rshape)
        nxt = np.roll(Ridx, -1, axis=rpos).reshape(-1)
        coord = np.array(np.unravel_index(np.arange(NR), G.Rshape)).T
        top = coord[:, rpos] == G.Rshape[rpos] - 1
        if axis != C.wrap_axis or not G.F:
            if axis == C.wrap_axis:
                raise RuntimeError("single-block monodromy handled by dense fallback")
            for o in range(nO):
                for r in range(NR):
                    for c in range(Cn):
                        S[idx(o, r, c), idx(o, nxt[r], c)] = 1.0
            return S
        sizes = np.array(G.Fshape)
        comp_maps = C._component_maps(k)
        for o, eta in enumerate(self.orbit):
            for r in range(NR):
                if not top[r]:
                    for c in range(Cn):
                        S[idx(o, r, c), idx(o, nxt[r], c)] = 1.0
                    continue
                # wrap: value at eta on top comes from xi = T^-1 eta at layer 0
                xi = self.orbit[(o - 1) % nO]
                oxi = (o - 1) % nO
                for K, terms in comp_maps:
                    for off, K2, w in terms:
                        phase = np.exp(2j * np.pi * np.sum(np.array(xi) * off / sizes))
                        S[idx(o, r, K), idx(oxi, nxt[r], K2)] += w * phase
        return S

    def d(self, k):
        key = ("d", k)
        if key in self._cache:
            return self._cache[key]
        C = self.C
        if k >= C.n:
            D = np.zeros((0, self.dims[k]), dtype=complex)
        elif C.wrap_axis is not None and not self.G.F:
            D = C.d(k).toarray().astype(complex)
        else:
            W = ml.coordinate_wedge(C.n, k)
            nrep = len(self.orbit) * self.G.NR
            D = np.zeros((self.dims[k + 1], self.dims[k]), dtype=complex)
            I = np.eye(self.dims[k])
            for i in range(C.n):
                Wi = np.kron(np.eye(nrep), W[i])
                D += Wi @ (self._shift(i, k) - I) / C.h[i]
        self._cache[key] = D
        return D
