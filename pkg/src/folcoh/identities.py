"""Operator identity suites.

Three residual classes:

exact        discrete identities that hold to round-off on every case
machine      continuum identities on the su2 backend, where they are exact
convergence  continuum identities on grids, checked across one doubling
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cohomology import CohomologyEngine

EXACT_TOL = 1e-10
D2_TOL = 1e-13
STAR_TOL = 1e-12
CONVERGENCE_RATIO = 0.6
NEGLIGIBLE = 1e-10


@dataclass
class IdentityResult:
    name: str
    residual: float
    cls: str
    tol: float
    passed: bool
    degree: int | None = None
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        out = {
            "name": self.name,
            "degree": self.degree,
            "residual": float(self.residual),
            "class": self.cls,
            "tol": self.tol,
            "passed": bool(self.passed),
        }
        if self.detail:
            out["detail"] = {k: float(v) for k, v in sorted(self.detail.items())}
        return out


# ---------------------------------------------------------------- helpers
def random_batch(C, k, rng, trials):
    if C.is_complex:
        return np.array([C.random_form(k, rng) for _ in range(trials)]).T
    return rng.standard_normal((C.dim(k), trials))


def colnorms(M, X):
    return np.sqrt(np.maximum(np.real(np.sum(np.conj(X) * (M @ X), axis=0)), 0.0))


def _ratio(M_out, R, M_in, X, scale=1.0):
    den = scale * colnorms(M_in, X)
    num = colnorms(M_out, R)
    ok = den > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(num[ok] / den[ok]))


def operator_scale(engine: CohomologyEngine):
    """Largest singular value of d in mass-orthonormal coordinates."""
    vals = [F.sigma_max for (fam, k), F in engine.families.items() if fam == "d" and F.entries]
    return max(vals + [1.0])


def _inf_norm(A):
    if A.shape[0] == 0:
        return 0.0
    return float(np.max(np.asarray(abs(A).sum(axis=1)).ravel()))


# ---------------------------------------------------------------- identity tables
def _continuum_table(c, n):
    """name -> (residual function(x, k), output degree offset, derivative order, degree range)."""

    def delta_commutator(x, k):
        return c.delta(c.Pa(x, k), k) - c.Pa(c.delta(x, k), k - 1) - c.eps(c.Pb(x, k), k)

    def d_commutator(x, k):
        return c.Pa(c.d(x, k), k + 1) - c.d(c.Pa(x, k), k) - c.Pb(c.eps_star(x, k), k + 1)

    def pb_eps_pb(x, k):
        return c.Pb(c.eps(c.Pb(x, k), k), k - 1)

    def pb_epsstar_pb(x, k):
        return c.Pb(c.eps_star(c.Pb(x, k), k), k + 1)

    def eps_pb(x, k):
        y = c.eps(c.Pb(x, k), k)
        return y - c.Pa(y, k - 1)

    def pb_eps_pa(x, k):
        return c.Pb(c.eps(c.Pa(x, k), k), k - 1) - c.Pb(c.eps(x, k), k - 1)

    def lap_a_tilde(x, k):
        y = c.Pa(x, k)
        return c.laplacian_a(y, k) - c.lap_tilde(y, k)

    def lap_tilde_bar(x, k):
        y = c.Pa(x, k)
        return c.lap_tilde(y, k) - c.Pa(c.lap_bar(y, k), k)

    def d_epsstar_closed(x, k):
        y = c.Pa(x, k)
        z = c.d(y, k) + c.eps_star(y, k)
        return c.Pa(z, k + 1) - z

    def lap_eps_closed(x, k):
        y = c.Pa(x, k)
        z = c.lap_eps(y, k)
        return c.Pa(z, k) - z

    return {
        "delta_projector_commutator": (delta_commutator, -1, 1, range(1, n + 1)),
        "d_projector_commutator": (d_commutator, +1, 1, range(0, n)),
        "Pb_eps_Pb_vanishes": (pb_eps_pb, -1, 0, range(1, n + 1)),
        "Pb_epsstar_Pb_vanishes": (pb_epsstar_pb, +1, 0, range(0, n)),
        "eps_Pb_is_antibasic": (eps_pb, -1, 0, range(1, n + 1)),
        "Pb_eps_Pa_equals_Pb_eps": (pb_eps_pa, -1, 0, range(1, n + 1)),
        "antibasic_laplacian_tilde": (lap_a_tilde, 0, 2, range(0, n + 1)),
        "antibasic_laplacian_bar": (lap_tilde_bar, 0, 2, range(0, n + 1)),
        "d_plus_epsstar_preserves_antibasic": (d_epsstar_closed, +1, 1, range(0, n)),
        "laplacian_eps_preserves_antibasic": (lap_eps_closed, 0, 2, range(0, n + 1)),
    }


def quadratic_form_residual(c, A, B):
    """|<Delta_a a, b> - <Delta a, b> + int P_b(chi,a) P_b(chi,b) |phi0|^2| per column pair."""
    C, pkg = c.C, c.pkg
    M1, M0 = c.M[1], c.M[0]
    phi_sq = C.pointwise_norm_sq(pkg.phi0, C.p + 1)
    out_lhs, out_rhs = [], []
    for j in range(A.shape[1]):
        a, b = A[:, j], B[:, j]
        lhs = np.vdot(b, M1 @ c.laplacian_a(a, 1))
        full = np.vdot(b, M1 @ c.laplacian(a, 1))
        fa = c.Pb(C.interior(pkg.xi, a, 1), 0)
        fb = c.Pb(C.interior(pkg.xi, b, 1), 0)
        corr = np.vdot(fb, M0 @ C.multiply_function(phi_sq, fa, 0))
        out_lhs.append(lhs)
        out_rhs.append(full - corr)
    return np.abs(np.array(out_lhs) - np.array(out_rhs))


# ---------------------------------------------------------------- exact suite
def exact_suite(engine: CohomologyEngine, rng, trials=100, metric_variant=None):
    """Discrete identities that hold to round-off regardless of hypotheses."""
    C = engine.C
    c = engine.calculus()
    n = C.n
    S = operator_scale(engine)
    M = c.M
    res: list[IdentityResult] = []

    def add(name, k, r, tol=EXACT_TOL, **detail):
        res.append(IdentityResult(name, r, "exact", tol, bool(r <= tol), k, detail))

    for k in range(n + 1):
        X = random_batch(C, k, rng, trials)
        Y = random_batch(C, k, rng, trials)
        PbX = c.Pb(X, k)
        PaX = X - PbX
        if k < n - 1:
            dd = c.D[k + 1] @ (c.D[k] @ X)
            scale = _inf_norm(c.D[k + 1]) * _inf_norm(c.D[k]) * np.max(np.abs(X), axis=0)
            add("d_squared", k, float(np.max(np.max(np.abs(dd), axis=0) / scale)), D2_TOL)
        if k < n:
            Z = random_batch(C, k + 1, rng, trials)
            lhs = np.sum(np.conj(Z) * (M[k + 1] @ (c.D[k] @ X)), axis=0)
            rhs = np.sum(np.conj(c.Dl[k + 1] @ Z) * (M[k] @ X), axis=0)
            den = S * colnorms(M[k], X) * colnorms(M[k + 1], Z)
            add("adjoint_d_delta", k, float(np.max(np.abs(lhs - rhs) / den)))
            add("d_preserves_basic", k, _ratio(M[k + 1], c.Pa(c.D[k] @ PbX, k + 1), M[k], X, S))
            add("d_a_equals_Pa_d", k, _ratio(M[k + 1], c.d_a(X, k) - c.Pa(c.D[k] @ X, k + 1), M[k], X, S))
            if k < n - 1:
                add("d_a_squared", k, _ratio(M[k + 2], c.d_a(c.d_a(X, k), k + 1), M[k], X, S * S))
            Za = c.Pa(Z, k + 1)
            lhs = np.sum(np.conj(Za) * (M[k + 1] @ c.d_a(PaX, k)), axis=0)
            rhs = np.sum(np.conj(c.delta_a(Za, k + 1)) * (M[k] @ PaX), axis=0)
            den = S * colnorms(M[k], PaX) * colnorms(M[k + 1], Za)
            ok = den > 0
            r = float(np.max(np.abs(lhs - rhs)[ok] / den[ok])) if np.any(ok) else 0.0
            add("adjoint_d_a_delta_a", k, r)
            E = c.eps_matrix(k + 1)
            Es = c.eps_star_matrix(k)
            lhs = np.sum(np.conj(Z) * (M[k + 1] @ (Es @ X)), axis=0)
            rhs = np.sum(np.conj(E @ Z) * (M[k] @ X), axis=0)
            den = colnorms(M[k], X) * colnorms(M[k + 1], Z) * max(1.0, _eps_scale(c))
            add("adjoint_eps_epsstar", k, float(np.max(np.abs(lhs - rhs) / den)))
        if k > 0:
            add("delta_a_equals_delta_Pa", k, _ratio(M[k - 1], c.delta_a(X, k) - c.Dl[k] @ PaX, M[k], X, S))
            if k > 1:
                add("delta_squared", k, _ratio(M[k - 2], c.Dl[k - 1] @ (c.Dl[k] @ X), M[k], X, S * S))
                add("delta_a_squared", k, _ratio(M[k - 2], c.delta_a(c.delta_a(X, k), k - 1), M[k], X, S * S))
        add("Pb_idempotent", k, _ratio(M[k], c.Pb(PbX, k) - PbX, M[k], X))
        add("Pa_idempotent", k, _ratio(M[k], c.Pa(PaX, k) - PaX, M[k], X))
        add("Pa_plus_Pb", k, _ratio(M[k], PaX + PbX - X, M[k], X))
        lhs = np.sum(np.conj(Y) * (M[k] @ PbX), axis=0)
        rhs = np.sum(np.conj(c.Pb(Y, k)) * (M[k] @ X), axis=0)
        den = colnorms(M[k], X) * colnorms(M[k], Y)
        add("Pb_self_adjoint", k, float(np.max(np.abs(lhs - rhs) / den)))
        DX = _lap_a(c, PaX, k)
        DY = _lap_a(c, c.Pa(Y, k), k)
        lhs = np.sum(np.conj(c.Pa(Y, k)) * (M[k] @ DX), axis=0)
        rhs = np.sum(np.conj(DY) * (M[k] @ PaX), axis=0)
        den = colnorms(M[k], PaX) * colnorms(M[k], c.Pa(Y, k)) * S * S
        ok = den > 0
        add("Delta_a_symmetric", k, float(np.max(np.abs(lhs - rhs)[ok] / den[ok])) if np.any(ok) else 0.0)
        r = 0.0
        sign = (-1) ** (k * (n - k))
        for j in range(min(trials, 20)):
            x = X[:, j]
            y = C.star(C.star(x, k), n - k) - sign * x
            r = max(r, float(np.linalg.norm(y) / np.linalg.norm(x)))
        add("star_star_sign", k, r, STAR_TOL)
    if metric_variant is not None:
        res.extend(intertwining_suite(C, metric_variant, rng, trials))
    return res


def _lap_a(c, X, k):
    """Delta_a as D_a^2 on the same degree."""
    return c.laplacian_a(X, k)


def _eps_scale(c):
    inv = c.pkg.invariants
    return inv.get("kappa_a_sup", 0.0) + inv.get("phi0_sup", 0.0)


def intertwining_suite(C, C2, rng, trials=100):
    """B^k = *' *^{-1}: delta' B = B delta, and B invertible."""
    res = []
    n = C.n
    for k in range(1, n + 1):
        r_int, r_inv = 0.0, 0.0
        M0 = C2.mass(k - 1)
        for _ in range(min(trials, 20)):
            x = C.random_form(k, rng)
            Bx = C.metric_change(x, k, C2.metric)
            lhs = C2.delta(k) @ Bx
            rhs = C.metric_change(C.delta(k) @ x, k - 1, C2.metric)
            den = np.sqrt(abs(np.vdot(rhs, M0 @ rhs))) + np.sqrt(abs(np.vdot(lhs, M0 @ lhs)))
            if den > 0:
                r_int = max(r_int, float(np.sqrt(abs(np.vdot(lhs - rhs, M0 @ (lhs - rhs)))) / den))
            back = C2.metric_change(Bx, k, C.metric)
            r_inv = max(r_inv, float(np.linalg.norm(back - x) / np.linalg.norm(x)))
        res.append(IdentityResult("metric_change_intertwining", r_int, "exact", EXACT_TOL, r_int <= EXACT_TOL, k))
        res.append(IdentityResult("metric_change_invertible", r_inv, "exact", STAR_TOL, r_inv <= STAR_TOL, k))
    return res


# ---------------------------------------------------------------- continuum suite
def machine_suite(engine: CohomologyEngine, rng, trials=50, quadratic_form=True):
    """Continuum identities on a backend where they hold to round-off."""
    c = engine.calculus()
    C = engine.C
    n = C.n
    S = operator_scale(engine)
    res = []
    for name, (fn, off, order, degrees) in _continuum_table(c, n).items():
        for k in degrees:
            X = random_batch(C, k, rng, trials)
            r = _ratio(c.M[k + off], fn(X, k), c.M[k], X, S**order)
            res.append(IdentityResult(name, r, "machine", EXACT_TOL, r <= EXACT_TOL, k))
    if quadratic_form:
        A = c.Pa(random_batch(C, 1, rng, trials), 1)
        B = c.Pa(random_batch(C, 1, rng, trials), 1)
        den = S * S * colnorms(c.M[1], A) * colnorms(c.M[1], B)
        r = float(np.max(quadratic_form_residual(c, A, B) / den))
        res.append(IdentityResult("quadratic_form_correction", r, "machine", EXACT_TOL, r <= EXACT_TOL, 1))
    return res


def smooth_batch(C, k, params):
    """Evaluate smooth test forms described by ``params`` on a grid complex."""
    coords = C.coordinates()
    names = [ax.name for ax in C.axes]
    lengths = np.array([ax.length for ax in C.axes])
    X = np.stack([coords[nm] for nm in names], axis=1)
    bump = np.ones(C.npts)
    if C.wrap_axis is not None:
        t = X[:, C.wrap_axis] / lengths[C.wrap_axis]
        bump = np.sin(np.pi * t) ** 4
    cols = []
    for comp_params in params:
        F = np.zeros((C.npts, C.ncomp(k)))
        for c_idx, (amp, m, phase) in enumerate(comp_params):
            F[:, c_idx] = amp * np.sin(2 * np.pi * (X / lengths) @ m + phase) * bump
        cols.append(F.reshape(-1))
    return np.array(cols).T


def smooth_params(C, k, rng, trials):
    from math import comb

    out = []
    for _ in range(trials):
        comps = []
        for _ in range(comb(C.n, k)):
            m = rng.integers(-2, 3, size=C.n).astype(float)
            if C.wrap_axis is not None:
                m[C.wrap_axis] = 0.0
            comps.append((rng.uniform(0.5, 1.5), m, rng.uniform(0, 2 * np.pi)))
        out.append(comps)
    return out


def convergence_identities(engines, rng, trials=4, quadratic_form=True):
    """Continuum identities on grids: residual at 2N versus N for the same smooth inputs."""
    e0 = engines[0]
    n = e0.C.n
    calcs = [e.calculus() for e in engines]
    params = {k: smooth_params(e0.C, k, rng, trials) for k in range(n + 1)}
    res = []
    for name in _continuum_table(calcs[0], n):
        for k in _continuum_table(calcs[0], n)[name][3]:
            vals = []
            for c in calcs:
                fn, off, order, _ = _continuum_table(c, n)[name]
                X = smooth_batch(c.C, k, params[k])
                vals.append(_ratio(c.M[k + off], fn(X, k), c.M[k], X))
            res.append(_convergence_result(name, k, vals))
    if quadratic_form:
        p1 = smooth_params(e0.C, 1, rng, trials)
        p2 = smooth_params(e0.C, 1, rng, trials)
        vals = []
        for c in calcs:
            A = c.Pa(smooth_batch(c.C, 1, p1), 1)
            B = c.Pa(smooth_batch(c.C, 1, p2), 1)
            den = colnorms(c.M[1], A) * colnorms(c.M[1], B)
            vals.append(float(np.max(quadratic_form_residual(c, A, B) / den)))
        res.append(_convergence_result("quadratic_form_correction", 1, vals))
    return res


def _convergence_result(name, k, vals):
    r0, r1 = vals[0], vals[-1]
    ratio = r1 / r0 if r0 > 0 else 0.0
    passed = (r0 <= NEGLIGIBLE and r1 <= NEGLIGIBLE) or ratio <= CONVERGENCE_RATIO
    return IdentityResult(
        name, r1, "convergence", CONVERGENCE_RATIO, bool(passed), k, {"residual_N": r0, "residual_2N": r1, "ratio": ratio}
    )


# ---------------------------------------------------------------- forms-level convergence
def leibniz_convergence(complexes, rng, trials=3):
    """d(a ^ b) - da ^ b - (-1)^k1 a ^ db at N and 2N for smooth inputs."""
    C0 = complexes[0]
    n = C0.n
    res = []
    for k1 in range(n):
        for k2 in range(n - k1):
            if k1 + k2 + 1 > n:
                continue
            pa = smooth_params(C0, k1, rng, trials)
            pb = smooth_params(C0, k2, rng, trials)
            vals = []
            for C in complexes:
                A = smooth_batch(C, k1, pa)
                B = smooth_batch(C, k2, pb)
                worst = 0.0
                for j in range(trials):
                    a, b = A[:, j], B[:, j]
                    lhs = C.d(k1 + k2) @ C.wedge(a, b, k1, k2)
                    rhs = C.wedge(C.d(k1) @ a, b, k1 + 1, k2) + (-1) ** k1 * C.wedge(a, C.d(k2) @ b, k1, k2 + 1)
                    M = C.mass(k1 + k2 + 1)
                    num = np.sqrt(abs(np.vdot(lhs - rhs, M @ (lhs - rhs))))
                    den = np.sqrt(abs(np.vdot(lhs, M @ lhs))) + np.sqrt(abs(np.vdot(rhs, M @ rhs)))
                    worst = max(worst, num / den if den > 0 else 0.0)
                vals.append(worst)
            res.append(_convergence_result(f"leibniz_{k1}_{k2}", k1 + k2 + 1, vals))
    return res
