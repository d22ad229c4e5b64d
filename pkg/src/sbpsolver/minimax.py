"""Mountain-pass geometry checks, a path-deformation minimax solver and
deflation for multiple critical points of the reduced functional."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .elliptic import EigenBasis, eigenpairs
from .energy import ProblemConfig, ReducedFunctional, h01_inner, h01_norm
from .grid import ScalarField, norm, random_smooth_field

__all__ = [
    "GeometryReport",
    "SolutionRecord",
    "DeflatedSolveResult",
    "k_omega",
    "verify_geometry",
    "mountain_pass",
    "deflated_solve",
    "omega_sweep",
    "branch_table_rows",
    "write_branch_table",
    "TRIVIAL_THRESHOLD",
]

logger = logging.getLogger(__name__)

TRIVIAL_THRESHOLD = 1e-6
BRANCH_COLUMNS = ("omega", "deflation_index", "J_value", "u_L2_norm", "dual_norm", "iterations", "converged")


# ---------------------------------------------------------------------------
# geometry


def k_omega(level: float, lambdas: Sequence[float], factor: float = 2.0) -> int | None:
    """Smallest ``k`` (1-based) with ``factor * level < lambda_k``; None if the
    supplied eigenvalues do not reach the threshold."""
    for k, lam in enumerate(lambdas, start=1):
        if factor * level < lam:
            return k
    return None


@dataclass
class GeometryReport:
    """Sampled evidence for the two mountain-pass conditions.

    ``k_omega`` uses ``2 (||chi||_inf * safety + omega) < lambda_k``;
    ``k_omega_unscaled`` is the same rule without the factor 2.
    ``R`` maps a probed subspace dimension ``m`` to its radius.
    """

    k_omega: int
    k_omega_unscaled: int
    dim_V: int
    rho: float
    alpha: float
    R: dict[int, float]
    case: str
    threshold_checks: list[tuple[str, float]] = field(default_factory=list)
    ok: bool = True
    failures: list[str] = field(default_factory=list)
    level: float = 0.0
    violating_direction: ScalarField | None = None

    def to_dict(self) -> dict:
        return {
            "k_omega": self.k_omega,
            "k_omega_unscaled": self.k_omega_unscaled,
            "dim_V": self.dim_V,
            "rho": self.rho,
            "alpha": self.alpha,
            "R": {str(k): v for k, v in self.R.items()},
            "case": self.case,
            "threshold_checks": [[c, m] for c, m in self.threshold_checks],
            "ok": self.ok,
            "failures": list(self.failures),
            "level": self.level,
        }


def _unit_h01(u: ScalarField) -> ScalarField:
    n = h01_norm(u)
    return (1.0 / n) * u if n > 0 else u


def _project_out(u: ScalarField, vs: Sequence[ScalarField]) -> ScalarField:
    """Remove L2 components along orthonormal ``vs`` (two passes)."""
    w = u.domain.cell_volume
    x = u.values.copy()
    for _ in range(2):
        for v in vs:
            x -= float(x @ v.values) * w * v.values
    return u.with_values(x)


def _random_bump(domain, rng: np.random.Generator) -> ScalarField:
    """Gaussian bump with a random centre in the middle half of the box and a
    log-uniform width between the mesh size and a quarter of the box."""
    lengths = np.asarray(domain.lengths, dtype=float)
    centre = lengths * rng.uniform(0.25, 0.75, size=domain.dim)
    lo, hi = domain.h_max, 0.25 * float(lengths.min())
    width = math.exp(rng.uniform(math.log(lo), math.log(max(hi, lo))))
    r2 = sum((c - x0) ** 2 for c, x0 in zip(domain.coordinates(), centre))
    return ScalarField(domain, np.exp(-0.5 * r2 / width**2).ravel())


def sample_sphere_directions(basis_V: Sequence[ScalarField], count: int, rng: np.random.Generator,
                             domain) -> list[ScalarField]:
    """Random H01-unit directions in the L2-orthogonal complement of ``basis_V``.

    Even draws are smooth random fields, odd draws are Gaussian bumps of random
    width; the bumps probe the concentrated directions along which the
    nonlinearity wins soonest.
    """
    out = []
    while len(out) < count:
        raw = random_smooth_field(domain, rng) if len(out) % 2 == 0 else _random_bump(domain, rng)
        v = _project_out(raw, basis_V)
        if h01_norm(v) > 0:
            out.append(_unit_h01(v))
    return out


def sample_subspace_directions(vectors: Sequence[ScalarField], count: int, rng) -> list[ScalarField]:
    """Random H01-unit directions in ``span(vectors)``."""
    mat = np.column_stack([v.values for v in vectors])
    out = []
    for _ in range(count):
        c = rng.standard_normal(len(vectors))
        out.append(_unit_h01(vectors[0].with_values(mat @ c)))
    return out


def _ray_threshold(F: ReducedFunctional, v: ScalarField, t0: float, t_max: float) -> float | None:
    """Smallest grid point ``t`` on a doubling grid beyond which ``J(s v) <= 0``
    for every sampled ``s`` up to ``t_max``; None if J stays positive."""
    t = t0
    last_pos = 0.0
    found = None
    while t <= t_max:
        if F.value(t * v) > 0:
            last_pos = t
            found = None
        elif found is None:
            found = t
        t *= 2.0
    if found is None:
        return None
    # bisect between the last positive sample and the first nonpositive one
    lo, hi = last_pos, found
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if F.value(mid * v) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-6 * hi:
            break
    return hi


def verify_geometry(
    config: ProblemConfig,
    basis: EigenBasis | None = None,
    *,
    seed: int = 42,
    sphere_samples: int = 64,
    ray_samples: int = 32,
    probe_dims: Sequence[int] = (1, 2, 4),
    chi_safety: float = 1.05,
    radius_margin: float = 1.5,
    rho_fraction: float = 0.25,
    t_max: float = 1e6,
) -> GeometryReport:
    """Sampled verification of the mountain-pass geometry for ``J``.

    ``V`` is spanned by the first ``k_omega - 1`` eigenvectors and ``X`` is its
    L2-orthogonal complement. ``rho`` is ``rho_fraction`` times the largest
    radius (found by bisection) at which every sampled H01-unit direction of
    ``X`` has ``J > 0``; ``alpha`` is the sampled minimum of ``J(rho v)``.
    A sampled minimum can only overestimate the true one, so the radius is
    taken well inside the bisected one, where the quadratic part dominates
    along every direction. For every probed
    subspace (span of the first ``m`` eigenvectors) the radius ``R`` is
    ``radius_margin`` times the largest sampled ray threshold beyond which
    ``J <= 0``.
    """
    rng = np.random.default_rng(seed)
    domain = config.grid
    level = config.lift.sup_norm * chi_safety + config.omega
    need = max(max(probe_dims), 4)
    if basis is None or basis.count < need:
        basis = eigenpairs(domain, need)
    while True:
        k = k_omega(level, basis.lambdas, 2.0)
        if k is not None or basis.count >= min(64, domain.size):
            break
        basis = eigenpairs(domain, min(64, domain.size, 2 * basis.count))
    if k is None:
        raise ValueError("frequency too large: k_omega exceeds the computable spectrum")
    k_plain = k_omega(level, basis.lambdas, 1.0) or 1
    if k - 1 >= basis.count:
        basis = eigenpairs(domain, k)
    V = list(basis.vectors[: k - 1])
    F = ReducedFunctional(config)
    failures: list[str] = []
    checks: list[tuple[str, float]] = [
        ("2*level < lambda_k", float(basis.lambdas[k - 1] - 2.0 * level)),
    ]
    if k > 1:
        checks.append(("2*level >= lambda_{k-1}", float(2.0 * level - basis.lambdas[k - 2])))

    # condition (i): positivity on a small sphere of X
    dirs = sample_sphere_directions(V, sphere_samples, rng, domain)

    def min_on_sphere(r):
        vals = [F.value(r * v) for v in dirs]
        i = int(np.argmin(vals))
        return vals[i], i

    hi = 1.0
    val, _ = min_on_sphere(hi)
    grow = 0
    while val > 0 and grow < 30:
        hi *= 2.0
        val, _ = min_on_sphere(hi)
        grow += 1
    lo = 0.0
    if val > 0:
        lo = hi  # positive everywhere sampled up to the cap
    else:
        r = hi
        for _ in range(60):
            r *= 0.5
            v_r, _ = min_on_sphere(r)
            if v_r > 0:
                lo = r
                break
            hi = r
        if lo > 0:
            for _ in range(30):
                mid = 0.5 * (lo + hi)
                if min_on_sphere(mid)[0] > 0:
                    lo = mid
                else:
                    hi = mid
    violating = None
    if lo == 0.0:
        rho, alpha = float("nan"), float("nan")
        _, i = min_on_sphere(hi)
        violating = dirs[i]
        failures.append("no radius rho with J > 0 on the sampled sphere of X")
    else:
        rho = rho_fraction * lo
        alpha, _ = min_on_sphere(rho)
        checks.append(("alpha > 0", alpha))

    # condition (ii): J <= 0 outside a ball on finite-dimensional subspaces
    R: dict[int, float] = {}
    for m in probe_dims:
        rays = sample_subspace_directions(basis.vectors[:m], ray_samples, rng)
        worst = 0.0
        bad = None
        for v in rays:
            t_star = _ray_threshold(F, v, 1e-3, t_max)
            if t_star is None:
                bad = v
                break
            worst = max(worst, t_star)
        if bad is not None:
            failures.append(f"J stays positive along a sampled ray of the {m}-dimensional probe")
            if violating is None:
                violating = bad
            R[m] = float("inf")
        else:
            R[m] = radius_margin * worst
    return GeometryReport(
        k_omega=k,
        k_omega_unscaled=k_plain,
        dim_V=k - 1,
        rho=rho,
        alpha=alpha,
        R=R,
        case="one" if k == 1 else "two",
        threshold_checks=checks,
        ok=not failures,
        failures=failures,
        level=level,
        violating_direction=violating,
    )


# ---------------------------------------------------------------------------
# mountain pass


@dataclass
class SolutionRecord:
    u: ScalarField
    phi_full: ScalarField
    omega: float
    J_value: float
    dual_norm: float
    iterations: int
    path_energy: float
    deflation_index: int = 0
    seed: int = 0
    converged: bool = False
    trivial: bool = False
    message: str = ""

    @property
    def nontrivial(self) -> bool:
        return self.converged and not self.trivial

    @property
    def u_l2(self) -> float:
        return norm(self.u, "L2")

    def meta(self) -> dict:
        return {
            "omega": self.omega,
            "J_value": self.J_value,
            "dual_norm": self.dual_norm,
            "iterations": self.iterations,
            "path_energy": self.path_energy,
            "deflation_index": self.deflation_index,
            "seed": self.seed,
            "converged": self.converged,
            "trivial": self.trivial,
            "u_L2_norm": self.u_l2,
            "message": self.message,
        }


class _Deflated:
    """``D(u) = J(u) * prod_k (1 + 1/||u - u_k||^2)(1 + 1/||u + u_k||^2)`` (H01 norms)."""

    def __init__(self, F: ReducedFunctional, known: Sequence[ScalarField]):
        self.F = F
        self.known = list(known)
        # floor for ||u -+ u_k||^2 so a node sitting on a known orbit stays finite
        self.floors = [1e-12 * max(h01_inner(uk, uk), 1.0) for uk in self.known]

    def factor(self, u: ScalarField) -> tuple[float, np.ndarray]:
        m = 1.0
        grad = np.zeros_like(u.values)
        terms = []
        for uk, floor in zip(self.known, self.floors):
            for sgn in (1.0, -1.0):
                diff = u.values - sgn * uk.values
                d2 = h01_inner(u.with_values(diff), u.with_values(diff))
                d2 = max(d2, floor)
                f = 1.0 + 1.0 / d2
                m *= f
                terms.append((diff, d2, f))
        for diff, d2, f in terms:
            # H01-gradient of log(1 + 1/d2) is -2 diff / (d2^2 f)
            grad += -2.0 * diff / (d2 * d2 * f)
        return m, grad

    def value(self, u: ScalarField) -> float:
        if not self.known:
            return self.F.value(u)
        m, _ = self.factor(u)
        return self.F.value(u) * m

    def gradient(self, u: ScalarField) -> tuple[ScalarField, float]:
        """Sobolev gradient of the objective and its H01 norm."""
        g = self.F.gradient(u)
        if not self.known:
            return g.sobolev, g.dual_norm
        m, glog = self.factor(u)
        j = self.F.value(u)
        s = m * g.sobolev.values + j * m * glog
        sf = u.with_values(s)
        return sf, h01_norm(sf)


def _redistribute(path: list[ScalarField], keep: int) -> list[ScalarField]:
    """Equal H01 arclength on each side of node ``keep`` (which stays put)."""
    out = list(path)
    for lo, hi in ((0, keep), (keep, len(path) - 1)):
        if hi - lo < 2:
            continue
        seg = path[lo : hi + 1]
        lengths = [h01_norm(seg[i + 1] - seg[i]) for i in range(len(seg) - 1)]
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        if cum[-1] == 0.0:
            continue
        targets = np.linspace(0.0, cum[-1], len(seg))
        for k in range(1, len(seg) - 1):
            i = int(np.clip(np.searchsorted(cum, targets[k]) - 1, 0, len(seg) - 2))
            span = cum[i + 1] - cum[i]
            lam = 0.0 if span == 0 else (targets[k] - cum[i]) / span
            out[lo + k] = seg[i].with_values((1.0 - lam) * seg[i].values + lam * seg[i + 1].values)
    return out


def _scale_endpoint(F, e: ScalarField, max_doublings: int = 40) -> tuple[ScalarField, bool]:
    t = 1.0
    for _ in range(max_doublings):
        if F.value(t * e) <= 0:
            return t * e, True
        t *= 2.0
    return e, False


def _descend(obj, u: ScalarField, max_iters: int, tol: float, trivial_threshold: float):
    """Plain Sobolev steepest descent (used when no endpoint with J <= 0 exists)."""
    tau = 1.0
    val = obj.value(u)
    it = 0
    gn = float("inf")
    for it in range(1, max_iters + 1):
        s, gn = obj.gradient(u)
        if norm(u, "L2") <= trivial_threshold:
            break
        # relative test: near u = 0 the gradient is proportional to u
        if gn <= tol * min(1.0, h01_norm(u)):
            break
        tau = min(2.0 * tau, 4.0)
        while True:
            q = u.with_values(u.values - tau * s.values)
            vq = obj.value(q)
            if vq <= val - 0.25 * tau * gn * gn or tau < 1e-12:
                break
            tau *= 0.5
        u, val = q, vq
    return u, val, it


def mountain_pass(
    config: ProblemConfig,
    endpoint_e: ScalarField,
    path_nodes: int = 21,
    max_iters: int = 2000,
    tol: float = 1e-6,
    *,
    deflate: Sequence[ScalarField] = (),
    trivial_threshold: float = TRIVIAL_THRESHOLD,
    redistribute_every: int = 10,
    seed: int = 0,
    deflation_index: int = 0,
    functional: ReducedFunctional | None = None,
) -> SolutionRecord:
    """Path-deformation minimax search for a mountain-pass critical point.

    A piecewise-linear path from 0 to ``e`` (with ``J(e) <= 0``, enforced by
    doubling ``e``) is deformed by repeatedly taking its highest node (lowest
    index on ties) and

    1. moving it to the crest of the line through it along the local path
       tangent (one quadratic model step, accepted only if ``J`` increases);
    2. stepping along the Sobolev gradient with the tangent component
       removed, with Armijo backtracking (parameter 1/4, factor 1/2) and the
       step capped by the adjacent segment length.

    Nodes are re-equidistributed in H01 arclength every ``redistribute_every``
    iterations, on each side of the current top node. The search stops when
    the top node's gradient norm falls below ``tol``. With ``deflate`` the
    deformation runs on the deflated functional, and the returned record is
    re-measured on the undeflated ``J``.

    If no multiple of ``e`` has ``J <= 0`` there is no mountain to cross; the
    search then descends from ``e`` and the result is typically trivial.
    """
    F = functional if functional is not None else ReducedFunctional(config)
    obj = _Deflated(F, deflate)
    e, ok = _scale_endpoint(obj, endpoint_e)
    t0 = time.perf_counter()
    if not ok:
        u, val, its = _descend(obj, endpoint_e, max_iters, tol, trivial_threshold)
        return _finish(config, F, u, its, val, seed, deflation_index, tol, trivial_threshold,
                       "no endpoint with J <= 0; descended from e")
    n = max(int(path_nodes), 3)
    path = [e.with_values((k / (n - 1)) * e.values) for k in range(n)]
    vals = np.array([obj.value(p) for p in path])
    tau = 1.0
    dn = float("inf")
    it = 0
    message = "max_iters exceeded"
    for it in range(1, max_iters + 1):
        m = int(np.argmax(vals))
        if m == 0 or m == n - 1:
            message = "path maximum at an endpoint"
            break
        x = path[m]
        tangent = _unit_h01(path[m + 1] - path[m - 1])
        seg = min(h01_norm(x - path[m - 1]), h01_norm(path[m + 1] - x))
        s, dn = obj.gradient(x)
        if dn <= tol:
            message = "converged"
            break
        # crest correction along the tangent
        slope = h01_inner(s, tangent)
        delta = 0.1 * seg
        if delta > 0:
            j1 = obj.value(x.with_values(x.values + delta * tangent.values))
            curv = 2.0 * (j1 - vals[m] - slope * delta) / (delta * delta)
            if curv < 0:
                sig = float(np.clip(-slope / curv, -seg, seg))
                xn = x.with_values(x.values + sig * tangent.values)
                jn = obj.value(xn)
                if jn >= vals[m]:
                    path[m], vals[m] = xn, jn
                    x = xn
                    s, dn = obj.gradient(x)
                    if dn <= tol:
                        message = "converged"
                        break
        d = s.values - h01_inner(s, tangent) * tangent.values
        dnorm = h01_norm(s.with_values(d))
        if dnorm == 0.0:
            continue
        tau = min(2.0 * tau, 4.0, seg / dnorm if seg > 0 else 4.0)
        while True:
            q = x.with_values(x.values - tau * d)
            jq = obj.value(q)
            if jq <= vals[m] - 0.25 * tau * dnorm * dnorm:
                break
            tau *= 0.5
            if tau < 1e-14:
                break
        path[m], vals[m] = q, jq
        if redistribute_every and it % redistribute_every == 0:
            m = int(np.argmax(vals))
            path = _redistribute(path, m)
            vals = np.array([obj.value(p) for p in path])
    m = int(np.argmax(vals))
    u = path[m]
    logger.info("mountain pass: %s after %d iterations (%.2fs)", message, it, time.perf_counter() - t0)
    return _finish(config, F, u, it, float(np.max(vals)), seed, deflation_index, tol,
                   trivial_threshold, message)


def _finish(config, F, u, its, path_energy, seed, deflation_index, tol, trivial_threshold, message):
    res = F.phi(u)
    g = F.gradient(u)
    j = F.value(u)
    trivial = norm(u, "L2") <= trivial_threshold
    phi_full = config.lift.chi.with_values(config.lift.chi.values + res.phi.full().ravel(), name="phi")
    return SolutionRecord(
        u=u.with_values(u.values, name="u"),
        phi_full=phi_full,
        omega=config.omega,
        J_value=j,
        dual_norm=g.dual_norm,
        iterations=its,
        path_energy=float(path_energy),
        deflation_index=deflation_index,
        seed=seed,
        converged=g.dual_norm <= tol or trivial,
        trivial=trivial,
        message=message,
    )


# ---------------------------------------------------------------------------
# deflation


@dataclass
class DeflatedSolveResult:
    """Records found by :func:`deflated_solve` plus a shortfall report."""

    records: list[SolutionRecord]
    requested: int
    attempts: int
    rejected: list[SolutionRecord] = field(default_factory=list)
    shortfall: str = ""

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]


def orbit_distance(a: ScalarField, b: ScalarField) -> float:
    """``min(||a - b||, ||a + b||)`` in H01."""
    return min(h01_norm(a - b), h01_norm(a + b))


def _polish(F: ReducedFunctional, u: ScalarField, known: Sequence[ScalarField], tol: float,
            max_iters: int = 40) -> ScalarField:
    """Jacobian-free Newton-Krylov on the deflated Sobolev gradient
    ``M(u) (-Lap_h)^{-1} J'(u)``, whose roots away from ``±u_k`` are exactly the
    critical points of ``J``."""
    from scipy.optimize import NoConvergence, newton_krylov

    defl = _Deflated(F, known)
    domain = u.domain

    def residual(x):
        v = ScalarField(domain, x)
        g = F.gradient(v).sobolev.values
        if known:
            m, _ = defl.factor(v)
            g = m * g
        return g

    # the H01 norm of the Sobolev gradient equals the dual norm; Newton's
    # stopping test is in the max norm, so iterate until the dual norm is met
    x = u.values.copy()
    try:
        x = newton_krylov(residual, x, f_tol=1e-10 * max(1.0, float(np.max(np.abs(x)))),
                          maxiter=max_iters, method="lgmres", inner_maxiter=40)
    except NoConvergence as exc:
        x = np.asarray(exc.args[0])
    except (ValueError, FloatingPointError, np.linalg.LinAlgError):
        return u
    if not np.all(np.isfinite(x)):
        return u
    cand = ScalarField(domain, x, name="u")
    return cand if F.gradient(cand).dual_norm <= max(F.gradient(u).dual_norm, tol) else u


def _random_endpoint(basis: EigenBasis, rng: np.random.Generator, m: int = 4) -> ScalarField:
    m = min(m, basis.count)
    c = rng.standard_normal(m)
    vals = basis.matrix()[:, :m] @ c
    return basis.vectors[0].with_values(vals)


def deflated_solve(
    config: ProblemConfig,
    count: int,
    seed: int = 42,
    *,
    basis: EigenBasis | None = None,
    path_nodes: int = 21,
    max_iters: int = 2000,
    tol: float = 1e-6,
    separation: float = 1e-3,
    max_attempts: int | None = None,
    endpoints: Sequence[ScalarField] | None = None,
    known: Sequence[ScalarField] = (),
    trivial_threshold: float = TRIVIAL_THRESHOLD,
) -> DeflatedSolveResult:
    """Up to ``count`` distinct nontrivial critical points via deflation.

    The first run uses the first eigenvector as endpoint and no deflation, so
    ``count = 1`` is exactly :func:`mountain_pass`. Later runs use seeded
    random endpoints in the span of the first four eigenvectors (or the given
    ``endpoints`` first) and deform the path on the deflated functional built
    from all orbits ``±u_k`` found so far (plus ``known``). A deflated
    critical point is not a critical point of ``J``, so each candidate is
    finished by Newton-Krylov on the deflated gradient system and then
    re-measured on the undeflated ``J``. A candidate is kept if it converged,
    is nontrivial and is separated from every kept orbit by more than
    ``separation * max(||u_i||, ||u_j||)`` in H01.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    if basis is None or basis.count < 4:
        basis = eigenpairs(config.grid, 4)
    F = ReducedFunctional(config)
    found: list[SolutionRecord] = []
    rejected: list[SolutionRecord] = []
    pending = list(endpoints or [])
    attempts = 0
    limit = max_attempts if max_attempts is not None else 4 * count + 2
    known = list(known)
    while len(found) < count and attempts < limit:
        deflate = known + [r.u for r in found]
        if attempts == 0 and not pending and not deflate:
            e = basis.vectors[0]
        elif pending:
            e = pending.pop(0)
        else:
            e = _random_endpoint(basis, rng)
        attempts += 1
        rec = mountain_pass(config, e, path_nodes, max_iters, tol, deflate=deflate,
                            trivial_threshold=trivial_threshold, seed=seed,
                            deflation_index=len(found), functional=F)
        if deflate and not rec.trivial and rec.dual_norm > tol:
            u = _polish(F, rec.u, deflate, tol)
            if u is not rec.u:
                rec = _finish(config, F, u, rec.iterations, rec.path_energy, seed, len(found), tol,
                              trivial_threshold, rec.message + "; polished")
        if not rec.nontrivial:
            rejected.append(rec)
            continue
        scale = h01_norm(rec.u)
        others = known + [r.u for r in found]
        if any(orbit_distance(rec.u, o) <= separation * max(scale, h01_norm(o)) for o in others):
            rec.message += "; duplicate orbit"
            rejected.append(rec)
            continue
        found.append(rec)
    shortfall = ""
    if len(found) < count:
        shortfall = (f"found {len(found)} of {count} requested solutions after {attempts} attempts "
                     f"({len(rejected)} rejected)")
        logger.warning(shortfall)
    found.sort(key=lambda r: r.J_value)
    for i, r in enumerate(found):
        r.deflation_index = i
    return DeflatedSolveResult(found, count, attempts, rejected, shortfall)


# ---------------------------------------------------------------------------
# frequency sweeps


def omega_sweep(
    config: ProblemConfig,
    omega_list: Sequence[float],
    count: int = 1,
    seed: int = 42,
    **kwargs,
) -> list[tuple[float, list[SolutionRecord]]]:
    """Independent :func:`deflated_solve` per frequency.

    A failing frequency is logged and contributes an empty record list; the
    sweep carries on with the remaining values.
    """
    omegas = [float(w) for w in omega_list]
    if not all(math.isfinite(w) for w in omegas):
        raise ValueError("omega_list must be finite")
    out: list[tuple[float, list[SolutionRecord]]] = []
    for w in omegas:
        try:
            res = deflated_solve(config.with_omega(w), count, seed, **kwargs)
            out.append((w, list(res.records)))
        except Exception as exc:  # noqa: BLE001 - a sweep records per-frequency failures
            logger.error("omega = %g failed: %s", w, exc)
            out.append((w, []))
    return out


def branch_table_rows(sweep: Sequence[tuple[float, Sequence[SolutionRecord]]]) -> list[dict]:
    """One row per ``(omega, deflation_index)`` with the branch-table columns."""
    rows = []
    for w, recs in sweep:
        for r in sorted(recs, key=lambda r: r.deflation_index):
            rows.append({
                "omega": w,
                "deflation_index": r.deflation_index,
                "J_value": r.J_value,
                "u_L2_norm": r.u_l2,
                "dual_norm": r.dual_norm,
                "iterations": r.iterations,
                "converged": bool(r.converged),
            })
    return rows


def write_branch_table(sweep_or_rows, path=None) -> str:
    """Branch table as CSV text (``repr`` floats, so values round-trip);
    written to ``path`` as well when given."""
    rows = sweep_or_rows
    if rows and not isinstance(rows[0], dict):
        rows = branch_table_rows(rows)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BRANCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    text = buf.getvalue()
    if path is not None:
        from .io import atomic_write_text

        atomic_write_text(path, text)
    return text
