"""Admissible perturbations ``g(x, xi)`` and a sampled check of (g1)-(g4).

The built-in ``power`` family ``g = a(x) |xi|^(p-2) xi`` is one concrete
witness of the growth and superquadratic conditions; nothing singles it out
beyond that. The ``zero`` family is the unperturbed problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

__all__ = [
    "NonlinearitySpec",
    "ConditionResult",
    "ConditionReport",
    "NonlinearityConditionError",
    "power",
    "zero",
    "eval_g",
    "eval_G",
    "g_values",
    "G_values",
    "validate_conditions",
]

Family = Literal["power", "zero"]


@dataclass(frozen=True, eq=False)
class NonlinearitySpec:
    """Parameters of a nonlinearity.

    ``amplitude`` is a constant or an array of nodal weights (one per
    interior node, flat C order). ``p`` may lie outside ``(4, 6)`` so that
    counterexamples can be represented; :func:`validate_conditions` decides
    admissibility. ``mu`` defaults to ``p``.
    """

    family: Family = "power"
    amplitude: float | np.ndarray = 1.0
    p: float = 5.0
    mu: float | None = None
    r: float = 1.0
    b1: float | None = None
    b2: float | None = None

    def __post_init__(self):
        if self.family not in ("power", "zero"):
            raise ValueError(f"unknown nonlinearity family {self.family!r}")
        amp = self.amplitude
        if isinstance(amp, np.ndarray):
            amp = np.array(amp, dtype=float, copy=True).ravel()
            amp.flags.writeable = False
            object.__setattr__(self, "amplitude", amp)
        if np.any(np.asarray(amp) < 0) or not np.all(np.isfinite(amp)):
            raise ValueError("amplitude must be finite and nonnegative")
        if self.family == "power" and not self.p > 1:
            raise ValueError(f"power exponent must exceed 1, got {self.p}")
        if self.mu is None:
            object.__setattr__(self, "mu", float(self.p))
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")

    @property
    def amp_sup(self) -> float:
        return float(np.max(self.amplitude))

    @property
    def amp_inf(self) -> float:
        return float(np.min(self.amplitude))

    @property
    def growth_exponent(self) -> float:
        """Exponent used for the growth bound: ``p`` if admissible, else 5 when
        ``p <= 4`` (a smaller power is dominated) and ``p`` otherwise."""
        if self.family == "zero" or self.p <= 4:
            return 5.0
        return float(self.p)

    @property
    def a1(self) -> float:
        if self.family == "zero":
            return 0.0
        return 0.0 if self.p > 4 else self.amp_sup

    @property
    def a2(self) -> float:
        return 0.0 if self.family == "zero" else self.amp_sup

    def to_dict(self) -> dict:
        amp = self.amplitude
        return {
            "family": self.family,
            "amplitude": float(amp) if np.ndim(amp) == 0 else "nodal",
            "p": float(self.p),
            "mu": float(self.mu),
            "r": float(self.r),
            "a1": self.a1,
            "a2": self.a2,
            "b1": self.b1,
            "b2": self.b2,
        }


def power(p: float = 5.0, amplitude=1.0, mu: float | None = None, r: float = 1.0) -> NonlinearitySpec:
    return NonlinearitySpec("power", amplitude, p, mu, r)


def zero() -> NonlinearitySpec:
    return NonlinearitySpec("zero", 0.0, 5.0, None, 1.0)


def g_values(spec: NonlinearitySpec, xi, amplitude=None) -> np.ndarray:
    """Vectorized ``g`` for nodal arrays ``xi`` (amplitude broadcast against ``xi``)."""
    xi = np.asarray(xi, dtype=float)
    if spec.family == "zero":
        return np.zeros_like(xi)
    a = spec.amplitude if amplitude is None else amplitude
    if np.ndim(a) != 0:
        a = np.reshape(a, xi.shape)
    return a * np.abs(xi) ** (spec.p - 2.0) * xi


def G_values(spec: NonlinearitySpec, xi, amplitude=None) -> np.ndarray:
    """Vectorized primitive ``G(x, xi) = int_0^xi g(x, t) dt``."""
    xi = np.asarray(xi, dtype=float)
    if spec.family == "zero":
        return np.zeros_like(xi)
    a = spec.amplitude if amplitude is None else amplitude
    if np.ndim(a) != 0:
        a = np.reshape(a, xi.shape)
    return a * np.abs(xi) ** spec.p / spec.p


def eval_g(spec: NonlinearitySpec, x_index: int | None, xi: float) -> float:
    """``g`` at node ``x_index`` (ignored for constant amplitude)."""
    return float(g_values(spec, xi, _amp(spec, x_index)))


def eval_G(spec: NonlinearitySpec, x_index: int | None, xi: float) -> float:
    return float(G_values(spec, xi, _amp(spec, x_index)))


def _amp(spec: NonlinearitySpec, x_index):
    if np.ndim(spec.amplitude) == 0:
        return spec.amplitude
    if x_index is None:
        raise ValueError("nodal amplitude needs a node index")
    return spec.amplitude[x_index]


@dataclass
class ConditionResult:
    name: str
    passed: bool
    margin: float
    violation: tuple[int, float] | None = None
    detail: str = ""


@dataclass
class ConditionReport:
    """Outcome of :func:`validate_conditions`; ``spec`` carries the certified b1, b2."""

    results: dict[str, ConditionResult]
    spec: NonlinearitySpec
    decay_rate: float = float("nan")
    lower_bound_ok: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    @property
    def failed(self) -> list[str]:
        return [k for k, r in self.results.items() if not r.passed]

    def raise_if_failed(self) -> None:
        if not self.passed:
            raise NonlinearityConditionError(self)

    def summary(self) -> str:
        lines = []
        for r in self.results.values():
            status = "pass" if r.passed else "FAIL"
            where = "" if r.violation is None else f" at (x={r.violation[0]}, xi={r.violation[1]:.6g})"
            lines.append(f"{r.name}: {status} (margin {r.margin:.3e}){where} {r.detail}".rstrip())
        return "\n".join(lines)


class NonlinearityConditionError(ValueError):
    def __init__(self, report: ConditionReport):
        self.report = report
        super().__init__("nonlinearity violates " + ", ".join(report.failed) + "\n" + report.summary())


def _nodes(spec: NonlinearitySpec) -> list[int | None]:
    if np.ndim(spec.amplitude) == 0:
        return [None]
    a = spec.amplitude
    # extreme and a few representative nodes of the spatial weight
    picks = {int(np.argmin(a)), int(np.argmax(a)), 0, a.size - 1, a.size // 2}
    return sorted(picks)


def _worst(margins: np.ndarray, xis: np.ndarray, node) -> tuple[float, tuple[int, float]]:
    i = int(np.argmin(margins))
    return float(margins[i]), (-1 if node is None else node, float(xis[i]))


def validate_conditions(
    spec: NonlinearitySpec,
    sample_xis=None,
    tolerance: float = 1e-12,
) -> ConditionReport:
    """Check (g1)-(g4) on samples and certify ``G >= b1 |xi|^mu - b2``.

    ``sample_xis`` must span ``[-R, R]`` with ``R >= r``; by default 2001
    points on ``[-max(10, 4r), max(10, 4r)]`` are used. Margins are
    normalized so that a negative margin is a violation. (g2) cannot be
    verified as a limit: the ratio ``g(xi)/xi`` is sampled along
    ``xi = 10^-1, ..., 10^-8`` and must fall below ``max(tolerance, 1e-6)``
    at the smallest point while decreasing; the log-log decay rate is
    reported.
    """
    if sample_xis is None:
        R = max(10.0, 4.0 * spec.r)
        sample_xis = np.linspace(-R, R, 2001)
    xis = np.asarray(sample_xis, dtype=float)
    if np.max(np.abs(xis)) < spec.r:
        raise ValueError("sample set must reach |xi| >= r")
    results: dict[str, ConditionResult] = {}
    notes: list[str] = []
    nodes = _nodes(spec)

    def amp(node):
        return _amp(spec, node)

    # (g1) anti-symmetry
    worst = (np.inf, None)
    for node in nodes:
        a = amp(node)
        m = tolerance * (1.0 + np.abs(g_values(spec, xis, a))) - np.abs(
            g_values(spec, -xis, a) + g_values(spec, xis, a)
        )
        cand = _worst(m, xis, node)
        if cand[0] < worst[0]:
            worst = cand
    results["g1"] = ConditionResult("g1", worst[0] >= 0, worst[0], None if worst[0] >= 0 else worst[1])

    # (g2) g(xi)/xi -> 0
    small = 10.0 ** -np.arange(1, 9)
    ratio_tol = max(tolerance, 1e-6)
    worst = (np.inf, None)
    rate = np.nan
    for node in nodes:
        a = amp(node)
        ratios = np.abs(g_values(spec, small, a) / small)
        decreasing = bool(np.all(np.diff(ratios) <= 1e-15 + 1e-12 * ratios[:-1]))
        m = ratio_tol - ratios[-1]
        if not decreasing:
            m = min(m, -float(np.max(np.diff(ratios))))
        if np.all(ratios > 0):
            r_node = float(np.polyfit(np.log(small), np.log(ratios), 1)[0])
            rate = r_node if np.isnan(rate) else min(rate, r_node)
        if m < worst[0]:
            worst = (m, (-1 if node is None else node, float(small[-1])))
    results["g2"] = ConditionResult(
        "g2", worst[0] >= 0, float(worst[0]), None if worst[0] >= 0 else worst[1],
        f"|g/xi| decay rate {rate:.3g}" if not np.isnan(rate) else "g/xi vanishes identically",
    )

    # (g3) |g| <= a1 + a2 |xi|^(q-1) with q in (4, 6)
    q = spec.growth_exponent
    worst = (np.inf, None)
    if not 4 < q < 6:
        # no admissible exponent dominates |xi|^(p-1): test against q -> 6
        q = 6.0 - 1e-9
        notes.append(f"exponent p={spec.p} has no growth bound with p in (4, 6)")
    for node in nodes:
        a = amp(node)
        bound = spec.a1 + spec.a2 * np.abs(xis) ** (q - 1.0)
        gv = np.abs(g_values(spec, xis, a))
        m = (bound - gv) / (1.0 + bound)
        if spec.family == "power" and spec.p >= 6:
            # sampled points may not reach where |xi|^(p-1) overtakes; extend to large xi
            big = np.array([1e2, 1e4, 1e8])
            bb = spec.a1 + spec.a2 * big ** (q - 1.0)
            mb = (bb - np.abs(g_values(spec, big, a))) / (1.0 + bb)
            m = np.concatenate([m, mb])
            cand = _worst(m, np.concatenate([xis, big]), node)
        else:
            cand = _worst(m, xis, node)
        if cand[0] < worst[0]:
            worst = cand
    results["g3"] = ConditionResult(
        "g3", worst[0] >= -tolerance, worst[0], None if worst[0] >= -tolerance else worst[1],
        f"a1={spec.a1:g}, a2={spec.a2:g}, exponent {q:g}",
    )

    # (g4) 0 <= mu G <= xi g for |xi| >= r, with mu > 4
    mu = float(spec.mu)
    far = xis[np.abs(xis) >= spec.r]
    worst = (np.inf, None)
    for node in nodes:
        a = amp(node)
        G = G_values(spec, far, a)
        xg = far * g_values(spec, far, a)
        scale = 1.0 + np.abs(xg)
        m = np.minimum(mu * G, xg - mu * G) / scale
        cand = _worst(m, far, node)
        if cand[0] < worst[0]:
            worst = cand
    mu_ok = mu > 4
    g4_ok = worst[0] >= -tolerance and mu_ok
    detail = f"mu={mu:g}, r={spec.r:g}"
    if not mu_ok:
        detail += " (mu must exceed 4)"
    results["g4"] = ConditionResult("g4", g4_ok, worst[0] if mu_ok else mu - 4.0,
                                    None if g4_ok or not mu_ok else worst[1], detail)

    # lower bound G >= b1 |xi|^mu - b2
    b1, b2 = _certify_lower_bound(spec)
    lower_ok = False
    if b1 is not None:
        lower_ok = True
        for node in nodes:
            a = amp(node)
            lhs = G_values(spec, xis, a)
            rhs = b1 * np.abs(xis) ** mu - b2
            if np.any(lhs - rhs < -tolerance * (1.0 + np.abs(lhs))):
                lower_ok = False
                b1, b2 = None, None
                break
    if b1 is None:
        notes.append("no lower bound G >= b1|xi|^mu - b2 with b1 > 0")
    return ConditionReport(results, replace(spec, b1=b1, b2=b2), rate, lower_ok, notes)


def _certify_lower_bound(spec: NonlinearitySpec) -> tuple[float | None, float | None]:
    """Closed-form ``b1, b2`` for the power family (``None`` when impossible)."""
    if spec.family == "zero" or spec.amp_inf <= 0:
        return None, None
    p, mu = float(spec.p), float(spec.mu)
    b1 = spec.amp_inf / p
    if mu > p:
        return None, None
    if mu == p:
        return b1, 0.0
    # max over t >= 0 of b1 (t^mu - t^p), attained at t = (mu/p)^(1/(p - mu))
    t = (mu / p) ** (1.0 / (p - mu))
    return b1, b1 * (t**mu - t**p) + math.ulp(1.0)
