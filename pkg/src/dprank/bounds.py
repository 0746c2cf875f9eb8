"""Upper bounds on the ranking error rate of noised positional rules.

All bounds are written in terms of ``sigma_hat``, the per-coordinate noise on
the normalized profile, and the slab half-width ``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import DimensionError, NoInteriorMinimumError, UnsupportedError
from .geometry import EXACT_MAX_DIM, SQRT2, hyperplane, projection_density
from .privacy import PrivacyParams, sigma_hat
from .ranking import PositionalRule

TAU_MIN = 1e-9
TAU_MAX = SQRT2
GOLDEN_TOL = 1e-8
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def q_function(x):
    """Standard normal tail probability P(Z > x)."""
    out = 0.5 * erfc(np.asarray(x, dtype=np.float64) / SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def q_upper(x):
    """exp(-x^2/2) / (sqrt(2 pi) x), an upper bound on Q for x > 0."""
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(-x * x / 2) / (math.sqrt(2 * math.pi) * x)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BoundQuery:
    M: int
    params: PrivacyParams
    tau: float | None = None
    rule: PositionalRule | None = None

    def __post_init__(self):
        if self.M < 3:
            raise ValueError(f"bounds need M >= 3, got {self.M}")
        if self.tau is not None and not 0 < self.tau <= TAU_MAX:
            raise ValueError(f"tau must lie in (0, sqrt(2)], got {self.tau}")
        if self.rule is not None and self.rule.M != self.M:
            raise DimensionError(f"rule is for M={self.rule.M}, query for M={self.M}")

    @property
    def pairs(self) -> int:
        return math.comb(self.M, 2)

    @property
    def dim(self) -> float:
        return float(math.factorial(self.M))

    @property
    def sigma_hat(self) -> float:
        return sigma_hat(self.params)


@dataclass(frozen=True)
class BoundResult:
    value: float
    raw: float
    tau: float
    method: str


def _result(raw: float, tau: float, method: str) -> BoundResult:
    return BoundResult(min(raw, 1.0), raw, tau, method)


def golden_section(f, a: float, b: float, tol: float = GOLDEN_TOL):
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def minimize_tau(f, lo: float = TAU_MIN, hi: float = TAU_MAX, candidates=None,
                 seed: float | None = None):
    """Global-then-local minimization over ``[lo, hi]``.

    A scan over ``candidates`` (default: geometric grid) brackets the best
    point, golden-section refines it, and the endpoints are kept as
    contenders since the objectives need not be unimodal.
    """
    if candidates is None:
        candidates = np.geomspace(lo, hi, 257)
    pts = np.unique(np.clip(np.concatenate([np.asarray(candidates, dtype=float),
                                            [lo, hi] + ([seed] if seed else [])]), lo, hi))
    vals = np.array([f(t) for t in pts])
    k = int(np.argmin(vals))
    best_t, best_v = pts[k], vals[k]
    a, b = pts[max(k - 1, 0)], pts[min(k + 1, pts.size - 1)]
    if b > a:
        t, v = golden_section(f, a, b)
        if v < best_v:
            best_t, best_v = t, v
    return float(best_t), float(best_v)


def general_expression(tau, M: int, params: PrivacyParams):
    """C(M,2) (M!-1)/sqrt(2) tau + Q(tau / sigma_hat)."""
    a = math.comb(M, 2) * (math.factorial(M) - 1) / SQRT2
    return a * np.asarray(tau) + q_function(np.asarray(tau) / sigma_hat(params))


def jensen_expression(tau, M: int, params: PrivacyParams):
    """C(M,2) sqrt(2) (M!-1) Q(tau / (2 sigma_hat)) tau + Q(tau / sigma_hat)."""
    s = sigma_hat(params)
    tau = np.asarray(tau)
    a = math.comb(M, 2) * SQRT2 * (math.factorial(M) - 1)
    return a * q_function(tau / (2 * s)) * tau + q_function(tau / s)


def optimal_tau(q: BoundQuery) -> float:
    """Stationary point of the first-order bound in ``tau``.

    Setting the derivative to zero gives ``phi(tau/sigma_hat) = a sigma_hat``
    with ``a = C(M,2)(M!-1)/sqrt(2)``.  Raises when ``a sigma_hat sqrt(2 pi) >= 1``:
    the expression is then increasing and has no interior minimum.
    """
    s = q.sigma_hat
    a = q.pairs * (q.dim - 1) / SQRT2
    r = a * math.sqrt(2 * math.pi) * s
    if r >= 1:
        raise NoInteriorMinimumError(
            f"no interior minimum (a*sigma_hat*sqrt(2pi) = {r:.4g} >= 1)")
    return min(s * math.sqrt(-2 * math.log(r)), TAU_MAX)


def _general_tau(q: BoundQuery) -> float:
    try:
        return optimal_tau(q)
    except NoInteriorMinimumError:
        tau, _ = minimize_tau(lambda t: float(general_expression(t, q.M, q.params)))
        return tau


def general_bound(q: BoundQuery) -> BoundResult:
    tau = q.tau if q.tau is not None else _general_tau(q)
    return _result(float(general_expression(tau, q.M, q.params)), tau, "theorem1")


def jensen_bound(q: BoundQuery) -> BoundResult:
    """Jensen-tightened bound, evaluated at the first-order optimal ``tau``.

    The expression itself keeps decreasing as ``tau`` grows past that point,
    so minimizing it freely over ``(0, sqrt(2)]`` drives it toward zero
    instead of giving a usable bound.
    """
    tau = q.tau if q.tau is not None else _general_tau(q)
    return _result(float(jensen_expression(tau, q.M, q.params)), tau, "lemma3")


def simplified_tau(M: int, params: PrivacyParams) -> float:
    if params.N < 2:
        raise ValueError("the simplified bound needs N >= 2")
    return 2 * math.sqrt(math.log(params.N) * params.log_term) / (params.epsilon * params.N)


def simplified_bound(q: BoundQuery) -> BoundResult:
    """Closed form from the Q-tail inequality at tau = 2 sqrt(ln N ln(2/delta)) / (eps N)."""
    p = q.params
    tau = simplified_tau(q.M, p)
    lnN = math.log(p.N)
    raw = (q.pairs * (q.dim - 1) * math.sqrt(2 * lnN * p.log_term) / p.epsilon
           + 1 / (2 * math.sqrt(math.pi * lnN))) / p.N
    return _result(raw, tau, "simplified")


class SlabIntegral:
    """``F(tau) = 2 int_0^tau p_D(l) Q(l / sigma_hat) dl`` for one rule.

    Piecewise Gauss-Legendre on segments split at the spline knots and at a
    spacing resolving both ``sigma_hat`` and the density's own scale.
    Beyond ``40 sigma_hat`` the integrand is below double precision.
    """

    def __init__(self, rule: PositionalRule, sigma_hat: float):
        h = hyperplane(rule, 0, 1)
        if h.dim > EXACT_MAX_DIM:
            raise UnsupportedError(
                f"exact distance density needs M <= 6, got M={rule.M}")
        self.beta = h.normal
        self.s = sigma_hat
        top = float(self.beta.max())
        self.upper = min(top, 40 * sigma_hat)
        scale = 1 / math.sqrt(h.dim * (h.dim + 1))  # std of the distance
        step = min(sigma_hat / 2, scale / 4, self.upper / 16)
        knots = np.unique(self.beta)
        knots = knots[(knots > 0) & (knots < self.upper)]
        grid = np.linspace(0, self.upper, int(math.ceil(self.upper / step)) + 1)
        self.edges = np.unique(np.concatenate([grid, knots]))
        a, b = self.edges[:-1], self.edges[1:]
        half = (b - a)[:, None] / 2
        nodes = (a[:, None] + b[:, None]) / 2 + half * _GL_NODES[None, :]
        vals = self._integrand(nodes.ravel()).reshape(nodes.shape)
        seg = (vals * _GL_WEIGHTS[None, :] * half).sum(axis=1)
        self.cumulative = np.concatenate([[0.0], np.cumsum(seg)])

    def _integrand(self, l):
        return 2 * projection_density(self.beta, l) * q_function(l / self.s)

    def __call__(self, tau: float) -> float:
        if tau >= self.upper:
            return float(self.cumulative[-1])
        k = int(np.searchsorted(self.edges, tau, side="right")) - 1
        a = self.edges[k]
        if tau == a:
            return float(self.cumulative[k])
        half = (tau - a) / 2
        nodes = a + half + half * _GL_NODES
        return float(self.cumulative[k] + half * (self._integrand(nodes) @ _GL_WEIGHTS))


def rule_specific_expression(tau, q: BoundQuery, integral: SlabIntegral | None = None) -> float:
    integral = integral or SlabIntegral(q.rule, q.sigma_hat)
    return q.pairs * integral(tau) + q_function(tau / q.sigma_hat)


def rule_specific_bound(q: BoundQuery) -> BoundResult:
    """Slab bound with the rule's exact distance density, minimized over ``tau``."""
    if q.rule is None:
        raise UnsupportedError("rule-specific bound needs a rule")
    F = SlabIntegral(q.rule, q.sigma_hat)

    def f(t):
        return rule_specific_expression(t, q, F)

    if q.tau is not None:
        return _result(f(q.tau), q.tau, "ruleSpecific")
    candidates = np.concatenate([F.edges[F.edges > 0], np.geomspace(TAU_MIN, TAU_MAX, 65)])
    tau, value = minimize_tau(f, candidates=candidates)
    return _result(value, tau, "ruleSpecific")


METHODS = {
    "theorem1": general_bound,
    "lemma3": jensen_bound,
    "simplified": simplified_bound,
    "ruleSpecific": rule_specific_bound,
}


def compute(method: str, q: BoundQuery) -> BoundResult:
    try:
        fn = METHODS[method]
    except KeyError:
        raise UnsupportedError(f"unknown bound method {method!r}") from None
    return fn(q)


def check_dominance(results: dict, q: BoundQuery, rtol: float = 1e-9) -> list[str]:
    """Violated orderings among computed bounds (empty when consistent)."""
    bad = []
    raw = {k: r.raw for k, r in results.items()}

    def le(x, y, label):
        if x > y * (1 + rtol) + 1e-15:
            bad.append(f"{label}: {x:.17g} > {y:.17g}")

    if "ruleSpecific" in raw and "lemma3" in raw:
        le(raw["ruleSpecific"], raw["lemma3"], "ruleSpecific <= lemma3")
    if "lemma3" in raw and "theorem1" in raw:
        le(raw["lemma3"], raw["theorem1"], "lemma3 <= theorem1")
    if "simplified" in results:
        t = results["simplified"].tau
        if 0 < t <= TAU_MAX:
            le(float(general_expression(t, q.M, q.params)), raw["simplified"],
               "general(simplified tau) <= simplified")
    return bad
