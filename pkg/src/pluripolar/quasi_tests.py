"""Desk-scale tests for quasianalyticity in the senses of Bernstein, Denjoy and Gevrey.

None of these notions can be decided from finitely many numbers.  Every
verdict here is a heuristic on explicitly computed partial quantities, and
carries a caveat saying so.  The approximation numbers E_n are bracketed
rigorously: a Fourier coefficient c_m with |m| > n annihilates all
trigonometric polynomials of degree n and has unit norm as a functional on
C(S), so |c_m| <= E_n; the truncated Fourier series gives E_n <= sum_{|k|>n} |c_k|.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from . import circle_functions as cf
from .circle_functions import CoefficientRule, NormSequence
from .errors import ConvergenceError, DegenerateError, RuleError
from .growth_scales import certified_radius, degeneracy_radius, neg_log_tau_pieces

HEURISTIC_CAVEAT = "desk-scale heuristic: a finite computation cannot decide an asymptotic property"
# decade-increment thresholds: ratio of consecutive increments
FLAT_RATIO = 0.9
DECAY_RATIO = 0.85
BERNSTEIN_DELTA = 0.01
# log(-log root) may not fall faster than this against log n (roots creeping up to 1)
ROOT_TREND_FLOOR = -0.1
DEFAULT_BERNSTEIN_N = (2, 4, 8, 16, 32, 64, 128, 256)
# below this the root trend is still pre-asymptotic for slowly decaying tails
BERNSTEIN_MIN_N = 128
MINIMAX_MAX_DEGREE = 2048


@dataclass(frozen=True)
class EnBracket:
    n: int
    lower: float
    upper: float

    def root(self, which: str = "upper") -> float:
        value = self.upper if which == "upper" else self.lower
        return value ** (1.0 / self.n) if value > 0 else 0.0


@dataclass
class QuasiVerdict:
    notion: str
    verdict: str
    evidence: list[dict] = field(default_factory=list)
    caveat: str = HEURISTIC_CAVEAT
    summary: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"{self.notion}: {self.verdict}", f"  caveat: {self.caveat}"]
        for key, value in self.summary.items():
            lines.append(f"  {key}: {value}")
        if self.evidence:
            keys = list(self.evidence[0])
            lines.append("  " + "  ".join(f"{k:>14}" for k in keys))
            for row in self.evidence:
                lines.append("  " + "  ".join(_fmt(row[k]) for k in keys))
        return "\n".join(lines)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return f"{value:>14d}"
    if isinstance(value, float):
        return f"{value:>14.6e}"
    return f"{value!s:>14}"


def _increment_verdict(increments: np.ndarray) -> tuple[str, list[float]]:
    """Classify a series of per-decade increments of a partial sum/integral."""
    last = np.asarray(increments[-3:], dtype=float)
    if last.size < 3:
        return "inconclusive", []
    if np.all(last <= 0):
        return "no", []
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = [float(b / a) if a > 0 else math.inf for a, b in zip(last, last[1:])]
    if np.all(last > 0) and min(ratios) >= FLAT_RATIO:
        return "yes", ratios
    if max(ratios) <= DECAY_RATIO:
        return "no", ratios
    return "inconclusive", ratios


# -- Denjoy-Carleman -------------------------------------------------------


def denjoy_carleman(M: NormSequence, R_max: float = 1e4, quad_points: int = 16):
    """Partial integrals I(R) = int_1^R -log tau(r) / (1 + r^2) dr at R = 10^k.

    Returns ``(partials, verdict)`` where ``partials`` maps R to I(R).  The
    integrand is integrated in u = log r, where -log tau is piecewise linear;
    each linear piece gets a Gauss-Legendre rule with ``quad_points`` nodes.
    """
    if R_max < 100:
        raise ValueError("R_max must be at least 100")
    if degeneracy_radius(M) is not None:
        raise DegenerateError("analytic-degenerate norm sequence: tau vanishes for large r")
    if R_max > certified_radius(M) * (1 + 1e-12):
        raise RuleError(
            f"R_max={R_max:g} exceeds the certified j-range of M (r <= {certified_radius(M):.6g})"
        )
    u_top = math.log(R_max)
    decades = [10.0**k for k in range(1, int(math.floor(math.log10(R_max) + 1e-9)) + 1)]
    cuts = sorted({0.0, u_top, *(math.log(d) for d in decades)})
    x, w = np.polynomial.legendre.leggauss(quad_points)
    pieces = neg_log_tau_pieces(M, u_top)
    partial = {}
    total = 0.0
    ci = 1
    for u0, u1, j, lm in pieces:
        bounds = [u0] + [c for c in cuts if u0 < c < u1] + [u1]
        for a, b in zip(bounds, bounds[1:]):
            u = 0.5 * (b - a) * x + 0.5 * (b + a)
            # e^u / (1 + e^{2u}) = 1 / (2 cosh u)
            vals = (j * u - lm) / (2.0 * np.cosh(u))
            total += 0.5 * (b - a) * float(np.dot(w, vals))
            while ci < len(cuts) and abs(b - cuts[ci]) < 1e-12:
                partial[math.exp(cuts[ci])] = total
                ci += 1
    partials = {d: partial[min(partial, key=lambda R: abs(R - d))] for d in decades}
    if u_top not in (math.log(d) for d in decades):
        partials[R_max] = total
    seq = [0.0] + [partials[d] for d in decades]
    increments = np.diff(seq)
    verdict, ratios = _increment_verdict(increments)
    evidence = [
        {"R": float(d), "I(R)": partials[d], "increment": float(inc)}
        for d, inc in zip(decades, increments)
    ]
    return partials, QuasiVerdict(
        "denjoy", verdict, evidence, summary={"increment ratios": ratios}
    )


# -- Gevrey ----------------------------------------------------------------


def power_weight(p: float) -> Callable[[np.ndarray], np.ndarray]:
    """log L_j for L_j = j^p (L_0 = 0)."""

    def log_L(j):
        j = np.asarray(j, dtype=float)
        with np.errstate(divide="ignore"):
            return p * np.log(j)

    log_L.label = f"j^{p:g}"
    return log_L


def exponential_weight(base: float) -> Callable[[np.ndarray], np.ndarray]:
    """log L_j for L_j = base^j (L_0 = 1)."""

    def log_L(j):
        return np.asarray(j, dtype=float) * math.log(base)

    log_L.label = f"{base:g}^j"
    return log_L


def check_weight(log_L, J: int) -> float:
    """Validate j <= L_j for 1 <= j <= J; returns max_j L_j / L_{j-1} (the constant C)."""
    j = np.arange(1, J + 1, dtype=float)
    ll = log_L(j)
    bad = np.nonzero(ll < np.log(j) - 1e-12)[0]
    if bad.size:
        raise RuleError(f"invalid Gevrey weight: L_j < j at j = {int(j[bad[0]])}")
    return float(math.exp(np.max(np.diff(ll)))) if J > 1 else 1.0


@dataclass
class GevreyMembership:
    member: bool
    constant: float
    J_max: int
    ratio_growth: float
    caveat: str = "finite-range statement: membership checked for 1 <= j <= J_max only"


def gevrey_membership(M: NormSequence, log_L, J_max: int | None = None) -> GevreyMembership:
    """Smallest C' with M_j <= (C' L_j)^j for 1 <= j <= J_max.

    Declared "not member" when M_j^(1/j) / L_j still grows by more than 10%
    between J_max/2 and J_max.
    """
    J = M.jmax if J_max is None else min(J_max, M.jmax)
    check_weight(log_L, J)
    j = np.arange(1, J + 1, dtype=float)
    x = M.log_values[1 : J + 1] / j - log_L(j)
    growth = float(x[-1] - x[(J - 1) // 2])
    member = growth <= math.log(1.1)
    return GevreyMembership(member, float(math.exp(x.max())), J, growth)


def gevrey_series(log_L, J_max: int = 10**6):
    """Partial sums of sum_j 1/L_j at J = 10^k, and the divergence verdict.

    Terms with L_j = 0 (e.g. j = 0 for L_j = j^p) are skipped.
    """
    check_weight(log_L, min(J_max, 10**6))
    j = np.arange(0, J_max + 1, dtype=float)
    ll = log_L(j)
    terms = np.where(np.isneginf(ll), 0.0, np.exp(-ll))
    csum = np.cumsum(terms)
    checkpoints = [10**k for k in range(1, int(math.floor(math.log10(J_max) + 1e-9)) + 1)]
    partials = {J: float(csum[J]) for J in checkpoints}
    seq = [float(csum[1])] + [partials[J] for J in checkpoints]
    increments = np.diff(seq)
    verdict, ratios = _increment_verdict(increments)
    evidence = [{"J": J, "partial_sum": partials[J]} for J in checkpoints]
    return partials, QuasiVerdict(
        "gevrey", verdict, evidence, summary={"increment ratios": ratios}
    )


def fit_gevrey_exponent(M: NormSequence) -> float:
    """Exponent p of a power fit L_j ~ j^p to M_j^(1/j), over the upper half of j."""
    J = M.jmax
    j = np.arange(max(2, J // 2), J + 1, dtype=float)
    if j.size < 2:
        raise RuleError("too few norms to fit a Gevrey exponent")
    x = M.log_values[j.astype(int)] / j
    return float(np.polyfit(np.log(j), x, 1)[0])


# -- approximation numbers -------------------------------------------------


def en_bounds(rule: CoefficientRule, n: int) -> EnBracket:
    """Certified bracket lower <= E_n(f) <= upper."""
    cf._require_pointwise(rule)
    if rule.family is cf.Family.EXPLICIT:
        beyond = [abs(c) * rule.scale for k, c in rule.coefficients if abs(k) > n]
        lower = max(beyond, default=0.0)
        upper = math.fsum(beyond)
        return EnBracket(n, lower, upper * (1 + 1e-15))
    lower = abs(cf.coefficient(rule, n + 1))
    if rule.family is cf.Family.GEOMETRIC:
        return EnBracket(n, lower, cf.tail_bound(rule, n))
    K = min(cf.MAX_INDEX, max(n + 64, cf.truncation_index(rule, 1e-8 * lower)))
    ks = np.arange(n + 1, K + 1)
    partial = 2.0 * math.fsum(np.exp(cf._log_abs_coeffs(rule, ks)))
    upper = partial * (1 + 1e-14) + cf.tail_bound(rule, K)
    return EnBracket(n, lower, min(upper, cf.tail_bound(rule, n)))


@dataclass
class MinimaxResult:
    n: int
    value: float
    discrete: float
    dual_lower: float
    tol_grid: float
    iterations: int
    coefficients: np.ndarray
    f_scale: float = 1.0

    def within(self, bracket: EnBracket, slack: float = 1e-12) -> bool:
        """Containment in the bracket, allowing roundoff relative to sup |f|."""
        atol = 1e-13 * max(1.0, self.f_scale)
        upper = bracket.upper * (1 + self.tol_grid) * (1 + slack) + atol
        return bracket.lower * (1 - slack) - atol <= self.value <= upper


def _effective_degree(rule: CoefficientRule, lower: float) -> int:
    """Index past which the coefficients carry less than 1e-3 of the lower bound on E_n."""
    if rule.family is cf.Family.EXPLICIT:
        return rule.degree
    if lower <= 0:
        return 0
    return min(MINIMAX_MAX_DEGREE, cf.truncation_index(rule, 1e-3 * lower))


def en_minimax(
    rule: CoefficientRule,
    n: int,
    grid_m: int | None = None,
    tol: float = 1e-4,
    max_iter: int = 20000,
) -> MinimaxResult:
    """Discrete minimax approximation of f by degree-n trigonometric polynomials.

    Lawson's iteratively reweighted least squares on ``grid_m`` equispaced
    circle points (default 8 D, with D the effective degree of f).  Each weighted least-squares residual is a lower bound on
    the discrete minimax error, so iteration stops once the best iterate is
    within relative ``tol`` of it.  ``value`` is the sup of |f - p| for the
    returned p, measured on a 16x finer grid.
    """
    cf._require_pointwise(rule)
    bracket = en_bounds(rule, n)
    # the residual f - p carries the modes n < |k| <= D; the grid must resolve them too
    D = max(n, _effective_degree(rule, bracket.lower))
    m = 8 * D if grid_m is None else grid_m
    m = max(m, 8)
    if m < 8 * n:
        raise ValueError("grid_m must be at least 8n")
    if m < 4 * D:
        raise ValueError(f"grid_m = {m} cannot resolve the effective degree {D} of f (need >= {4 * D})")
    tol_grid = 1.0 / math.cos(math.pi * D / m) - 1.0
    eps = max(1e-15, 1e-7 * bracket.lower)
    z = np.exp(2j * np.pi * np.arange(m) / m)
    f = np.asarray(cf.evaluate(rule, z, eps))
    ks = np.arange(-n, n + 1)
    A = np.exp(np.multiply.outer(1j * 2 * np.pi * np.arange(m) / m, ks))
    scale = max(np.abs(f).max(), 1e-300)

    noise = 64 * np.finfo(float).eps * scale
    w = np.full(m, 1.0 / m)
    best_err, best_c, dual = math.inf, np.zeros(2 * n + 1, complex), 0.0
    it = 0
    for it in range(1, max_iter + 1):
        sw = np.sqrt(w)
        c, *_ = np.linalg.lstsq(A * sw[:, None], f * sw, rcond=None)
        e = np.abs(f - A @ c)
        err = float(e.max())
        dual = max(dual, float(math.sqrt(max(np.dot(w, e**2), 0.0))))
        if err < best_err:
            best_err, best_c = err, c
        # below the noise floor the residual is roundoff and the gap cannot close further
        if best_err <= 1e-14 * scale or best_err - dual <= max(tol * best_err, noise):
            break
        w = w * e
        total = w.sum()
        if total <= 0:
            break
        w /= total
    else:
        raise ConvergenceError(
            f"Lawson iteration did not reach tol={tol:g} in {max_iter} steps",
            best=(best_err, best_c),
        )

    fine = 16 * m
    zf = np.exp(2j * np.pi * np.arange(fine) / fine)
    resid = np.asarray(cf.evaluate(rule, zf, eps)) - cf.eval_laurent(best_c, zf)
    value = float(np.abs(resid).max())
    return MinimaxResult(n, value, best_err, dual, tol_grid, it, best_c, scale)


def bernstein_verdict(
    rule: CoefficientRule, n_list=DEFAULT_BERNSTEIN_N, delta: float = BERNSTEIN_DELTA
) -> QuasiVerdict:
    """Certify liminf E_n^(1/n) < 1 from upper bounds, if the evidence allows.

    The candidate subsequence is the upper half of ``n_list``.  The verdict is
    "yes" when its upper-bound roots stay at or below c <= 1 - delta and
    -log(root) shows no power-law decay towards 0.  "no" is never
    returned: lower bounds cannot establish a liminf.
    """
    n_list = [int(n) for n in n_list]
    brackets = [en_bounds(rule, n) for n in n_list]
    evidence = [
        {"n": b.n, "lower": b.lower, "upper": b.upper, "upper_root": b.root("upper"),
         "lower_root": b.root("lower")}
        for b in brackets
    ]
    roots = np.array([row["upper_root"] for row in evidence])
    half = len(n_list) // 2
    tail = slice(half, None) if len(n_list) - half >= 2 else slice(0, None)
    sub = n_list[tail]
    c = float(roots[tail].max()) if roots.size else math.nan
    exact = any(b.upper == 0 for b in brackets)
    trend = math.nan
    if roots[tail].size > 1 and np.all((roots[tail] > 0) & (roots[tail] < 1)):
        trend = float(np.polyfit(np.log(sub), np.log(-np.log(roots[tail])), 1)[0])
    summary = {"subsequence": sub, "c": c, "delta": delta, "root_trend": trend}
    if exact:
        summary["note"] = "E_n = 0 reached: trigonometric polynomial"
        return QuasiVerdict("bernstein", "yes", evidence, summary=summary)
    if max(n_list) < BERNSTEIN_MIN_N:
        summary["note"] = f"n_list must reach {BERNSTEIN_MIN_N} for a yes verdict"
    elif c <= 1 - delta and trend >= ROOT_TREND_FLOOR:
        return QuasiVerdict("bernstein", "yes", evidence, summary=summary)
    return QuasiVerdict("bernstein", "inconclusive", evidence, summary=summary)


def en_csv(evidence: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "lower", "upper", "upper_root"])
    for row in evidence:
        writer.writerow([row["n"], repr(row["lower"]), repr(row["upper"]), repr(row["upper_root"])])
    return buf.getvalue()


# -- calculus lemma probe --------------------------------------------------


@dataclass
class LemmaProbeReport:
    hypothesis_holds: bool
    first_violation: float | None
    truncated_integral: float
    tail_estimate: float
    C: float
    X_max: float

    @property
    def integral_bound(self) -> float:
        return self.truncated_integral + self.tail_estimate


def calc_lemma_probe(h, C: float = 1.0, X_max: float = 40.0, samples: int = 4001) -> LemmaProbeReport:
    """Check  H~(x) = min_{s<=x} h(e^s) e^-s <= C e^(-x/2)  on [0, X_max].

    ``h`` is a callable on t >= 1 or a pair ``(t, h(t))`` of sample arrays.
    Also reports  int_1^{e^X} h(t)/t^2 dt = int_0^X h(e^s) e^-s ds  and the
    tail allowance 2 C e^(-X/2).
    """
    s = np.linspace(0.0, X_max, samples)
    if callable(h):
        hs = np.asarray(h(np.exp(s)), dtype=float)
        integrand = lambda x: float(h(math.exp(x))) * math.exp(-x)  # noqa: E731
    else:
        t_samp, h_samp = (np.asarray(a, dtype=float) for a in h)
        hs = np.interp(s, np.log(t_samp), h_samp)
        integrand = None
    if np.any(hs <= 0):
        raise ValueError("h must be positive")
    scale = np.abs(hs).max()
    if np.any(np.diff(hs) < -1e-12 * scale):
        raise ValueError("h(e^s) is not increasing on the sampled range")
    if np.any(np.diff(hs, 2) < -1e-9 * scale):
        raise ValueError("h(e^s) is not convex on the sampled range")
    H = np.minimum.accumulate(hs * np.exp(-s))
    bound = C * np.exp(-s / 2)
    bad = np.nonzero(H > bound * (1 + 1e-9))[0]
    first = float(s[bad[0]]) if bad.size else None
    if integrand is not None:
        value, _ = integrate.quad(integrand, 0.0, X_max, limit=400, epsabs=1e-13, epsrel=1e-12)
    else:
        value = float(integrate.trapezoid(hs * np.exp(-s), s))
    return LemmaProbeReport(first is None, first, float(value), 2.0 * C * math.exp(-X_max / 2), C, X_max)
