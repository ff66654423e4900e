"""Functions on the unit circle given by rules for their Fourier coefficients.

A function ``f(z) = sum_k c_k z^k`` (``z = exp(i theta)``) is described by a
:class:`CoefficientRule`.  Parametric families have closed-form tails, which
gives certified truncation for evaluation and for the derivative norms

    M_j(f)^2 = sum_k k^(2j) |c_k|^2

(the L2 norm of the j-th theta-derivative).  Norms are carried in log space
throughout because they overflow doubles long before the scale analysis is
done with them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

import numpy as np
from scipy import special

from .errors import CertificationError, DomainError, RuleError, SyntheticRuleError

DEFAULT_EPS = 1e-10
DEFAULT_EPS_REL = 1e-10
DEFAULT_JMAX = 400
SYNTHETIC_JMAX = 20000
# largest frequency index a norm or evaluation may touch
MAX_INDEX = 2**22
NORMALIZED_M3 = 0.4


class Family(str, enum.Enum):
    EXPLICIT = "explicit-list"
    GEOMETRIC = "geometric"
    EXP_POWER = "exp-power"
    LOG_SQUARED_EXP = "log-squared-exp"
    SYNTHETIC = "synthetic-norms"


PARAM_KEYS = {
    Family.EXPLICIT: frozenset({"coefficients"}),
    Family.GEOMETRIC: frozenset({"amplitude", "rho"}),
    Family.EXP_POWER: frozenset({"amplitude", "beta", "alpha"}),
    Family.LOG_SQUARED_EXP: frozenset({"amplitude", "beta"}),
    Family.SYNTHETIC: frozenset(
        {"sequence", "exponent", "factor", "base", "values", "log_values", "jmax"}
    ),
}

SYNTHETIC_SEQUENCES = ("power", "exponential", "factorial", "constant", "values", "log_values")


@dataclass(frozen=True, eq=False)
class NormSequence:
    """Derivative norms M_0..M_J stored as ``log M_j`` (``-inf`` for zero)."""

    log_values: np.ndarray
    certified_rel_err: float = 0.0
    source: str = "computed"

    def __post_init__(self):
        arr = np.asarray(self.log_values, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise RuleError("norm sequence must be a non-empty 1-d array")
        if np.any(np.isnan(arr)) or np.any(arr == np.inf):
            raise RuleError("norm sequence contains NaN or +inf log values")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "log_values", arr)

    @classmethod
    def from_values(cls, values, certified_rel_err=0.0, source="synthetic"):
        values = np.asarray(values, dtype=float)
        if np.any(values < 0):
            raise RuleError("norms must be nonnegative")
        with np.errstate(divide="ignore"):
            return cls(np.log(values), certified_rel_err, source)

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_values)

    @property
    def jmax(self) -> int:
        return self.log_values.size - 1

    def __len__(self):
        return self.log_values.size

    def scaled(self, factor: float) -> "NormSequence":
        if factor <= 0:
            raise RuleError("scale factor must be positive")
        return replace(self, log_values=self.log_values + math.log(factor))

    def shifted(self, s: int = 3) -> "NormSequence":
        if self.jmax < s:
            raise RuleError(f"need at least {s + 1} norms to shift by {s}")
        return replace(self, log_values=self.log_values[s:])

    def truncated(self, jmax: int) -> "NormSequence":
        return replace(self, log_values=self.log_values[: jmax + 1])

    def violations(self) -> list[str]:
        """Monotonicity (from j = 1) and log-convexity violations, as messages."""
        lv = self.log_values
        tol = 2.0 * self.certified_rel_err + 1e-13
        out = []
        for j in range(1, lv.size - 1):
            a, b, c = lv[j - 1], lv[j], lv[j + 1]
            if b > c + tol * max(1.0, abs(c)):
                out.append(f"M_{j} > M_{j + 1}")
            if np.isfinite(b) and 2 * b > a + c + tol * max(1.0, abs(a), abs(c)):
                out.append(f"log-convexity fails at j={j}")
        return out


@dataclass(frozen=True, eq=False)
class CoefficientRule:
    family: Family
    params: Mapping[str, object] = field(default_factory=dict)
    coefficients: tuple = ()
    norms: NormSequence | None = None
    scale: float = 1.0
    normalized_by: float = 1.0
    name: str = ""

    @property
    def is_synthetic(self) -> bool:
        return self.family is Family.SYNTHETIC

    @property
    def is_trig_polynomial(self) -> bool:
        return self.family is Family.EXPLICIT

    @property
    def degree(self) -> int | None:
        if self.family is not Family.EXPLICIT:
            return None
        return max((abs(k) for k, _ in self.coefficients), default=0)

    def describe(self) -> dict:
        """Plain-data form, suitable for a manifest."""
        params = dict(self.params)
        if self.family is Family.EXPLICIT:
            params = {"coefficients": {str(k): [c.real, c.imag] for k, c in self.coefficients}}
        return {
            "name": self.name,
            "family": self.family.value,
            "params": params,
            "scale": self.scale,
            "normalized_by": self.normalized_by,
        }


def _parse_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise RuleError(f"complex coefficient must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    return complex(value)


def _positive(params, key, default=None) -> float:
    if key not in params:
        if default is None:
            raise RuleError(f"missing parameter {key!r}")
        return default
    value = float(params[key])
    if not value > 0 or not math.isfinite(value):
        raise RuleError(f"parameter {key!r} must be a positive finite number, got {value}")
    return value


def synthetic_norms(
    sequence: str,
    *,
    exponent: float = 1.0,
    factor: float = 1.0,
    base: float = 2.0,
    values=None,
    log_values=None,
    jmax: int = SYNTHETIC_JMAX,
) -> NormSequence:
    """Build a synthetic norm sequence.

    ``power``: M_j = (factor * j**exponent)**j, with 0**0 = 1.
    ``exponential``: M_j = (factor * base**j)**j.
    ``factorial``: M_j = factor**j * j!.
    ``constant``: M_j = factor.
    """
    j = np.arange(jmax + 1, dtype=float)
    if sequence == "power":
        with np.errstate(divide="ignore", invalid="ignore"):
            lv = j * (math.log(factor) + exponent * np.log(j))
        lv[0] = 0.0
    elif sequence == "exponential":
        lv = j * math.log(factor) + j * j * math.log(base)
    elif sequence == "factorial":
        lv = special.gammaln(j + 1) + j * math.log(factor)
    elif sequence == "constant":
        lv = np.full(jmax + 1, math.log(factor))
    elif sequence == "values":
        return NormSequence.from_values(values, source="synthetic")
    elif sequence == "log_values":
        return NormSequence(np.asarray(log_values, dtype=float), source="synthetic")
    else:
        raise RuleError(f"unknown synthetic sequence {sequence!r}")
    return NormSequence(lv, source="synthetic")


def make_rule(config: Mapping) -> CoefficientRule:
    """Validate a function description and build its rule.

    ``config`` has keys ``family``, ``params`` and optionally ``scale`` and
    ``name``.  Unknown keys are rejected.
    """
    unknown = set(config) - {"family", "params", "scale", "name"}
    if unknown:
        raise RuleError(f"unknown function field(s): {', '.join(sorted(unknown))}")
    try:
        family = Family(config["family"])
    except KeyError:
        raise RuleError("missing field 'family'") from None
    except ValueError:
        raise RuleError(f"unknown family {config['family']!r}") from None
    params = dict(config.get("params") or {})
    bad = set(params) - PARAM_KEYS[family]
    if bad:
        raise RuleError(f"unknown parameter(s) for {family.value}: {', '.join(sorted(bad))}")
    scale = _positive(config, "scale", 1.0)
    name = str(config.get("name", ""))

    if family is Family.EXPLICIT:
        raw = params.get("coefficients")
        if not isinstance(raw, Mapping) or not raw:
            raise RuleError("explicit-list needs a non-empty 'coefficients' mapping k -> c_k")
        coeffs = {}
        for k, v in raw.items():
            try:
                kk = int(k)
            except (TypeError, ValueError):
                raise RuleError(f"coefficient index {k!r} is not an integer") from None
            c = _parse_complex(v)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise RuleError(f"coefficient c_{kk} is not finite")
            if c != 0:
                coeffs[kk] = coeffs.get(kk, 0) + c
        return CoefficientRule(
            family, MappingProxyType({}), tuple(sorted(coeffs.items())), scale=scale, name=name
        )

    if family is Family.SYNTHETIC:
        seq = params.get("sequence")
        if seq not in SYNTHETIC_SEQUENCES:
            raise RuleError(f"synthetic 'sequence' must be one of {SYNTHETIC_SEQUENCES}")
        kwargs = {k: params[k] for k in ("exponent", "factor", "base") if k in params}
        kwargs = {k: float(v) for k, v in kwargs.items()}
        if "factor" in kwargs and kwargs["factor"] <= 0:
            raise RuleError("synthetic 'factor' must be positive")
        if "base" in kwargs and kwargs["base"] <= 0:
            raise RuleError("synthetic 'base' must be positive")
        norms = synthetic_norms(
            seq,
            values=params.get("values"),
            log_values=params.get("log_values"),
            jmax=int(params.get("jmax", SYNTHETIC_JMAX)),
            **kwargs,
        )
        if scale != 1.0:
            norms = norms.scaled(scale)
        return CoefficientRule(family, MappingProxyType(dict(params)), norms=norms, scale=scale, name=name)

    clean = {"amplitude": _positive(params, "amplitude", 1.0)}
    if family is Family.GEOMETRIC:
        rho = float(params.get("rho", float("nan")))
        if not 0 < rho < 1:
            raise RuleError(f"geometric ratio rho must lie in (0, 1), got {params.get('rho')!r}")
        clean["rho"] = rho
    elif family is Family.EXP_POWER:
        clean["beta"] = _positive(params, "beta")
        alpha = float(params.get("alpha", float("nan")))
        if not 0 < alpha <= 1:
            raise RuleError(f"exp-power alpha must lie in (0, 1], got {params.get('alpha')!r}")
        clean["alpha"] = alpha
    elif family is Family.LOG_SQUARED_EXP:
        # exp(-beta log^2(1+k)) = (1+k)^(-beta log(1+k)) is summable for every beta > 0
        clean["beta"] = _positive(params, "beta")
    return CoefficientRule(family, MappingProxyType(clean), scale=scale, name=name)


def _require_pointwise(rule: CoefficientRule):
    if rule.is_synthetic:
        raise SyntheticRuleError("synthetic-norms rules have no pointwise coefficients")


def _log_abs_coeffs(rule: CoefficientRule, kabs: np.ndarray) -> np.ndarray:
    """log|c_k| for |k| = kabs (parametric families are even in k)."""
    p = rule.params
    base = math.log(p["amplitude"] * rule.scale)
    kabs = np.asarray(kabs, dtype=float)
    if rule.family is Family.GEOMETRIC:
        return base + kabs * math.log(p["rho"])
    if rule.family is Family.EXP_POWER:
        return base - p["beta"] * kabs ** p["alpha"]
    if rule.family is Family.LOG_SQUARED_EXP:
        return base - p["beta"] * np.log1p(kabs) ** 2
    raise AssertionError(rule.family)


def coefficient(rule: CoefficientRule, k: int) -> complex:
    _require_pointwise(rule)
    k = int(k)
    if rule.family is Family.EXPLICIT:
        return complex(dict(rule.coefficients).get(k, 0j) * rule.scale)
    return complex(math.exp(float(_log_abs_coeffs(rule, abs(k)))))


def coefficient_array(rule: CoefficientRule, K: int) -> np.ndarray:
    """Coefficients c_{-K}, ..., c_K as a complex array of length 2K + 1."""
    _require_pointwise(rule)
    if rule.family is Family.EXPLICIT:
        out = np.zeros(2 * K + 1, dtype=complex)
        for k, c in rule.coefficients:
            if abs(k) <= K:
                out[k + K] = c * rule.scale
        return out
    kabs = np.abs(np.arange(-K, K + 1))
    return np.exp(_log_abs_coeffs(rule, kabs)).astype(complex)


# -- certified tails -------------------------------------------------------


def _log_upper_gamma(s: float, x: float) -> float:
    """Upper bound on log Gamma(s, x) (upper incomplete gamma), s > 0, x >= 0."""
    if x <= 0:
        return float(special.gammaln(s))
    if x > 2 * max(s - 1.0, 0.0) and x > 1.0:
        # Gamma(s,x) <= x^(s-1) e^-x / (1 - (s-1)/x) for x > s-1 (s >= 1); <= x^(s-1) e^-x for s < 1
        corr = -math.log1p(-(s - 1.0) / x) if s > 1 else 0.0
        return (s - 1.0) * math.log(x) - x + corr
    q = float(special.gammaincc(s, x))
    if q <= 0.0:
        return (s - 1.0) * math.log(x) - x + math.log(x / (x - s + 1.0))
    return float(special.gammaln(s)) + math.log(q) + 1e-10


def log_power_exp_integral(m: float, b: float, alpha: float, K: float) -> float:
    """log of  int_K^inf x^m exp(-b x^alpha) dx."""
    s = (m + 1.0) / alpha
    return -math.log(alpha) - s * math.log(b) + _log_upper_gamma(s, b * K**alpha)


def log_gauss_integral(p: float, q: float, U: float) -> float:
    """log of  int_U^inf exp(p u - q u^2) du  (q > 0)."""
    mu = p / (2.0 * q)
    y = math.sqrt(q) * (U - mu)
    if y > 0:
        log_erfc = math.log(special.erfcx(y)) - y * y
    else:
        log_erfc = math.log(special.erfc(y))
    return p * p / (4.0 * q) + 0.5 * math.log(math.pi / q) - math.log(2.0) + log_erfc


def _log_tail_one_side(rule: CoefficientRule, K: int) -> float:
    """log of a certified bound on sum_{k > K} |c_k| (one side)."""
    p = rule.params
    base = math.log(p["amplitude"] * rule.scale)
    if rule.family is Family.GEOMETRIC:
        rho = p["rho"]
        return base + (K + 1) * math.log(rho) - math.log1p(-rho)
    if rule.family is Family.EXP_POWER:
        # terms decrease, so the sum is dominated by the integral from K
        return base + log_power_exp_integral(0.0, p["beta"], p["alpha"], K)
    if rule.family is Family.LOG_SQUARED_EXP:
        # substitute u = log(1+x): int exp(u - beta u^2) du
        return base + log_gauss_integral(1.0, p["beta"], math.log1p(K))
    raise AssertionError(rule.family)


def tail_bound(rule: CoefficientRule, K: int) -> float:
    """Certified upper bound on sum_{|k| > K} |c_k|."""
    _require_pointwise(rule)
    if rule.family is Family.EXPLICIT:
        return float(sum(abs(c) for k, c in rule.coefficients if abs(k) > K) * rule.scale)
    if rule.family is Family.GEOMETRIC:
        p = rule.params
        return 2.0 * p["amplitude"] * rule.scale * p["rho"] ** (K + 1) / (1.0 - p["rho"])
    return 2.0 * math.exp(_log_tail_one_side(rule, K))


def abs_coefficient_sum(rule: CoefficientRule) -> float:
    """Certified upper bound on sum_k |c_k|, which bounds the uniform norm."""
    _require_pointwise(rule)
    if rule.family is Family.EXPLICIT:
        return float(sum(abs(c) for _, c in rule.coefficients) * rule.scale)
    K = 64
    c = np.abs(coefficient_array(rule, K))
    return float(math.fsum(c)) * (1 + 1e-14) + tail_bound(rule, K)


def truncation_index(rule: CoefficientRule, eps: float) -> int:
    """Smallest K whose certified tail sum_{|k|>K} |c_k| is <= eps."""
    _require_pointwise(rule)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if rule.family is Family.EXPLICIT:
        return rule.degree
    if tail_bound(rule, 0) <= eps:
        return 0
    hi = 1
    while tail_bound(rule, hi) > eps:
        hi *= 2
        if hi > 2**40:
            raise CertificationError(f"no truncation index below 2^40 reaches eps={eps:g}")
    lo = hi // 2  # tail(lo) > eps
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_bound(rule, mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def _powers(z: np.ndarray, ks: np.ndarray) -> np.ndarray:
    return np.exp(np.multiply.outer(np.log(z), ks))


def evaluate(rule: CoefficientRule, z, eps: float = DEFAULT_EPS):
    """f(z) on the unit circle with absolute error at most ``eps``.

    ``z`` may be a scalar or an array; the result has the same shape.
    """
    _require_pointwise(rule)
    z_arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(np.abs(z_arr) - 1.0) > 1e-9):
        raise DomainError("f is only defined on the unit circle |z| = 1")
    K = truncation_index(rule, eps)
    if K > MAX_INDEX:
        raise CertificationError(f"evaluation needs {K} modes, above the cap {MAX_INDEX}")
    return eval_laurent(coefficient_array(rule, K), z)


def eval_laurent(coeffs: np.ndarray, z):
    """Evaluate sum_{k=-K}^{K} coeffs[k+K] z^k at z (scalar or array, z != 0)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    K = (coeffs.size - 1) // 2
    ks = np.arange(-K, K + 1)
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    out = np.empty(z_arr.size, dtype=complex)
    chunk = max(1, 2**22 // coeffs.size)
    for start in range(0, z_arr.size, chunk):
        zz = z_arr[start : start + chunk]
        out[start : start + chunk] = (_powers(zz, ks) * coeffs).sum(axis=1)
    if np.ndim(z) == 0:
        return complex(out[0])
    return out.reshape(np.shape(z))


# -- derivative norms ------------------------------------------------------


@dataclass(frozen=True)
class NormEstimate:
    log_value: float
    rel_err: float
    K: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value < 709 else math.inf


def _weighted_tail_setup(rule: CoefficientRule, j: int):
    """(decrease threshold K*, log tail function) for sum_{k>K} k^(2j) |c_k|^2."""
    p = rule.params
    base2 = 2.0 * math.log(p["amplitude"] * rule.scale)
    if rule.family in (Family.GEOMETRIC, Family.EXP_POWER):
        if rule.family is Family.GEOMETRIC:
            alpha, b = 1.0, -2.0 * math.log(p["rho"])
        else:
            alpha, b = p["alpha"], 2.0 * p["beta"]
        k_dec = (2.0 * j / (alpha * b)) ** (1.0 / alpha) if j else 0.0
        return k_dec, lambda K: base2 + log_power_exp_integral(2.0 * j, b, alpha, K)
    # log-squared-exp: dominate k^(2j) by (1+k)^(2j), then u = log(1+x)
    beta = p["beta"]
    k_dec = math.expm1(j / (2.0 * beta)) if j else 0.0
    return k_dec, lambda K: base2 + log_gauss_integral(2.0 * j + 1.0, 2.0 * beta, math.log1p(K))


def log_derivative_norm(
    rule: CoefficientRule, j: int, eps_rel: float = DEFAULT_EPS_REL, k_cap: int = MAX_INDEX
) -> NormEstimate:
    """log M_j with a certified relative error.

    The truncated sum runs over |k| <= K; K is doubled until the certified
    weighted tail is at most ``eps_rel`` times the partial sum.  The returned
    value is a lower bound and ``value * (1 + rel_err)`` an upper bound.
    """
    _require_pointwise(rule)
    if j < 0:
        raise ValueError("j must be nonnegative")
    if rule.family is Family.EXPLICIT:
        terms = [
            2 * j * math.log(abs(k)) + 2 * math.log(abs(c) * rule.scale)
            for k, c in rule.coefficients
            if k != 0 or j == 0
        ]
        if not terms:
            return NormEstimate(-math.inf, 0.0, rule.degree)
        return NormEstimate(0.5 * float(special.logsumexp(terms)), 1e-15, rule.degree)

    k_dec, log_tail = _weighted_tail_setup(rule, j)
    K = max(16, int(math.ceil(2 * k_dec)) + 1)
    log_c0_sq = 2.0 * float(_log_abs_coeffs(rule, 0)) if j == 0 else -math.inf
    while True:
        if K > k_cap:
            raise CertificationError(
                f"M_{j} for {rule.family.value}: weighted tail not certified below K={k_cap}"
            )
        ks = np.arange(1, K + 1, dtype=float)
        terms = 2.0 * j * np.log(ks) + 2.0 * _log_abs_coeffs(rule, ks)
        log_s = float(np.logaddexp(math.log(2.0) + special.logsumexp(terms), log_c0_sq))
        log_t = math.log(2.0) + log_tail(K)
        if log_t - log_s <= math.log(eps_rel):
            rel = 0.5 * math.exp(log_t - log_s) + 1e-14
            return NormEstimate(0.5 * log_s, rel, K)
        K *= 2


def derivative_norm(rule: CoefficientRule, j: int, eps_rel: float = DEFAULT_EPS_REL) -> float:
    """M_j(f) = sqrt(sum_k k^(2j) |c_k|^2); ``inf`` if it overflows a double."""
    if rule.is_synthetic:
        if j > rule.norms.jmax:
            raise RuleError(f"synthetic sequence has no entry M_{j}")
        return float(rule.norms.values[j])
    return log_derivative_norm(rule, j, eps_rel).value


def norm_sequence(
    rule: CoefficientRule,
    jmax: int | None = None,
    eps_rel: float = DEFAULT_EPS_REL,
    r_max: float | None = None,
) -> NormSequence:
    """Norm sequence M_0..M_J of a rule.

    With ``r_max`` the sequence is extended only until the associated function
    is exact on [1, r_max] (the consecutive log-ratio exceeds log r_max), capped
    at ``jmax`` (default 400).
    """
    if rule.is_synthetic:
        M = rule.norms
        return M.truncated(jmax) if jmax is not None and jmax < M.jmax else M
    cap = DEFAULT_JMAX if jmax is None else jmax
    logs, rel = [], 0.0
    target = math.log(r_max) + 0.1 if r_max is not None else None
    for j in range(cap + 1):
        est = log_derivative_norm(rule, j, eps_rel)
        logs.append(est.log_value)
        rel = max(rel, est.rel_err)
        if target is not None and j >= 8 and logs[-1] - logs[-2] >= target:
            break
    return NormSequence(np.array(logs), rel, "computed")


def normalize(rule: CoefficientRule, eps_rel: float = DEFAULT_EPS_REL) -> CoefficientRule:
    """Rescale so that M_3 < 1/2 (to 0.4 when a reduction is needed).

    The applied factor is accumulated in ``normalized_by``.
    """
    if rule.is_synthetic:
        m3 = math.exp(rule.norms.log_values[3])
    else:
        m3 = math.exp(log_derivative_norm(rule, 3, eps_rel).log_value)
    if m3 < 0.5:
        return rule
    factor = NORMALIZED_M3 / m3
    if rule.is_synthetic:
        return replace(
            rule,
            norms=rule.norms.scaled(factor),
            scale=rule.scale * factor,
            normalized_by=rule.normalized_by * factor,
        )
    return replace(rule, scale=rule.scale * factor, normalized_by=rule.normalized_by * factor)


def normalize_norms(M: NormSequence) -> tuple[NormSequence, float]:
    """Scale a norm sequence so M_3 < 1/2; returns the sequence and the factor."""
    if M.jmax < 3:
        raise RuleError("normalization needs M_3")
    log_m3 = M.log_values[3]
    if log_m3 < math.log(0.5):
        return M, 1.0
    factor = math.exp(math.log(NORMALIZED_M3) - log_m3)
    return M.scaled(factor), factor
