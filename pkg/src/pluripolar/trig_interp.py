"""Interpolation at the n-th roots of unity plus one extra node z0.

With the aliased sums  a_{n,r} = sum_{j>=0} c_{r+nj}  and
b_{n,r} = sum_{j>=0} c_{-r-nj},

    L_n(f; z)     = sum_{r=0}^{n-1} a_{n,r} z^r + sum_{r=1}^{n} b_{n,r} z^-r
    L_n(f, z0; z) = L_n(f; z) + gamma (z^n - 1),
    gamma         = (f(z0) - L_n(f; z0)) / (z0^n - 1).

At an n-th root of unity z_l every c_k z_l^k is folded onto z_l^r with
r = k mod n, so L_n(f; .) reproduces f at the nodes; the correction term
vanishes there and fixes the value at z0.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import circle_functions as cf
from .circle_functions import CoefficientRule, NormSequence
from .errors import DegenerateError, DomainError
from .growth_scales import degeneracy_radius, log_tn, tau

DEGENERATE_TOL = 1e-12
CONDITIONING_TOL = 1e-8
SUP_REL_CHANGE = 1e-3
MAX_SUP_SAMPLES = 2**20


class ConditioningWarning(UserWarning):
    """The correction denominator z0^n - 1 is small."""


@dataclass(frozen=True, eq=False)
class Interpolant:
    n: int
    a: np.ndarray  # a[r], r = 0..n-1
    b: np.ndarray  # b[r-1], r = 1..n
    z0: complex
    gamma: complex
    tail_err: float
    denominator: float = 1.0

    def __post_init__(self):
        if abs(abs(self.z0) - 1.0) > 1e-12:
            raise DomainError("z0 must lie on the unit circle")

    def __call__(self, z):
        return eval_interpolant(self, z)


def aliased_coeffs(rule: CoefficientRule, n: int, eps: float = cf.DEFAULT_EPS):
    """(a, b, tail_err): the aliased sums, truncated with a certified tail.

    The dropped coefficients have total modulus tail_err <= eps / (2n + 1),
    which bounds the error of every a_r and b_r together.
    """
    cf._require_pointwise(rule)
    if n < 1:
        raise ValueError("n must be >= 1")
    K = cf.truncation_index(rule, eps / (2 * n + 1))
    if K > cf.MAX_INDEX:
        raise cf.CertificationError(f"aliased sums need {K} modes, above the cap {cf.MAX_INDEX}")
    c = cf.coefficient_array(rule, K)
    pos = c[K:]  # k = 0..K
    neg = c[:K][::-1]  # k = -1..-K
    r_pos = np.arange(K + 1) % n
    r_neg = np.arange(K) % n  # index r - 1 for k = -(r + nj)
    a = _bin(r_pos, pos, n)
    b = _bin(r_neg, neg, n)
    return a, b, cf.tail_bound(rule, K)


def _bin(idx: np.ndarray, values: np.ndarray, n: int) -> np.ndarray:
    re = np.bincount(idx, weights=values.real, minlength=n)
    im = np.bincount(idx, weights=values.imag, minlength=n)
    return re + 1j * im


def default_z0(n: int) -> complex:
    return complex(np.exp(1j * np.pi / (2 * n)))


def _eval_base(a: np.ndarray, b: np.ndarray, z: np.ndarray) -> np.ndarray:
    pos = np.polynomial.polynomial.polyval(z, a)
    neg = np.polynomial.polynomial.polyval(1.0 / z, np.concatenate(([0.0], b)))
    return pos + neg


def build(
    rule: CoefficientRule, n: int, z0: complex | None = None, eps: float = cf.DEFAULT_EPS
) -> Interpolant:
    """The interpolant L_n(f, z0; .) of a pointwise rule."""
    z0 = default_z0(n) if z0 is None else complex(z0)
    if abs(abs(z0) - 1.0) > 1e-12:
        raise DomainError("z0 must lie on the unit circle")
    z0 = z0 / abs(z0)
    a, b, tail_err = aliased_coeffs(rule, n, eps)
    denom = z0**n - 1.0
    gap = abs(denom)
    if gap < DEGENERATE_TOL:
        return Interpolant(n, a, b, z0, 0j, tail_err, gap)
    if gap < CONDITIONING_TOL:
        warnings.warn(
            f"ill-conditioned correction: |z0^n - 1| = {gap:.3e}", ConditioningWarning, stacklevel=2
        )
    f0 = complex(cf.evaluate(rule, z0, eps / (2 * n + 1)))
    base = complex(_eval_base(a, b, np.array([z0]))[0])
    return Interpolant(n, a, b, z0, (f0 - base) / denom, tail_err, gap)


def eval_interpolant(L: Interpolant, z):
    """L(z) = sum a_r z^r + sum b_r z^-r + gamma (z^n - 1), by Horner's rule."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z_arr == 0):
        raise DomainError("the interpolant has a pole at z = 0")
    out = _eval_base(L.a, L.b, z_arr) + L.gamma * (z_arr**L.n - 1.0)
    if np.ndim(z) == 0:
        return complex(out[0])
    return out.reshape(np.shape(z))


# public short name; ``eval`` shadows the builtin only inside this namespace
eval = eval_interpolant  # noqa: A001


def node_residual(rule: CoefficientRule, L: Interpolant, eps: float = cf.DEFAULT_EPS) -> float:
    """max |L - f| over the n-th roots of unity and z0."""
    nodes = np.append(np.exp(2j * np.pi * np.arange(L.n) / L.n), L.z0)
    f = np.asarray(cf.evaluate(rule, nodes, eps))
    return float(np.abs(eval_interpolant(L, nodes) - f).max())


def node_values(rule: CoefficientRule, n: int, eps: float = cf.DEFAULT_EPS) -> np.ndarray:
    """f at the n-th roots of unity by direct summation with exact twiddles.

    The powers are looked up as omega^(jk mod n), so no phase error grows with
    k; the sum is over k directly, independent of the aliased folding.
    """
    K = cf.truncation_index(rule, eps)
    c = cf.coefficient_array(rule, K)
    twiddle = np.exp(2j * np.pi * np.arange(n) / n)
    j = np.arange(n)
    out = np.zeros(n, dtype=complex)
    ks = np.arange(-K, K + 1)
    keep = c != 0
    ks, c = ks[keep], c[keep]
    step = max(1, 2**20 // n)
    for start in range(0, ks.size, step):
        kk = ks[start : start + step]
        out += twiddle[np.multiply.outer(j, kk) % n] @ c[start : start + step]
    return out


def dft_consistency(rule: CoefficientRule, n: int, eps: float = cf.DEFAULT_EPS) -> float:
    """Largest gap between the DFT of f at the nodes and the folded sums a_r + b_{n-r}."""
    a, b, _ = aliased_coeffs(rule, n, eps)
    d = np.fft.fft(node_values(rule, n, eps / n)) / n
    folded = a.copy()
    folded[0] += b[n - 1]
    if n > 1:
        folded[1:] += b[n - 2 :: -1][: n - 1]
    return float(np.abs(d - folded).max())


@dataclass(frozen=True)
class AnnulusSup:
    value: float
    samples: int
    rel_change: float
    caveat: str = "boundary-circle sampling; the sup between samples may be larger"


def _circle_max(L: Interpolant, t: float, m: int) -> float:
    z = np.exp(2j * np.pi * np.arange(m) / m)
    return float(max(np.abs(eval_interpolant(L, t * z)).max(), np.abs(eval_interpolant(L, z / t)).max()))


def annulus_sup(L: Interpolant, t: float, m_samples: int = 256) -> AnnulusSup:
    """sup |L| over 1/t <= |z| <= t from the two boundary circles.

    The sample count is doubled until the maximum changes by less than 0.1%.
    """
    if not t > 1:
        raise ValueError("t must exceed 1")
    m = max(8, int(m_samples))
    value = _circle_max(L, t, m)
    change = math.inf
    while m < MAX_SUP_SAMPLES:
        m *= 2
        new = _circle_max(L, t, m)
        change = abs(new - value) / max(new, 1e-300)
        value = max(value, new)
        if change < SUP_REL_CHANGE:
            break
    return AnnulusSup(value, m, change)


def er_bound(M: NormSequence, n: int, t: float) -> float:
    """S(n, t) = 1 + sum_{r=1}^{n} r tau(r) t^r."""
    if degeneracy_radius(M) is not None:
        raise DegenerateError("analytic-degenerate norm sequence")
    total = [0.0]
    for r in range(1, int(n) + 1):
        lt = tau(M, r).log_value
        total.append(math.log(r) + lt + r * math.log(t))
    return float(np.exp(np.logaddexp.reduce(total)))


@dataclass
class ScanRow:
    n: int
    z0_arg: float
    log_tn: float
    sup_measured: float
    er_bound: float
    ratio: float
    gamma_abs: float
    gamma_bound: float
    max_r3_tau_t: float


@dataclass
class ScanTable:
    rows: list[ScanRow]
    normalization: float
    notes: list[str] = field(default_factory=list)

    def ratio_spread(self) -> float:
        """max/min of the measured sups: a single constant bounds them all."""
        sups = [row.sup_measured for row in self.rows]
        return max(sups) / min(sups)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "z0_arg", "log_tn", "sup_measured", "er_bound", "ratio"])
        for row in self.rows:
            writer.writerow([row.n, repr(row.z0_arg), repr(row.log_tn), repr(row.sup_measured),
                             repr(row.er_bound), repr(row.ratio)])
        return buf.getvalue()


def default_z0_list(count: int = 4) -> list[complex]:
    """Unit points avoiding small roots of unity: arguments (2k+1) pi / (2 count) + 0.1."""
    return [complex(np.exp(1j * ((2 * k + 1) * np.pi / (2 * count) + 0.1))) for k in range(count)]


def uniform_bound_scan(
    rule: CoefficientRule,
    n_list,
    z0_list=None,
    eps: float = cf.DEFAULT_EPS,
    M: NormSequence | None = None,
) -> ScanTable:
    """Annulus sups of the interpolants at t = t_n, against the bound shape S(n, t_n).

    The rule is normalized to M_3 < 1/2 first.  Before each row the defining
    property r^3 tau(r) t_n^r <= 1 is checked at integers r <= n.
    """
    cf._require_pointwise(rule)
    if rule.is_trig_polynomial:
        raise DegenerateError("trigonometric polynomial: the scales t_n are infinite")
    norm_rule = cf.normalize(rule)
    n_list = [int(n) for n in n_list]
    if M is None:
        M = cf.norm_sequence(norm_rule, r_max=max(n_list))
    if degeneracy_radius(M) is not None:
        raise DegenerateError("analytic-degenerate norm sequence")
    z0_list = default_z0_list() if z0_list is None else [complex(z) for z in z0_list]
    rows = []
    for n in n_list:
        lt, _ = log_tn(M, n)
        t = math.exp(lt)
        r = np.arange(1, n + 1)
        checks = [3 * math.log(k) + tau(M, k).log_value + k * lt for k in r]
        max_check = math.exp(max(checks))
        if max_check > 1 + 1e-9:
            raise AssertionError(f"r^3 tau(r) t_n^r = {max_check} > 1 at n = {n}")
        S = er_bound(M, n, t)
        gamma_bound = 4 * n * tau(M, n).value
        for z0 in z0_list:
            L = build(norm_rule, n, z0, eps)
            sup = annulus_sup(L, t).value
            rows.append(ScanRow(n, float(np.angle(z0)), lt, sup, S, sup / S, abs(L.gamma),
                                gamma_bound, max_check))
    return ScanTable(rows, norm_rule.normalized_by / rule.normalized_by)


@dataclass(frozen=True)
class BernsteinWalshReport:
    max_violation: float
    norm_estimate: float
    inflation: float
    samples: int


def bernstein_walsh_check(coeffs, z) -> BernsteinWalshReport:
    """max over z of |p(z)| e^(-n V(z)) - ||p||_S, with V(z) = |log |z||.

    ``coeffs`` are c_{-n}..c_n.  ||p||_S comes from dense circle sampling,
    inflated by 1/cos(pi n / grid) so that it bounds the true sup.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.ndim != 1 or coeffs.size % 2 == 0:
        raise ValueError("coefficients must be c_{-n}..c_n (odd length)")
    n = (coeffs.size - 1) // 2
    grid = int(4096 * max(1.0, n / 32))
    circle = np.exp(2j * np.pi * np.arange(grid) / grid)
    inflation = 1.0 / math.cos(math.pi * n / grid)
    norm = float(np.abs(cf.eval_laurent(coeffs, circle)).max()) * inflation
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    V = np.abs(np.log(np.abs(z)))
    scaled = np.abs(cf.eval_laurent(coeffs, z)) * np.exp(-n * V)
    return BernsteinWalshReport(float(scaled.max() - norm), norm, inflation, grid)
