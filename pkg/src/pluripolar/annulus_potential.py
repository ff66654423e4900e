"""Green function of the annulus A = {1/r < |w| < r} with pole at w = 1.

The strip T = {0 < Im z < pi} covers A through

    f1(z) = exp(log r (1 + 2iz/pi)),

and the pole lifts to z_k = k pi^2 / log r + i pi/2.  The disk U is mapped
onto T by f2(zeta) = log(i (1 - zeta)/(1 + zeta)), sending z'_k = -tanh(k pi^2 / (2 log r))
to z_k.  Summing disk Green functions over the lifted poles,

    g_A(w, 1) = sum_k log |(zeta - z'_k) / (1 - z'_k zeta)|,   zeta = f2^{-1}(f1^{-1}(w)).

Terms with large |k| are evaluated through delta_k = 1 - |z'_k| to avoid
cancellation; they decay like q^|k| with q = exp(-pi^2 / log r).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError

DEFAULT_EPS = 1e-12
NEAR_POLE = 1e-9
LOG_OVERFLOW = 700.0
ROUND_TRIP_TOL = 1e-12


@dataclass(frozen=True)
class AnnulusSpec:
    r: float

    def __post_init__(self):
        if not (self.r > 1 and math.isfinite(self.r)):
            raise DomainError(f"outer radius must be a finite number > 1, got {self.r}")

    @property
    def log_r(self) -> float:
        return math.log(self.r)

    @property
    def q(self) -> float:
        """Decay ratio exp(-pi^2 / log r) of the series terms."""
        return math.exp(-math.pi**2 / self.log_r)

    def contains(self, w) -> np.ndarray:
        a = np.abs(np.asarray(w, dtype=complex))
        return (a > 1.0 / self.r) & (a < self.r)


@dataclass(frozen=True)
class GreenEvaluation:
    value: float
    terms_used: int
    tail_bound: float
    near_pole: bool = False


def strip_lift(w, spec: AnnulusSpec):
    """z in T with f1(z) = w, on the sheet |Re z| <= pi^2 / (2 log r)."""
    w_arr = np.asarray(w, dtype=complex)
    if np.any(w_arr == 0) or not np.all(spec.contains(w_arr)):
        raise DomainError("w lies outside the annulus")
    z = (np.pi / 2j) * (np.log(w_arr) / spec.log_r - 1.0)
    back = np.exp(spec.log_r * (1.0 + 2j * z / np.pi))
    if np.any(np.abs(back - w_arr) > ROUND_TRIP_TOL * np.maximum(1.0, np.abs(w_arr)) * 10):
        raise DomainError("strip lift failed its round-trip check")
    return complex(z) if np.ndim(w) == 0 else z


def f1(z, spec: AnnulusSpec):
    return np.exp(spec.log_r * (1.0 + 2j * np.asarray(z, dtype=complex) / np.pi))


def f2(zeta):
    zeta = np.asarray(zeta, dtype=complex)
    return np.log(1j * (1.0 - zeta) / (1.0 + zeta))


def disk_pull(z):
    """zeta in U with f2(zeta) = z, for z in the strip 0 < Im z < pi."""
    z_arr = np.asarray(z, dtype=complex)
    if np.any((z_arr.imag <= 0) | (z_arr.imag >= np.pi)):
        raise DomainError("z lies outside the strip 0 < Im z < pi")
    e = np.exp(z_arr)
    zeta = (1j - e) / (1j + e)
    return complex(zeta) if np.ndim(z) == 0 else zeta


@dataclass(frozen=True)
class PoleImages:
    k: np.ndarray
    values: np.ndarray
    delta: np.ndarray  # 1 - |z'_k|, accurate where z'_k is close to -+1
    saturated: np.ndarray  # exponent k pi^2 / log r beyond the overflow guard


def pole_images(spec: AnnulusSpec, K: int) -> PoleImages:
    """z'_k = (1 - e^{s_k}) / (1 + e^{s_k}), s_k = k pi^2 / log r, for |k| <= K."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    k = np.arange(-K, K + 1)
    s = k * (math.pi**2 / spec.log_r)
    values = -np.tanh(s / 2.0)
    delta = 2.0 * special.expit(-np.abs(s))
    saturated = np.abs(s) > LOG_OVERFLOW
    # past the guard tanh rounds to -+1: keep |z'_k| = 1 - delta_k so every image stays in U
    values = np.where(saturated, -np.sign(s) * (1.0 - delta), values)
    return PoleImages(k, values, delta, saturated)


def _pick_K(spec: AnnulusSpec, D: float, eps: float) -> tuple[int, float]:
    """Smallest K whose certified two-sided tail is <= eps, and that tail.

    For |k| > K each term is log|1 - u_k| with |u_k| <= 2 delta_k / (D - delta_k),
    delta_k <= 2 q^|k|.  Once |u_k| <= 1/2, |log|1 - u_k|| <= 2 |u_k|.
    """
    q = spec.q
    K = 0
    while True:
        dk = 2.0 * q ** (K + 1)
        if dk <= D / 4:
            # |u_k| <= 8 q^|k| / D, |term| <= 16 q^|k| / D, two sides
            tail = 32.0 * q ** (K + 1) / ((1.0 - q) * D)
            if 8.0 * q ** (K + 1) / D <= 0.5 and tail <= eps:
                return K, tail
        K += 1
        if K > 10**6:
            raise ConvergenceError("Green series truncation exceeded 10^6 terms")


def _green_terms(zeta: np.ndarray, images: PoleImages) -> np.ndarray:
    """Sum over images of log|(zeta - z'_k)/(1 - z'_k zeta)|, computed stably."""
    total = np.zeros(zeta.shape, dtype=float)
    for k, x, d in zip(images.k, images.values, images.delta):
        if k == 0:
            total += np.log(np.abs(zeta))
            continue
        if d > 0.25:
            total += np.log(np.abs((zeta - x) / (1.0 - x * zeta)))
            continue
        if k > 0:  # x = -(1 - d)
            u = d * (1.0 - zeta) / (1.0 + zeta - d * zeta)
        else:  # x = 1 - d
            u = d * (1.0 + zeta) / (1.0 - zeta + d * zeta)
        total += 0.5 * np.log1p(-2.0 * u.real + (u * np.conj(u)).real)
    return total


def green_array(w, spec: AnnulusSpec, eps: float = DEFAULT_EPS):
    """Vectorized g_A(w, 1); returns (values, K, tail_bound)."""
    w_arr = np.atleast_1d(np.asarray(w, dtype=complex))
    zeta = disk_pull(strip_lift(w_arr, spec))
    D = float(np.min(np.minimum(np.abs(1.0 + zeta), np.abs(1.0 - zeta))))
    if D == 0.0:
        # thin annulus: far from the pole the lift lands on -+1 in double precision
        raise DomainError("point lifts onto the strip boundary in double precision; annulus too thin here")
    K, tail = _pick_K(spec, D, eps)
    with np.errstate(divide="ignore"):
        values = _green_terms(zeta, pole_images(spec, K))
    return values.reshape(np.shape(w)) if np.ndim(w) else values, K, tail


def green(w: complex, spec: AnnulusSpec, eps: float = DEFAULT_EPS) -> GreenEvaluation:
    """g_A(w, 1) from the covering-map series, with certified truncation."""
    w = complex(w)
    if w == 1:
        raise DomainError("w = 1 is the pole")
    values, K, tail = green_array(np.array([w]), spec, eps)
    return GreenEvaluation(float(values[0]), 2 * K + 1, tail, abs(w - 1) < NEAR_POLE)


def circle_bound_constant(a: float) -> float:
    """c(a) = -exp(-pi^2 / log a) / pi^2."""
    if not a > 1:
        raise DomainError("a must exceed 1")
    return -math.exp(-math.pi**2 / math.log(a)) / math.pi**2


def sup_circle_bound(spec: AnnulusSpec, a: float) -> float:
    """c(a) log r, an upper bound for g_A on the unit circle when r >= a > 1."""
    if not 1 < a <= spec.r:
        raise DomainError(f"need r >= a > 1, got r = {spec.r}, a = {a}")
    return circle_bound_constant(a) * spec.log_r


@dataclass(frozen=True)
class CircleSup:
    value: float
    samples: int
    argmax: float


def measure_circle_sup(
    spec: AnnulusSpec, m: int = 256, eps: float = DEFAULT_EPS, max_samples: int = 2**16
) -> CircleSup:
    """max of g_A over |w| = 1, skipping a 1e-6 arc around the pole.

    Samples are doubled until the maximum moves by less than 0.1%.
    """
    if m < 16:
        raise ValueError("m must be at least 16")

    def sample(count):
        theta = 2 * np.pi * np.arange(count) / count
        theta = theta[(theta > 1e-6) & (theta < 2 * np.pi - 1e-6)]
        g, _, tail = green_array(np.exp(1j * theta), spec, eps)
        i = int(np.argmax(g))
        return float(g[i]) + tail, float(theta[i])

    value, arg = sample(m)
    while m < max_samples:
        m *= 2
        new, new_arg = sample(m)
        change = abs(new - value) / max(abs(new), 1e-300)
        if new > value:
            value, arg = new, new_arg
        if change < 1e-3:
            break
    return CircleSup(value, m, arg)


@dataclass
class FDField:
    spec: AnnulusSpec
    u: np.ndarray
    theta: np.ndarray
    g: np.ndarray  # shape (len(u), len(theta)); nan at the pole node
    residual: float

    @property
    def w(self) -> np.ndarray:
        return np.exp(self.u[:, None] + 1j * self.theta[None, :])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["u", "theta", "g"])
        for i, u in enumerate(self.u):
            for j, th in enumerate(self.theta):
                writer.writerow([repr(float(u)), repr(float(th)), repr(float(self.g[i, j]))])
        return buf.getvalue()


def _thomas(lower, diag, upper, rhs):
    """Solve tridiagonal systems column-wise: rows along axis 0, independent systems along axis 1."""
    n = rhs.shape[0]
    c = np.empty_like(diag)
    d = np.empty_like(rhs)
    c[0] = upper / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        den = diag[i] - lower * c[i - 1]
        c[i] = upper / den
        d[i] = (rhs[i] - lower * d[i - 1]) / den
    x = np.empty_like(rhs)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def fd_oracle(spec: AnnulusSpec, N_rad: int = 512, N_ang: int = 512, tol: float = 1e-10) -> FDField:
    """Finite-difference g_A(., 1) on the (u, theta) = (log|w|, arg w) rectangle.

    Solves the 5-point discretization of h_uu + h_thth = 0 for the regular part
    h = g - log|w - 1|, with h = -log|w - 1| on u = +-log r and theta periodic.
    The periodic direction is diagonalized by FFT and each mode is a
    tridiagonal solve in u, so the discrete system is solved directly; the
    5-point residual is checked against ``tol``.
    """
    if N_rad < 64 or N_ang < 64:
        raise ValueError("grid sizes must be at least 64")
    L = spec.log_r
    u = np.linspace(-L, L, N_rad + 1)
    theta = 2 * np.pi * np.arange(N_ang) / N_ang
    hu, ht = u[1] - u[0], theta[1] - theta[0]
    w_in = np.exp(-L + 1j * theta)
    w_out = np.exp(L + 1j * theta)
    h_lo, h_hi = -np.log(np.abs(w_in - 1)), -np.log(np.abs(w_out - 1))

    m = np.arange(N_ang // 2 + 1)
    lam = (2.0 - 2.0 * np.cos(2 * np.pi * m / N_ang)) / ht**2
    # (h_{i-1} - 2h_i + h_{i+1}) / hu^2 - lam h_i = 0
    diag = np.broadcast_to(-(2.0 + lam * hu**2), (N_rad - 1, m.size)).astype(complex)
    rhs = np.zeros((N_rad - 1, m.size), dtype=complex)
    rhs[0] -= np.fft.rfft(h_lo)
    rhs[-1] -= np.fft.rfft(h_hi)
    inner = _thomas(1.0, diag, 1.0, rhs)
    h = np.empty((N_rad + 1, N_ang))
    h[0], h[-1] = h_lo, h_hi
    h[1:-1] = np.fft.irfft(inner, n=N_ang, axis=1)

    lap = (
        (h[:-2, :] - 2 * h[1:-1, :] + h[2:, :]) / hu**2
        + (np.roll(h[1:-1], 1, axis=1) - 2 * h[1:-1] + np.roll(h[1:-1], -1, axis=1)) / ht**2
    )
    residual = float(np.abs(lap).max() * min(hu, ht) ** 2 / max(np.abs(h).max(), 1.0))
    if residual > tol:
        raise ConvergenceError(f"FD residual {residual:.3e} above {tol:g}", best=h)
    w = np.exp(u[:, None] + 1j * theta[None, :])
    with np.errstate(divide="ignore"):
        g = h + np.log(np.abs(w - 1))
    g[~np.isfinite(g)] = np.nan
    return FDField(spec, u, theta, g, residual)


@dataclass(frozen=True)
class FDComparison:
    max_deviation: float
    points: int
    argmax_w: complex


def compare_fd(field: FDField, min_pole_distance: float = 0.1, eps: float = DEFAULT_EPS) -> FDComparison:
    """max |fd - series| over interior grid points with |w - 1| >= min_pole_distance."""
    w = field.w[1:-1]
    mask = np.abs(w - 1) >= min_pole_distance
    series, _, _ = green_array(w[mask], field.spec, eps)
    dev = np.abs(field.g[1:-1][mask] - series)
    i = int(np.argmax(dev))
    return FDComparison(float(dev[i]), int(mask.sum()), complex(w[mask][i]))


def multipole_bound(m: int, t: float, ambient_dim: int) -> float:
    """c(2) m^(1 - 1/N) log t, for annuli with t^m > 2."""
    if ambient_dim < 2:
        raise ValueError("ambient dimension must be at least 2")
    if not (m >= 1 and t > 1 and m * math.log(t) > math.log(2.0)):
        raise DomainError(f"need t^m > 2, got t = {t}, m = {m}")
    return circle_bound_constant(2.0) * m ** (1.0 - 1.0 / ambient_dim) * math.log(t)
