"""Associated functions and the scale sequences t_n, theta_f(n).

For a norm sequence M_j the associated function is

    tau(r) = inf_j M_j / r^j,

and ``-log tau`` is the upper envelope of the lines ``j log r - log M_j``, a
convex piecewise-linear function of ``log r``.  The scales are

    log t_n       = min_{1 <= r <= n}  -log(r^3 tau(r)) / r
    log theta(n)  = min_{1 <= r <= n}  -log(tau~(r)) / r,   tau~ from M_{j+3}.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .circle_functions import NormSequence, normalize_norms
from .errors import DegenerateError, PluripolarError

DEFAULT_GRID_DENSITY = 64
CAVEAT = "asymptotic property, desk-scale evidence only"
SLOPE_THRESHOLD = 0.05
BOUNDED_CAP = 1.0
# consecutive log-ratios that move less than this over the upper half are "flat"
_PLATEAU_TOL = 1e-6


@dataclass(frozen=True)
class TauValue:
    log_value: float
    argmin: int
    truncated: bool = False
    degenerate: bool = False

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value > -745 else 0.0


def log_ratios(M: NormSequence) -> np.ndarray:
    lv = M.log_values
    with np.errstate(invalid="ignore"):
        return np.diff(lv)


def degeneracy_radius(M: NormSequence) -> float | None:
    """Radius R beyond which tau vanishes, or None if M grows superexponentially.

    A sequence whose consecutive log-ratios have stopped increasing over the
    upper half of the available range is treated as M_0 R^j-like: the
    trigonometric-polynomial case.
    """
    lv = M.log_values
    if np.any(np.isneginf(lv[1:])):
        return 0.0 if np.all(np.isneginf(lv[1:])) else None
    if lv.size < 3:
        return None
    q = log_ratios(M)
    tail = q[(q.size - 1) // 2 :]
    if tail[-1] - tail[0] < _PLATEAU_TOL * max(1.0, abs(tail[-1])):
        return math.exp(float(tail.max()))
    return None


def certified_radius(M: NormSequence) -> float:
    """Largest r for which the finite sequence gives tau exactly."""
    q = log_ratios(M)
    if not q.size:
        return 1.0
    return math.exp(float(q[-1])) if q[-1] < 709 else math.inf


def _lower_hull(lv: np.ndarray) -> list[int]:
    """Indices of the lower convex hull of the points (j, lv[j])."""
    hull: list[int] = []
    for j in range(lv.size):
        if not np.isfinite(lv[j]):
            continue
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above the chord a -> j
            if (lv[b] - lv[a]) * (j - a) >= (lv[j] - lv[a]) * (b - a):
                hull.pop()
            else:
                break
        hull.append(j)
    return hull


def neg_log_tau_pieces(M: NormSequence, u_max: float):
    """Linear pieces (u0, u1, j, log M_j) of -log tau(e^u) = max_j (j u - log M_j) on [0, u_max]."""
    lv = M.log_values
    hull = _lower_hull(lv)
    slopes = [lv[b] - lv[a] for a, b in zip(hull, hull[1:])]
    # on a hull edge of slope s spanning indices a < b, line j = a is active for u < s / (b - a)
    pieces = []
    start = 0.0
    for (a, b), s in zip(zip(hull, hull[1:]), slopes):
        brk = s / (b - a)
        if brk > start:
            end = min(brk, u_max)
            pieces.append((start, end, a, lv[a]))
            start = end
        if start >= u_max:
            return pieces
    if start < u_max:
        pieces.append((start, u_max, hull[-1], lv[hull[-1]]))
    return pieces


def _log_tau_grid(lv: np.ndarray, log_r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(lv.size, dtype=float)
    vals = lv[None, :] - j[None, :] * log_r[:, None]
    idx = np.argmin(vals, axis=1)
    return vals[np.arange(log_r.size), idx], idx


def tau(M: NormSequence, r: float) -> TauValue:
    """tau(r) = inf_{0<=j<=J} M_j / r^j, with truncation/degeneracy flags."""
    if not r > 0:
        raise ValueError("r must be positive")
    R = degeneracy_radius(M)
    if R is not None and r > R * (1 + 1e-12):
        return TauValue(-math.inf, M.jmax, degenerate=True)
    log_val, idx = _log_tau_grid(M.log_values, np.array([math.log(r)]))
    j = int(idx[0])
    truncated = R is None and j == M.jmax and math.log(r) > log_ratios(M)[-1]
    return TauValue(float(log_val[0]), j, truncated=truncated)


def shifted_tau(M: NormSequence, r: float) -> TauValue:
    """tau~(r) = inf_{s>=0} M_{s+3} / r^s."""
    return tau(M.shifted(3), r)


def _phi_factory(lv: np.ndarray, cube: bool):
    def phi(log_r):
        log_r = np.atleast_1d(np.asarray(log_r, dtype=float))
        lt, _ = _log_tau_grid(lv, log_r)
        num = lt + (3.0 * log_r if cube else 0.0)
        return -num / np.exp(log_r)

    return phi


def _minimize_scale(M: NormSequence, n: float, grid_density: int, cube: bool):
    if n < 1:
        raise ValueError("n must be >= 1")
    R = degeneracy_radius(M)
    if R is not None and n > R * (1 + 1e-12):
        raise DegenerateError(
            f"analytic-degenerate: tau vanishes beyond r = {R:.6g} < n = {n:g}"
        )
    lv = M.log_values
    phi = _phi_factory(lv, cube)
    top = math.log(n)
    if top == 0.0:
        return float(phi(0.0)[0]), 1.0
    count = max(2, int(math.ceil(grid_density * top / math.log(10.0))) + 1)
    grid = np.linspace(0.0, top, count)
    vals = phi(grid)
    i = int(np.argmin(vals))
    best, best_x = float(vals[i]), float(grid[i])
    if 0 < i < count - 1:
        lo, hi = grid[i - 1], grid[i + 1]
        try:
            res = optimize.minimize_scalar(
                lambda x: float(phi(x)[0]), bracket=(lo, grid[i], hi), method="golden",
                options={"xtol": 1e-12},
            )
        except ValueError:
            # tied grid values make the golden bracket invalid
            res = optimize.minimize_scalar(
                lambda x: float(phi(x)[0]), bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-12},
            )
        if res.fun < best and lo <= res.x <= hi:
            best, best_x = float(res.fun), float(res.x)
    else:
        # boundary minimum: refine within the end cell, keeping the endpoint as a candidate
        lo, hi = (grid[0], grid[1]) if i == 0 else (grid[-2], grid[-1])
        res = optimize.minimize_scalar(
            lambda x: float(phi(x)[0]), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12},
        )
        if res.fun < best:
            best, best_x = float(res.fun), float(res.x)
    # phi need not be unimodal; its exact candidates catch minima the grid straddles
    value, x = _exact_candidates(M, top, 3.0 if cube else 0.0)
    if value < best:
        best, best_x = value, x
    return best, math.exp(best_x)


def _exact_candidates(M: NormSequence, top: float, c: float) -> tuple[float, float]:
    """Minimum of phi over its exact candidates in [0, top].

    On the piece where line j = v is active, phi(u) = ((v - c) u - log M_v) / e^u
    with one stationary point u = 1 + log M_v / (v - c); the minimum sits there,
    at a kink, or at an endpoint.
    """
    best, best_x = math.inf, 0.0
    for u0, u1, v, lm in neg_log_tau_pieces(M, top):
        cands = [u0, u1]
        if v != c:
            u_star = 1.0 + lm / (v - c)
            if u0 < u_star < u1:
                cands.append(u_star)
        for u in cands:
            value = ((v - c) * u - lm) * math.exp(-u)
            if value < best:
                best, best_x = value, u
    return best, best_x


def log_tn(M: NormSequence, n: float, grid_density: int = DEFAULT_GRID_DENSITY):
    """(log t_n, minimizing r): min of -log(r^3 tau(r))/r over 1 <= r <= n."""
    return _minimize_scale(M, n, grid_density, cube=True)


def log_theta(M: NormSequence, n: float, grid_density: int = DEFAULT_GRID_DENSITY) -> float:
    """log theta_f(n): min of -log(tau~(r))/r over 1 <= r <= n."""
    return _minimize_scale(M.shifted(3), n, grid_density, cube=False)[0]


@dataclass(frozen=True)
class ScaleRow:
    n: int
    log_tn: float
    log_theta_n: float
    sqrtn_log_tn: float
    minimizing_r: float
    dim_diag: float | None = None


CSV_HEADER = ("n", "log_tn", "log_theta_n", "sqrtn_log_tn", "minimizing_r")


@dataclass
class ScaleTable:
    rows: list[ScaleRow]
    normalization: float = 1.0
    max_j: int = 0
    grid_density: int = DEFAULT_GRID_DENSITY
    dim: int | None = None
    truncated: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def n(self) -> np.ndarray:
        return np.array([row.n for row in self.rows], dtype=float)

    def diagnostic(self) -> np.ndarray:
        """n^(1 - 1/(N+1)) log t_n; the sqrt(n) column when no dimension is set."""
        if self.dim is None:
            return np.array([row.sqrtn_log_tn for row in self.rows])
        return np.array([row.dim_diag for row in self.rows])

    @property
    def diagnostic_exponent(self) -> float:
        return 0.5 if self.dim is None else 1.0 - 1.0 / (self.dim + 1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = list(CSV_HEADER)
        if self.dim is not None:
            header.append("dim_diag")
        writer.writerow(header)
        for row in self.rows:
            line = [row.n, repr(row.log_tn), repr(row.log_theta_n), repr(row.sqrtn_log_tn),
                    repr(row.minimizing_r)]
            if self.dim is not None:
                line.append(repr(row.dim_diag))
            writer.writerow(line)
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [
            "scale table",
            f"  normalization factor: {self.normalization:.6g}",
            f"  max j used: {self.max_j}",
            f"  grid density: {self.grid_density} per decade",
        ]
        if self.dim is not None:
            lines.append(f"  target dimension N: {self.dim} (exponent {self.diagnostic_exponent:.4f})")
        if self.truncated:
            lines.append("  WARNING: some rows exceed the certified j-range (upper bounds only)")
        lines += [f"  note: {note}" for note in self.notes]
        lines.append(f"  {'n':>8} {'log t_n':>14} {'log theta_n':>14} {'sqrt(n) log t_n':>16} {'r*':>12}")
        for row in self.rows:
            lines.append(
                f"  {row.n:>8d} {row.log_tn:>14.6e} {row.log_theta_n:>14.6e} "
                f"{row.sqrtn_log_tn:>16.6e} {row.minimizing_r:>12.5g}"
            )
        return "\n".join(lines)


def build_scale_table(
    M: NormSequence,
    n_list,
    grid_density: int = DEFAULT_GRID_DENSITY,
    dim: int | None = None,
) -> ScaleTable:
    """Rows of log t_n, log theta_n and the divergence diagnostics.

    The sequence is normalized to M_3 < 1/2 first; the factor is recorded.
    With ``dim`` = N the extra column n^(1-1/(N+1)) log t_n is filled.
    """
    Mn, factor = normalize_norms(M)
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    rows = []
    for n in n_list:
        lt, r_star = log_tn(Mn, n, grid_density)
        lth = log_theta(Mn, n, grid_density)
        diag = None
        if dim is not None:
            diag = n ** (1.0 - 1.0 / (dim + 1)) * lt
        rows.append(ScaleRow(n, lt, lth, math.sqrt(n) * lt, r_star, diag))
    truncated = bool(n_list) and max(n_list) > certified_radius(Mn)
    notes = []
    if truncated:
        notes.append(f"tau exact only for r <= {certified_radius(Mn):.6g}")
    return ScaleTable(rows, factor, Mn.jmax, grid_density, dim, truncated, notes)


@dataclass(frozen=True)
class GrowthVerdict:
    verdict: str
    slope: float
    caveat: str = CAVEAT


def growth_verdict(table: ScaleTable) -> GrowthVerdict:
    """Heuristic stand-in for the limsup of the scale diagnostic.

    Fits the slope of log(diagnostic) against log n over the last half of the
    rows.  ``diverges``: slope >= 0.05 and last value above the first.
    ``bounded``: slope <= -0.05, or the tail is strictly decreasing below 1.
    """
    n = table.n
    if n.size < 4:
        raise PluripolarError("growth verdict needs at least 4 rows")
    if n[-1] / n[0] < 100:
        raise PluripolarError("growth verdict needs rows spanning at least 2 decades")
    d = table.diagnostic()
    if np.any(d <= 0):
        return GrowthVerdict("inconclusive", math.nan)
    half = n.size // 2
    tail = d[half:]
    slope = float(np.polyfit(np.log(n[half:]), np.log(tail), 1)[0])
    if slope >= SLOPE_THRESHOLD and d[-1] > d[0]:
        return GrowthVerdict("diverges", slope)
    if slope <= -SLOPE_THRESHOLD or (np.all(np.diff(tail) < 0) and tail.max() < BOUNDED_CAP):
        return GrowthVerdict("bounded", slope)
    return GrowthVerdict("inconclusive", slope)
