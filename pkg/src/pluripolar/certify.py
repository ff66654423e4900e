"""Pluripolarity evidence for graphs of circle functions.

Two routes are tried.  The Bernstein route looks for a subsequence n_k with
E_{n_k}(f) <= c^{n_k}, c < 1, and checks the witness inequalities for
v_k(z, w) = log|w - p_{n_k}(z)| / n_k.  The smooth route builds the scale
table and tests divergence of n^(1-1/(N+1)) log t_n, then classifies the
class of f by a Gevrey fit and the Denjoy-Carleman integral.

Nothing here is a proof: every certificate carries the caveat that
asymptotic criteria were checked at desk scale.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import qmc

from . import circle_functions as cf
from . import quasi_tests as qt
from . import trig_interp as ti
from .annulus_potential import multipole_bound
from .circle_functions import CoefficientRule, NormSequence
from .errors import DegenerateError, PluripolarError
from .growth_scales import (
    ScaleTable,
    build_scale_table,
    certified_radius,
    degeneracy_radius,
    growth_verdict,
    log_tn,
)

DESK_SCALE_CAVEAT = "asymptotic criteria checked at desk scale"
SAMPLING_CAVEAT = "interpolant bounds checked for sampled z0 only"
GEVREY_FIT_CAP = 1.95
WITNESS_TOL = 1e-9
DEFAULT_BOX_SAMPLES = 10_000
DEFAULT_SEED = 20240611
SYNTHETIC_N_MAX = 1e7
COMPUTED_N_MAX = 1e4
DEFAULT_INTERP_N = (16, 64, 256)


@dataclass
class Certificate:
    route: str
    verdict: str
    scale_table: ScaleTable | None = None
    interp_evidence: list[dict] = field(default_factory=list)
    bernstein_evidence: list[dict] = field(default_factory=list)
    caveats: list[str] = field(default_factory=lambda: [DESK_SCALE_CAVEAT])
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if DESK_SCALE_CAVEAT not in self.caveats:
            self.caveats.insert(0, DESK_SCALE_CAVEAT)

    def to_dict(self) -> dict:
        table = None
        if self.scale_table is not None:
            t = self.scale_table
            table = {
                "normalization": t.normalization,
                "max_j": t.max_j,
                "grid_density": t.grid_density,
                "dim": t.dim,
                "diagnostic_exponent": t.diagnostic_exponent,
                "truncated": t.truncated,
                "rows": [vars(row) for row in t.rows],
            }
        return _plain({
            "route": self.route,
            "verdict": self.verdict,
            "caveats": self.caveats,
            "scale_table": table,
            "interp_evidence": self.interp_evidence,
            "bernstein_evidence": self.bernstein_evidence,
            "details": self.details,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)

    def to_text(self) -> str:
        lines = [f"route: {self.route}", f"verdict: {self.verdict}"]
        lines += [f"caveat: {c}" for c in self.caveats]
        for key in sorted(self.details):
            lines.append(f"{key}: {_plain(self.details[key])}")
        if self.bernstein_evidence:
            lines.append("bernstein evidence (n, lower, upper, upper_root):")
            for row in self.bernstein_evidence:
                lines.append(f"  {row['n']:>6d} {row['lower']:.6e} {row['upper']:.6e} {row['upper_root']:.6f}")
        if self.scale_table is not None:
            lines.append(self.scale_table.to_text())
        if self.interp_evidence:
            lines.append("interpolation evidence:")
            keys = list(self.interp_evidence[0])
            lines.append("  " + " ".join(f"{k:>14}" for k in keys))
            for row in self.interp_evidence:
                lines.append("  " + " ".join(f"{_short(row[k]):>14}" for k in keys))
        return "\n".join(lines)


def _short(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _plain(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else repr(value)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# -- Bernstein route -------------------------------------------------------


def _tail_coefficients(rule: CoefficientRule, n: int, eps: float):
    """(coefficients c_{-K}..c_K with |k| <= n zeroed, certified remainder)."""
    K = max(n + 1, cf.truncation_index(rule, eps))
    c = cf.coefficient_array(rule, K)
    c[K - n : K + n + 1] = 0
    return c, cf.tail_bound(rule, K)


def certify_bernstein(
    rule: CoefficientRule,
    n_list=qt.DEFAULT_BERNSTEIN_N,
    sample_m: int = 512,
    box_samples: int = DEFAULT_BOX_SAMPLES,
    seed: int = DEFAULT_SEED,
    delta: float = qt.BERNSTEIN_DELTA,
) -> Certificate:
    """Bernstein route: a geometric subsequence of E_n plus witness checks."""
    cf._require_pointwise(rule)
    if rule.is_trig_polynomial:
        return Certificate(
            "none", "degenerate-analytic",
            details={"reason": "trigonometric polynomial: E_n = 0 for n >= degree"},
        )
    s = cf.abs_coefficient_sum(rule)
    factor = min(1.0, 0.5 / s)
    work = replace(rule, scale=rule.scale * factor)
    verdict = qt.bernstein_verdict(work, n_list, delta)
    details = {"sup_norm_rescale": factor, "bernstein": verdict.summary}
    evidence = verdict.evidence
    if verdict.verdict != "yes":
        return Certificate("none", "no-evidence", bernstein_evidence=evidence, details=details)

    c = verdict.summary["c"]
    sub = verdict.summary["subsequence"]
    z_circ = np.exp(2j * np.pi * (np.arange(sample_m) + 0.5) / sample_m)
    sampler = qmc.Halton(d=4, scramble=True, seed=seed)
    u = sampler.random(box_samples)
    z_box = np.exp(math.log(4.0) * (2 * u[:, 0] - 1) + 2j * np.pi * u[:, 1])
    w_box = 2.0 * np.sqrt(u[:, 2]) * np.exp(2j * np.pi * u[:, 3])
    V = np.abs(np.log(np.abs(z_box)))
    witness = []
    for n in sub:
        upper = next(row["upper"] for row in evidence if row["n"] == n)
        tail_c, rem = _tail_coefficients(work, n, 1e-3 * upper)
        diff = np.abs(cf.eval_laurent(tail_c, z_circ)) + rem  # |f - p_n| on the circle
        v_graph = float(np.log(diff.max()) / n)
        p = cf.coefficient_array(work, n)
        with np.errstate(divide="ignore"):
            v_box = np.log(np.abs(w_box - cf.eval_laurent(p, z_box))) / n
            rhs = np.maximum(V, np.log(np.abs(w_box)) / n) + math.log(2.0) / n
        excess = float(np.max(v_box - rhs))
        witness.append({
            "n": n,
            "graph_v_max": v_graph,
            "log_c": math.log(c),
            "graph_ok": v_graph <= math.log(c) + WITNESS_TOL,
            "box_excess_max": excess,
            "box_ok": excess <= WITNESS_TOL,
        })
    details.update({"c": c, "subsequence": sub, "witness": witness, "seed": seed,
                    "box_samples": box_samples, "sample_m": sample_m})
    ok = all(row["graph_ok"] and row["box_ok"] for row in witness)
    cert = Certificate(
        "bernstein" if ok else "none",
        "pluripolar-evidence" if ok else "no-evidence",
        bernstein_evidence=evidence,
        details=details,
    )
    if not ok:
        cert.caveats.append("witness inequalities failed at some samples")
    return cert


# -- smooth route ----------------------------------------------------------


def default_n_list(M: NormSequence, n_max: float) -> list[int]:
    """Half-decade points 10, 31, 100, ... up to min(n_max, certified radius)."""
    top = min(n_max, certified_radius(M))
    out = []
    k = 2
    while 10 ** (k / 2) <= top * (1 + 1e-12):
        out.append(int(round(10 ** (k / 2))))
        k += 1
    return out


def _norms_for(rule: CoefficientRule, n_max: float) -> NormSequence:
    if rule.is_trig_polynomial:
        raise DegenerateError("trigonometric polynomial: the scales t_n are infinite")
    M = cf.norm_sequence(rule, r_max=None if rule.is_synthetic else n_max)
    if degeneracy_radius(M) is not None:
        raise DegenerateError("analytic-degenerate norm sequence")
    return M


def _classify(M: NormSequence) -> dict:
    """Gevrey exponent fit and the two quasianalyticity tests on the fitted class."""
    info: dict = {}
    p = qt.fit_gevrey_exponent(M)
    info["gevrey_fit_exponent"] = p
    series_verdict = None
    if p < GEVREY_FIT_CAP:
        _, sv = qt.gevrey_series(qt.power_weight(max(p, 1.0)))
        series_verdict = sv.verdict
        info["gevrey_series_verdict"] = sv.verdict
    r_top = min(1e4, certified_radius(M))
    denjoy = None
    if r_top >= 100:
        R = 10.0 ** math.floor(math.log10(r_top) + 1e-12)
        _, dv = qt.denjoy_carleman(M, R)
        denjoy = dv.verdict
        info["denjoy_verdict"] = dv.verdict
        info["denjoy_R_max"] = R
        info["denjoy_evidence"] = dv.evidence
    info["quasianalytic"] = denjoy == "yes" or (denjoy is None and series_verdict == "yes")
    info["_p"] = p
    return info


def _smooth_from_norms(
    M: NormSequence,
    n_list,
    dim: int,
    pointwise: CoefficientRule | None,
    interp_n,
    z0_samples: int,
    normalization_note: float = 1.0,
) -> Certificate:
    table = build_scale_table(M, n_list, dim=None if dim == 1 else dim)
    if dim == 1:
        table.dim = None
    growth = growth_verdict(table)
    info = _classify(M)
    p = info.pop("_p")
    details = {
        "growth_verdict": growth.verdict,
        "growth_slope": growth.slope,
        "diagnostic_exponent": table.diagnostic_exponent,
        "target_dimension": dim,
        "normalization": table.normalization * normalization_note,
        **info,
    }
    caveats = [DESK_SCALE_CAVEAT, growth.caveat]
    if table.truncated:
        caveats.append("scale rows beyond the certified j-range are upper bounds")

    Mn = M.scaled(table.normalization)
    interp = []
    if growth.verdict == "diverges":
        n_cap = min(certified_radius(Mn), max(n_list))
        ns = [n for n in interp_n if n <= n_cap]
        if pointwise is not None and ns:
            z0s = ti.default_z0_list(z0_samples)
            scan = ti.uniform_bound_scan(pointwise, ns, z0s, M=Mn)
            interp = [vars(row) for row in scan.rows]
        else:
            for n in ns:
                lt, _ = log_tn(Mn, n)
                interp.append({"n": n, "log_tn": lt, "er_bound": ti.er_bound(Mn, n, math.exp(lt))})
            caveats.append("synthetic norms: interpolation evidence is the bound shape S(n, t_n) only")
        caveats.append(SAMPLING_CAVEAT)
        multipole = []
        for row in table.rows:
            if row.log_tn > 0 and row.n * row.log_tn > math.log(2.0):
                multipole.append([row.n, multipole_bound(row.n, math.exp(row.log_tn), dim + 1)])
        details["multipole_bounds"] = multipole

    quasi = info["quasianalytic"]
    if growth.verdict == "diverges":
        verdict = "pluripolar-evidence"
        if quasi:
            route = "denjoy"
        elif p < GEVREY_FIT_CAP:
            route = "gevrey"
            details["gevrey_weight"] = f"j^{max(p, 1.0):.4g}"
        else:
            route = "none"
            caveats.append("diverging scales without a quasianalytic or Gevrey classification")
    elif quasi:
        route, verdict = "denjoy", "pluripolar-evidence"
        caveats.append("scale diagnostic did not diverge at desk scale; evidence rests on the Denjoy test")
    else:
        route, verdict = "none", "no-evidence"
    return Certificate(route, verdict, table, interp, caveats=caveats, details=details)


def certify_smooth(
    rule: CoefficientRule,
    n_list=None,
    z0_samples: int = 4,
    interp_n=DEFAULT_INTERP_N,
) -> Certificate:
    """Smooth route for one function (pointwise or synthetic)."""
    n_max = SYNTHETIC_N_MAX if rule.is_synthetic else COMPUTED_N_MAX
    M = _norms_for(rule, n_max)
    n_list = default_n_list(M, n_max) if n_list is None else list(n_list)
    return _smooth_from_norms(M, n_list, 1, None if rule.is_synthetic else rule, interp_n, z0_samples)


def combined_norms(rules) -> NormSequence:
    """M_j = max over components, on the common j-range."""
    seqs = []
    for rule in rules:
        n_max = SYNTHETIC_N_MAX if rule.is_synthetic else COMPUTED_N_MAX
        seqs.append(_norms_for(rule, n_max))
    J = min(M.jmax for M in seqs)
    lv = np.max(np.stack([M.log_values[: J + 1] for M in seqs]), axis=0)
    rel = max(M.certified_rel_err for M in seqs)
    return NormSequence(lv, rel, "combined")


def certify_vector(rules, n_list=None, z0_samples: int = 4) -> Certificate:
    """Smooth route for f = (f_1, ..., f_N) with diagnostic exponent 1 - 1/(N+1)."""
    rules = list(rules)
    if not rules:
        raise ValueError("need at least one component")
    if len(rules) == 1:
        return certify_smooth(rules[0], n_list, z0_samples)
    M = combined_norms(rules)
    n_max = SYNTHETIC_N_MAX if all(r.is_synthetic for r in rules) else COMPUTED_N_MAX
    n_list = default_n_list(M, n_max) if n_list is None else list(n_list)
    cert = _smooth_from_norms(M, n_list, len(rules), None, (), z0_samples)
    cert.details["components"] = len(rules)
    return cert


def certify(
    rules,
    n_list=None,
    bernstein_n=qt.DEFAULT_BERNSTEIN_N,
    seed: int = DEFAULT_SEED,
    box_samples: int = DEFAULT_BOX_SAMPLES,
    sample_m: int = 512,
    z0_samples: int = 4,
) -> Certificate:
    """Bernstein route first, then the smooth route; the first success wins."""
    if isinstance(rules, CoefficientRule):
        rules = [rules]
    rules = list(rules)
    if len(rules) == 1 and rules[0].is_trig_polynomial:
        return Certificate(
            "none", "degenerate-analytic",
            details={"reason": "trigonometric polynomial: the scales t_n are infinite and E_n = 0"},
        )
    bern = None
    if len(rules) == 1 and not rules[0].is_synthetic:
        bern = certify_bernstein(rules[0], bernstein_n, sample_m, box_samples, seed)
        if bern.verdict != "no-evidence":
            return bern
    try:
        smooth = certify_vector(rules, n_list, z0_samples)
    except DegenerateError as exc:
        return Certificate("none", "degenerate-analytic", details={"reason": str(exc)})
    except PluripolarError as exc:
        if bern is None:
            raise
        bern.caveats.append(f"smooth route unavailable: {exc}")
        return bern
    if bern is not None:
        smooth.details["bernstein_route"] = bern.details.get("bernstein")
        smooth.bernstein_evidence = bern.bernstein_evidence
    return smooth
