"""Command-line front end.

    python -m pluripolar <command> [CONFIG.yaml] [--out DIR] [flags]

A config file is a flat YAML mapping.  Function parameters may be given
either under ``params`` or at the top level (``rho: 0.5``).  Command-line
flags override the file.  Every run writes ``manifest.json`` (all resolved
knobs, no timestamps), its CSV tables and ``summary.txt``.

Exit status: 0 on success, 2 when the input is analytic-degenerate
(a trigonometric polynomial), 1 on any other error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import annulus_potential as ap
from . import certify as ce
from . import circle_functions as cf
from . import growth_scales as gs
from . import quasi_tests as qt
from . import trig_interp as ti
from .errors import DegenerateError, PluripolarError

COMMANDS = ("analyze", "scales", "quasitest", "interp", "green", "certify")
NOTIONS = ("bernstein", "denjoy", "gevrey")
FUNCTION_KEYS = {"family", "params", "scale", "name"}
PARAM_NAMES = set().union(*cf.PARAM_KEYS.values())
EXIT_OK, EXIT_ERROR, EXIT_DEGENERATE = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    function: dict | None = None
    components: list[dict] = field(default_factory=list)
    output: str = "pluripolar-out"
    eps: float = cf.DEFAULT_EPS
    eps_rel: float = cf.DEFAULT_EPS_REL
    n_list: list[int] | None = None
    nmax: float = 1e4
    grid_density: int = gs.DEFAULT_GRID_DENSITY
    jmax: int | None = None
    notion: str = "bernstein"
    gevrey_exponent: float | None = None
    R_max: float | None = None
    n: int = 16
    z0_arg: float | None = None
    t: float | None = None
    r: float = 2.0
    a: float | None = None
    compare_fd: bool = False
    fd_grid: int = 512
    circle_samples: int = 256
    dim: int | None = None
    seed: int = ce.DEFAULT_SEED
    box_samples: int = ce.DEFAULT_BOX_SAMPLES
    sample_m: int = 512
    z0_samples: int = 4

    def knobs(self) -> dict:
        return asdict(self)


_SCALAR_KEYS = {
    name for name in RunConfig.__dataclass_fields__ if name not in ("function", "components", "command")
}
_INT_KEYS = {"grid_density", "jmax", "n", "fd_grid", "circle_samples", "dim", "seed",
             "box_samples", "sample_m", "z0_samples"}
_FLOAT_KEYS = {"eps", "eps_rel", "nmax", "gevrey_exponent", "R_max", "z0_arg", "t", "r", "a"}


class ConfigError(PluripolarError, ValueError):
    """Malformed or out-of-range run configuration."""


def _function_block(raw: dict, where: str) -> dict:
    """Collect a function description, folding flat parameter keys into ``params``."""
    block = {k: raw[k] for k in FUNCTION_KEYS if k in raw}
    params = dict(block.get("params") or {})
    for key in PARAM_NAMES:
        if key in raw:
            if key in params:
                raise ConfigError(f"{where}: parameter {key!r} given twice")
            params[key] = raw[key]
    if params:
        block["params"] = params
    return block


def parse_config(source, overrides: dict | None = None) -> RunConfig:
    """Validate a config (path or mapping) plus command-line overrides."""
    if source is None:
        raw = {}
    elif isinstance(source, dict):
        raw = dict(source)
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config document: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config document must be a mapping")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})

    allowed = _SCALAR_KEYS | FUNCTION_KEYS | PARAM_NAMES | {"components", "command"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(map(str, unknown))}")
    command = raw.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")

    kwargs = {k: raw[k] for k in _SCALAR_KEYS if k in raw}
    for key in _INT_KEYS & kwargs.keys():
        kwargs[key] = _as_int(key, kwargs[key])
    for key in _FLOAT_KEYS & kwargs.keys():
        kwargs[key] = _as_float(key, kwargs[key])
    if "compare_fd" in kwargs:
        kwargs["compare_fd"] = bool(kwargs["compare_fd"])
    if "output" in kwargs:
        kwargs["output"] = str(kwargs["output"])
    if "n_list" in kwargs:
        n_list = [_as_int("n_list", n) for n in kwargs["n_list"]]
        if any(b <= a for a, b in zip(n_list, n_list[1:])):
            raise ConfigError(f"n_list must be strictly increasing, got {n_list}")
        if any(n < 1 for n in n_list):
            raise ConfigError("n_list entries must be positive")
        kwargs["n_list"] = n_list

    function = _function_block(raw, "config") if "family" in raw or raw.keys() & PARAM_NAMES else None
    components = []
    for i, comp in enumerate(raw.get("components") or []):
        if not isinstance(comp, dict):
            raise ConfigError(f"components[{i}] must be a mapping")
        bad = sorted(set(comp) - FUNCTION_KEYS - PARAM_NAMES)
        if bad:
            raise ConfigError(f"components[{i}]: unknown key(s): {', '.join(bad)}")
        components.append(_function_block(comp, f"components[{i}]"))
    config = RunConfig(command=command, function=function, components=components, **kwargs)
    _check_ranges(config)
    # build the rules now so that family/parameter errors surface as config errors
    _rules(config)
    return config


def _as_int(key, value) -> int:
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key!r} must be an integer, got {value!r}") from None
    if out != float(value):
        raise ConfigError(f"{key!r} must be an integer, got {value!r}")
    return out


def _as_float(key, value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key!r} must be a number, got {value!r}") from None


def _check_ranges(c: RunConfig):
    if not c.eps > 0 or not c.eps_rel > 0:
        raise ConfigError("eps and eps_rel must be positive")
    if c.nmax < 10:
        raise ConfigError("nmax must be at least 10")
    if c.n < 1:
        raise ConfigError("n must be at least 1")
    if c.t is not None and not c.t > 1:
        raise ConfigError("t must exceed 1")
    if not c.r > 1:
        raise ConfigError("r must exceed 1")
    if c.a is not None and not 1 < c.a <= c.r:
        raise ConfigError("need 1 < a <= r")
    if c.notion not in NOTIONS:
        raise ConfigError(f"notion must be one of {NOTIONS}")
    if c.dim is not None and c.dim < 1:
        raise ConfigError("dim must be at least 1")
    if c.fd_grid < 64:
        raise ConfigError("fd_grid must be at least 64")
    if c.grid_density < 4:
        raise ConfigError("grid_density must be at least 4")
    if c.command != "green" and c.function is None and not c.components:
        raise ConfigError(f"command {c.command!r} needs a function description (family, params)")
    if c.components and c.dim is not None and c.dim != len(c.components):
        raise ConfigError(f"dim = {c.dim} but {len(c.components)} components were given")


def _rules(c: RunConfig) -> list[cf.CoefficientRule]:
    blocks = c.components or ([c.function] if c.function else [])
    try:
        rules = [cf.make_rule(block) for block in blocks]
    except PluripolarError as exc:
        raise ConfigError(str(exc)) from None
    if c.jmax is not None:
        rules = [
            r if not r.is_synthetic else _truncate_synthetic(r, c.jmax) for r in rules
        ]
    return rules


def _truncate_synthetic(rule, jmax):
    return replace(rule, norms=rule.norms.truncated(jmax))


# -- outputs ---------------------------------------------------------------


class Outputs:
    def __init__(self, root: Path):
        self.root = root
        self.files: list[str] = []
        root.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str):
        (self.root / name).write_text(text)
        self.files.append(name)


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _n_list(c: RunConfig, M: cf.NormSequence | None = None) -> list[int]:
    if c.n_list is not None:
        return c.n_list
    top = c.nmax if M is None else min(c.nmax, gs.certified_radius(M))
    out, k = [], 2
    while 10 ** (k / 2) <= top * (1 + 1e-12):
        out.append(int(round(10 ** (k / 2))))
        k += 1
    return out


def _norms(c: RunConfig, rule, r_max=None) -> cf.NormSequence:
    if rule.is_synthetic:
        return cf.norm_sequence(rule, c.jmax)
    return cf.norm_sequence(rule, c.jmax, c.eps_rel, r_max=r_max)


def run_analyze(c, rules, out) -> tuple[int, list[str]]:
    summary = []
    for i, rule in enumerate(rules):
        tag = f"_{i}" if len(rules) > 1 else ""
        M = _norms(c, rule, r_max=c.nmax)
        out.write(f"norms{tag}.csv", _csv(["j", "log_M_j"], enumerate(M.log_values)))
        summary.append(f"function{tag}: {json.dumps(rule.describe(), sort_keys=True)}")
        summary.append(f"  norms computed: M_0..M_{M.jmax} (relative error <= {M.certified_rel_err:.2e})")
        bad = M.violations()
        summary.append(f"  monotone/log-convex: {'yes' if not bad else '; '.join(bad[:5])}")
        _, factor = cf.normalize_norms(M)
        summary.append(f"  normalization factor to M_3 < 1/2: {factor:.6g}")
        if not rule.is_synthetic:
            K = cf.truncation_index(rule, c.eps)
            summary.append(f"  truncation index for eps={c.eps:g}: K = {K}")
            summary.append(f"  sup-norm bound sum |c_k|: {cf.abs_coefficient_sum(rule):.12g}")
        R = gs.degeneracy_radius(M)
        if R is not None:
            summary.append(f"  analytic-degenerate: tau vanishes beyond r = {R:.6g}")
            return EXIT_DEGENERATE, summary
    return EXIT_OK, summary


def run_scales(c, rules, out):
    rule = rules[0]
    M = _norms(c, rule, r_max=c.nmax)
    R = gs.degeneracy_radius(M)
    if R is not None:
        raise DegenerateError(f"tau vanishes beyond r = {R:.6g}: the scales t_n are infinite")
    table = gs.build_scale_table(M, _n_list(c, M), c.grid_density, dim=c.dim)
    out.write("scales.csv", table.to_csv())
    summary = [table.to_text()]
    if len(table.rows) >= 4 and table.rows[-1].n / table.rows[0].n >= 100:
        v = gs.growth_verdict(table)
        summary.append(f"growth verdict: {v.verdict} (slope {v.slope:.4f}; {v.caveat})")
    return EXIT_OK, summary


def run_quasitest(c, rules, out):
    rule = rules[0]
    if c.notion == "bernstein":
        n_list = c.n_list or list(qt.DEFAULT_BERNSTEIN_N)
        v = qt.bernstein_verdict(rule, n_list)
        out.write("en_bounds.csv", qt.en_csv(v.evidence))
        return EXIT_OK, [v.to_text()]
    M = _norms(c, rule, r_max=c.R_max or 1e4)
    if gs.degeneracy_radius(M) is not None:
        raise DegenerateError("analytic-degenerate norm sequence")
    if c.notion == "denjoy":
        R = c.R_max or 10.0 ** math.floor(math.log10(min(1e4, gs.certified_radius(M))) + 1e-12)
        _, v = qt.denjoy_carleman(M, R)
        out.write("denjoy.csv", _csv(["R", "I_R", "increment"],
                                     [(e["R"], e["I(R)"], e["increment"]) for e in v.evidence]))
        return EXIT_OK, [v.to_text()]
    p = c.gevrey_exponent if c.gevrey_exponent is not None else max(1.0, qt.fit_gevrey_exponent(M))
    weight = qt.power_weight(p)
    member = qt.gevrey_membership(M, weight)
    _, v = qt.gevrey_series(weight)
    out.write("gevrey.csv", _csv(["J", "partial_sum"], [(e["J"], e["partial_sum"]) for e in v.evidence]))
    lines = [
        f"Gevrey weight L_j = j^{p:.6g}",
        f"membership up to J = {member.J_max}: {'member' if member.member else 'not member'}"
        f" (C' = {member.constant:.6g}; {member.caveat})",
        v.to_text(),
    ]
    return EXIT_OK, lines


def run_interp(c, rules, out):
    rule = rules[0]
    n = c.n
    z0 = ti.default_z0(n) if c.z0_arg is None else complex(np.exp(1j * c.z0_arg))
    L = ti.build(rule, n, z0, c.eps)
    norm_rule = cf.normalize(rule)
    M = _norms(c, norm_rule, r_max=n)
    if gs.degeneracy_radius(M) is not None and c.t is None:
        raise DegenerateError("analytic-degenerate: t_n is infinite; pass --t explicitly")
    lt = math.log(c.t) if c.t is not None else gs.log_tn(M, n, c.grid_density)[0]
    Ln = ti.build(norm_rule, n, z0, c.eps)
    sup = ti.annulus_sup(Ln, math.exp(lt))
    S = ti.er_bound(M, n, math.exp(lt)) if gs.degeneracy_radius(M) is None else math.nan
    rows = [(n, float(np.angle(z0)), lt, sup.value, S, sup.value / S)]
    out.write("interp.csv", _csv(["n", "z0_arg", "log_tn", "sup_measured", "er_bound", "ratio"], rows))
    out.write("interp_coeffs.csv", _csv(
        ["side", "r", "re", "im"],
        [("a", r, v.real, v.imag) for r, v in enumerate(L.a)]
        + [("b", r + 1, v.real, v.imag) for r, v in enumerate(L.b)],
    ))
    lines = [
        f"interpolant n = {n}, z0 = exp(i*{np.angle(z0):.12g})",
        f"  gamma = {L.gamma:.6e}, tail_err = {L.tail_err:.3e}, |z0^n - 1| = {L.denominator:.6g}",
        f"  node residual = {ti.node_residual(rule, L):.3e}",
        f"  dft consistency = {ti.dft_consistency(rule, n, c.eps):.3e}",
        f"  normalized: log t = {lt:.10g}, annulus sup = {sup.value:.10g} ({sup.samples} samples; {sup.caveat})",
        f"  bound shape S(n, t) = {S:.10g}, ratio = {sup.value / S:.6g}",
    ]
    return EXIT_OK, lines


def run_green(c, rules, out):
    spec = ap.AnnulusSpec(c.r)
    lines = [f"annulus 1/r < |w| < r with r = {c.r}"]
    theta = 2 * np.pi * (np.arange(c.circle_samples) + 0.5) / c.circle_samples
    g, K, tail = ap.green_array(np.exp(1j * theta), spec, c.eps)
    out.write("green_circle.csv", _csv(["theta", "g"], zip(theta, g)))
    measured = ap.measure_circle_sup(spec, max(16, c.circle_samples), c.eps)
    lines.append(f"  series terms |k| <= {K}, tail bound {tail:.3e}")
    lines.append(f"  measured sup on |w| = 1: {measured.value:.10g} at theta = {measured.argmax:.6g}")
    a = c.a if c.a is not None else min(2.0, c.r)
    bound = ap.sup_circle_bound(spec, a)
    lines.append(f"  bound c(a) log r with a = {a}: {bound:.6e} -> {'holds' if measured.value <= bound else 'VIOLATED'}")
    if c.compare_fd:
        fd = ap.fd_oracle(spec, c.fd_grid, c.fd_grid)
        cmp = ap.compare_fd(fd, 0.1, c.eps)
        out.write("fd_field.csv", fd.to_csv())
        out.write("fd_comparison.csv", _csv(
            ["r", "N_rad", "N_ang", "max_deviation", "points", "argmax_re", "argmax_im"],
            [(c.r, c.fd_grid, c.fd_grid, cmp.max_deviation, cmp.points, cmp.argmax_w.real, cmp.argmax_w.imag)],
        ))
        lines.append(f"  FD oracle {c.fd_grid}x{c.fd_grid}: residual {fd.residual:.2e}, "
                     f"max |fd - series| = {cmp.max_deviation:.3e} over {cmp.points} points with |w - 1| >= 0.1")
    return EXIT_OK, lines


def run_certify(c, rules, out):
    if len(rules) == 1 and c.dim is not None and c.dim > 1:
        rules = rules * c.dim
    cert = ce.certify(rules, c.n_list, seed=c.seed, box_samples=c.box_samples, sample_m=c.sample_m,
                      z0_samples=c.z0_samples)
    out.write("certificate.json", cert.to_json() + "\n")
    out.write("certificate.txt", cert.to_text() + "\n")
    if cert.scale_table is not None:
        out.write("scales.csv", cert.scale_table.to_csv())
    if cert.bernstein_evidence:
        out.write("en_bounds.csv", qt.en_csv(cert.bernstein_evidence))
    if cert.interp_evidence:
        keys = list(cert.interp_evidence[0])
        out.write("interp_evidence.csv", _csv(keys, [[row[k] for k in keys] for row in cert.interp_evidence]))
    code = EXIT_DEGENERATE if cert.verdict == "degenerate-analytic" else EXIT_OK
    return code, [f"route: {cert.route}", f"verdict: {cert.verdict}", *(f"caveat: {x}" for x in cert.caveats)]


RUNNERS = {
    "analyze": run_analyze,
    "scales": run_scales,
    "quasitest": run_quasitest,
    "interp": run_interp,
    "green": run_green,
    "certify": run_certify,
}


def run(config: RunConfig) -> int:
    out = Outputs(Path(config.output))
    rules = _rules(config)
    status = "ok"
    try:
        code, lines = RUNNERS[config.command](config, rules, out)
    except DegenerateError as exc:
        code, lines, status = EXIT_DEGENERATE, [f"degenerate-analytic: {exc}"], "degenerate"
    if code == EXIT_DEGENERATE:
        status = "degenerate"
    out.write("summary.txt", "\n".join(lines) + "\n")
    manifest = {
        "tool": "pluripolar",
        "version": __version__,
        "command": config.command,
        "status": status,
        "exit_code": code,
        "knobs": config.knobs(),
        "functions": [r.describe() for r in rules],
        "outputs": sorted(out.files + ["manifest.json"]),
    }
    (out.root / "manifest.json").write_text(json.dumps(ce._plain(manifest), indent=2, sort_keys=True) + "\n")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pluripolar", description="Pluripolarity evidence for graphs of circle functions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", nargs="?", help="YAML function/run description")
        p.add_argument("--out", dest="output", help="output directory")
        p.add_argument("--eps", type=float)
        return p

    add("analyze", "rule summary and derivative norms")
    p = add("scales", "scale table log t_n, log theta_n")
    p.add_argument("--nmax", type=float)
    p.add_argument("--dim", type=int)
    p = add("quasitest", "Bernstein / Denjoy-Carleman / Gevrey tests")
    p.add_argument("--notion", choices=NOTIONS)
    p = add("interp", "interpolant at roots of unity plus z0")
    p.add_argument("--n", type=int)
    p.add_argument("--z0-arg", dest="z0_arg", type=float)
    p.add_argument("--t", type=float)
    p = add("green", "annulus Green function checks")
    p.add_argument("--r", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--compare-fd", dest="compare_fd", action="store_true", default=None)
    p = add("certify", "full certificate")
    p.add_argument("--dim", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k != "config"}
    try:
        config = parse_config(args.config, overrides)
        return run(config)
    except (PluripolarError, OSError, ValueError, ArithmeticError) as exc:
        print(f"pluripolar {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
