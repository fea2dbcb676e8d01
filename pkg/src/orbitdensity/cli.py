"""Command-line driver.

Commands
--------
finite-scan      exhaustive exact verification over finite Weyl-Heisenberg systems
bergman-density  density report for a lattice orbit of Bergman kernels
formal-degree    formal degree by quadrature, with an error estimate
ball             group-ball enumeration
stabilizer       point and kernel stabilisers of a lattice at a point

Exit codes: 0 success, 1 exact-mode theorem violation, 2 usage error,
3 numerical failure. Output formats: human, csv (RFC quoting, header row),
json (one object per line plus a final summary object). Floats are printed
with 17 significant digits. A flat key=value config file can supply any
parameter; explicit flags win; unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

from . import bergman, finite_gabor, frames, fuchsian
from .errors import TheoremViolationError, UsageError
from .hyperbolic import MoebiusMap, UpperHalfPoint

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

FORMATS = ("human", "csv", "json")

# configuration keys accepted per command (plus the lattice block)
_GLOBAL_KEYS = {"format", "out", "haar_scale"}
_COMMAND_KEYS = {
    "finite-scan": {"n_max", "windows", "seed"},
    "bergman-density": {
        "alpha",
        "z",
        "ball",
        "probes",
        "probe_radius",
        "refine_steps",
        "refine_delta",
        "grid",
        "lattice",
        "frame_floor",
        "riesz_floor",
    },
    "formal-degree": {"alpha", "z", "grid", "rel_tol"},
    "ball": {"norm", "lattice"},
    "stabilizer": {"z", "ball", "alpha", "tol", "lattice"},
}
_LATTICE_KEYS = {"lattice.name", "lattice.generators", "lattice.covolume", "lattice.integral"}


def parse_point(text: str) -> UpperHalfPoint:
    """Parse '1.5+0.5i', '2i', 'i' into an upper half-plane point."""
    cleaned = text.strip().replace("I", "i").replace("i", "j")
    try:
        z = complex(cleaned)
    except ValueError as exc:
        raise UsageError(f"cannot parse point {text!r}") from exc
    if not z.imag > 0.0:
        raise UsageError(f"point {text!r} is not in the open upper half-plane")
    return UpperHalfPoint(z.real, z.imag)


def parse_grid(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise UsageError(f"grid must look like 400x400, got {text!r}")
    try:
        nx, nt = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise UsageError(f"grid must look like 400x400, got {text!r}") from exc
    if nx < 8 or nt < 8:
        raise UsageError(f"grid must be at least 8x8, got {text!r}")
    return nx, nt


def load_config(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key in values:
                raise UsageError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value.strip()
    return values


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise UsageError(f"cannot parse boolean {text!r}")


def lattice_from_config(name: str, config: dict) -> fuchsian.LatticeSpec:
    if name == "psl2z":
        return fuchsian.psl2z()
    if config.get("lattice.name") != name:
        raise UsageError(f"unknown lattice {name!r}; configure a lattice block or use psl2z")
    gens_text = config.get("lattice.generators")
    if not gens_text:
        raise UsageError("lattice block needs lattice.generators (row-major 4-tuples, ';'-separated)")
    generators = []
    for chunk in gens_text.split(";"):
        entries = [float(v) for v in chunk.split(",")]
        if len(entries) != 4:
            raise UsageError(f"generator needs 4 entries, got {chunk!r}")
        generators.append(MoebiusMap(*entries))
    covolume = float(config["lattice.covolume"]) if "lattice.covolume" in config else None
    integral = _parse_bool(config["lattice.integral"]) if "lattice.integral" in config else False
    return fuchsian.LatticeSpec(
        name=name, generators=tuple(generators), covolume=covolume, is_integral=integral
    )


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if value is None:
        return ""
    return str(value)


class Emitter:
    """Serialises records uniformly into the chosen format."""

    def __init__(self, fmt: str, stream):
        if fmt not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}, got {fmt!r}")
        self.fmt = fmt
        self.stream = stream
        self._csv_writer = None
        self._csv_columns = None

    def record(self, kind: str, data: dict):
        if self.fmt == "json":
            payload = {"type": kind}
            payload.update(data)
            self.stream.write(json.dumps(payload) + "\n")
        elif self.fmt == "csv":
            if self._csv_writer is None:
                self._csv_columns = list(data.keys())
                self._csv_writer = csv.writer(self.stream, lineterminator="\n")
                self._csv_writer.writerow(self._csv_columns)
            self._csv_writer.writerow([format_value(data.get(c)) for c in self._csv_columns])
        else:
            self.stream.write(f"[{kind}]\n")
            for key, value in data.items():
                self.stream.write(f"{key} = {format_value(value)}\n")
            self.stream.write("\n")

    def summary(self, data: dict):
        if self.fmt == "json":
            payload = {"type": "summary"}
            payload.update(data)
            self.stream.write(json.dumps(payload) + "\n")
        elif self.fmt == "csv":
            # keep the CSV stream pure data; the summary goes to stderr
            for key, value in data.items():
                print(f"# {key} = {format_value(value)}", file=sys.stderr)
        else:
            self.stream.write("[summary]\n")
            for key, value in data.items():
                self.stream.write(f"{key} = {format_value(value)}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbit-density",
        description="Density conditions for frames and Riesz sequences in lattice orbits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--format", choices=FORMATS, default=None)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--config", default=None, help="flat key = value configuration file")
        p.add_argument("--haar-scale", dest="haar_scale", type=float, default=None)

    p = sub.add_parser("finite-scan", help="exhaustive exact verification scan")
    add_common(p)
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--windows", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("bergman-density", help="density report for a Bergman kernel orbit")
    add_common(p)
    p.add_argument("--lattice", default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--z", default=None)
    p.add_argument("--ball", type=float, default=None)
    p.add_argument("--probes", type=int, default=None)
    p.add_argument("--probe-radius", dest="probe_radius", type=float, default=None)
    p.add_argument("--refine-steps", dest="refine_steps", type=int, default=None)
    p.add_argument("--refine-delta", dest="refine_delta", type=float, default=None)
    p.add_argument("--grid", default=None, help="formal-degree grid, e.g. 1536x768")
    p.add_argument("--frame-floor", dest="frame_floor", type=float, default=None)
    p.add_argument("--riesz-floor", dest="riesz_floor", type=float, default=None)

    p = sub.add_parser("formal-degree", help="formal degree by quadrature")
    add_common(p)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--z", default=None, help="base point (default i)")
    p.add_argument("--grid", default=None, help="grid resolution, e.g. 400x400")
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=None)

    p = sub.add_parser("ball", help="enumerate a group ball")
    add_common(p)
    p.add_argument("--lattice", default=None)
    p.add_argument("--norm", type=float, default=None)

    p = sub.add_parser("stabilizer", help="point and kernel stabilisers at a point")
    add_common(p)
    p.add_argument("--lattice", default=None)
    p.add_argument("--z", default=None)
    p.add_argument("--ball", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)

    return parser


class Settings:
    """Merged view of flags, config file, and defaults."""

    def __init__(self, args, config: dict):
        self.args = args
        self.config = config
        allowed = _GLOBAL_KEYS | _COMMAND_KEYS[args.command] | _LATTICE_KEYS
        unknown = set(config) - allowed
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")

    def get(self, name: str, default, parse=None):
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        if name in self.config:
            raw = self.config[name]
            return parse(raw) if parse else raw
        return default


def _positive(value: float, name: str) -> float:
    if not value > 0.0:
        raise UsageError(f"{name} must be positive, got {value}")
    return value


def cmd_finite_scan(settings: Settings, emitter: Emitter) -> int:
    n_max = settings.get("n_max", None, int)
    if n_max is None:
        raise UsageError("finite-scan requires --n-max")
    if not (2 <= n_max <= 8):
        raise UsageError(f"n_max must lie in [2, 8], got {n_max}")
    windows = settings.get("windows", 50, int)
    seed = settings.get("seed", 0, int)
    if windows < 0 or seed < 0:
        raise UsageError("windows and seed must be nonnegative")
    report = finite_gabor.exhaustive_scan(n_max, windows_per_case=windows, seed=seed)
    if emitter.fmt == "csv":
        emitter.stream.write(report.to_csv())
    else:
        for row in report.rows:
            emitter.record(
                "scan_row", {c: row[c] for c in finite_gabor.SCAN_CSV_COLUMNS}
            )
    for violation in report.violations:
        emitter.record("violation", violation)
    emitter.summary(report.summary())
    return EXIT_VIOLATION if report.violations else EXIT_OK


def cmd_formal_degree(settings: Settings, emitter: Emitter) -> int:
    alpha = settings.get("alpha", None, float)
    if alpha is None:
        raise UsageError("formal-degree requires --alpha")
    if not alpha > 1.0:
        raise UsageError(f"alpha must exceed 1, got {alpha}")
    weight = bergman.Weight(alpha)
    haar_scale = _positive(settings.get("haar_scale", 1.0, float), "haar_scale")
    base = parse_point(settings.get("z", "i"))
    rel_tol = settings.get("rel_tol", None, float)
    grid_text = settings.get("grid", None)
    grid = None
    if grid_text is not None:
        nx, nt = parse_grid(grid_text)
        grid = bergman.default_formal_degree_grid(weight, base, nx=nx, nt=nt)
    degree, diag = bergman.formal_degree(
        weight, grid, base=base, haar_scale=haar_scale, rel_tol=rel_tol, full_output=True
    )
    emitter.record(
        "formal_degree",
        {
            "alpha": alpha,
            "base": f"{base.x}+{base.y}i",
            "haar_scale": haar_scale,
            "formal_degree": degree,
            "est_rel_error": diag["est_rel_error"],
            "node_count": diag["node_count"],
        },
    )
    emitter.summary({"formal_degree": degree, "est_rel_error": diag["est_rel_error"]})
    return EXIT_OK


def cmd_ball(settings: Settings, emitter: Emitter) -> int:
    norm = settings.get("norm", None, float)
    if norm is None:
        raise UsageError("ball requires --norm")
    name = settings.get("lattice", "psl2z")
    spec = lattice_from_config(name, settings.config)
    ball = fuchsian.ball_enumerate(spec, norm)
    for elt in ball.elements:
        emitter.record(
            "element",
            {"a": elt.a, "b": elt.b, "c": elt.c, "d": elt.d, "frobenius_norm": elt.frobenius_norm},
        )
    emitter.summary(
        {
            "lattice": spec.name,
            "norm_bound": norm,
            "size": len(ball.elements),
            "closure_certified": ball.closure_certified,
        }
    )
    return EXIT_OK


def cmd_stabilizer(settings: Settings, emitter: Emitter) -> int:
    z_text = settings.get("z", None)
    ball_norm = settings.get("ball", None, float)
    if z_text is None or ball_norm is None:
        raise UsageError("stabilizer requires --z and --ball")
    z = parse_point(z_text)
    alpha = settings.get("alpha", 2.0, float)
    if not alpha > 1.0:
        raise UsageError(f"alpha must exceed 1, got {alpha}")
    tol = settings.get("tol", 1e-4, float)
    if not (0.0 < tol <= 1e-4):
        raise UsageError(f"tol must lie in (0, 1e-4], got {tol}")
    name = settings.get("lattice", "psl2z")
    spec = lattice_from_config(name, settings.config)
    ball = fuchsian.ball_enumerate(spec, ball_norm)
    point_members = fuchsian.stabilizer_of_point(ball, z, tol=tol)
    kernel = bergman.KernelVector(z, bergman.Weight(alpha))
    kernel_tol = bergman.kernel_tol_for_point_tol(tol, alpha)
    kernel_members, phases = bergman.projective_stabilizer_kernel(ball, kernel, tol=kernel_tol)
    agree = {m.key() for m in point_members} == {m.key() for m in kernel_members}
    emitter.record(
        "stabilizer",
        {
            "lattice": spec.name,
            "z": f"{z.x}+{z.y}i",
            "ball_norm": ball_norm,
            "ball_size": len(ball.elements),
            "order": len(point_members),
            "order_kernel": len(kernel_members),
            "paths_agree": agree,
            "members": " ".join(
                f"({m.a:.12g},{m.b:.12g};{m.c:.12g},{m.d:.12g})" for m in point_members
            ),
            "max_phase_modulus_error": max(
                (abs(abs(u) - 1.0) for u in phases.values), default=0.0
            ),
        },
    )
    emitter.summary({"order": len(point_members), "paths_agree": agree})
    return EXIT_OK


def cmd_bergman_density(settings: Settings, emitter: Emitter) -> int:
    alpha = settings.get("alpha", None, float)
    if alpha is None:
        raise UsageError("bergman-density requires --alpha")
    if not alpha > 1.0:
        raise UsageError(f"alpha must exceed 1, got {alpha}")
    z_text = settings.get("z", None)
    if z_text is None:
        raise UsageError("bergman-density requires --z")
    z = parse_point(z_text)
    ball_norm = settings.get("ball", None, float)
    if ball_norm is None:
        raise UsageError("bergman-density requires --ball")
    if ball_norm < math.sqrt(2.0):
        raise UsageError(f"ball norm must be at least sqrt(2), got {ball_norm}")
    probes_count = settings.get("probes", 40, int)
    if probes_count < 1:
        raise UsageError(f"probes must be at least 1, got {probes_count}")
    probe_radius = _positive(settings.get("probe_radius", 2.0, float), "probe_radius")
    refine_steps = settings.get("refine_steps", 3, int)
    if refine_steps < 1:
        raise UsageError(f"refine_steps must be at least 1, got {refine_steps}")
    refine_delta = _positive(settings.get("refine_delta", 1.0, float), "refine_delta")
    frame_floor = _positive(settings.get("frame_floor", 1e-6, float), "frame_floor")
    riesz_floor = _positive(settings.get("riesz_floor", 1e-6, float), "riesz_floor")
    haar_scale = _positive(settings.get("haar_scale", 1.0, float), "haar_scale")
    name = settings.get("lattice", "psl2z")
    spec = lattice_from_config(name, settings.config)

    weight = bergman.Weight(alpha)
    kernel = bergman.KernelVector(z, weight)
    covolume = fuchsian.lattice_covolume(spec, haar_scale=haar_scale)
    grid_text = settings.get("grid", None)
    grid = None
    if grid_text is not None:
        nx, nt = parse_grid(grid_text)
        grid = bergman.default_formal_degree_grid(weight, z, nx=nx, nt=nt)
    degree, degree_diag = bergman.formal_degree(
        weight, grid, base=z, haar_scale=haar_scale, rel_tol=None, full_output=True
    )

    ball = fuchsian.ball_enumerate(spec, ball_norm)
    stab_members, phases = bergman.projective_stabilizer_kernel(ball, kernel)
    cosets = fuchsian.coset_representatives(ball, stab_members)
    probes = bergman.probe_kernels(kernel, probes_count, probe_radius)
    gen_norm_sq = bergman.kernel_norm_sq(kernel)

    norms = [
        max(math.sqrt(2.0), ball_norm - refine_delta * (refine_steps - 1 - j))
        for j in range(refine_steps)
    ]
    riesz_trace_min, riesz_trace_max = [], []
    probe_trace_min, probe_trace_max = [], []
    reports = []
    for step, norm in enumerate(norms):
        bound_sq = norm * norm + 1e-9
        lam_maps = [m for m in cosets.representatives if m.frobenius_sq <= bound_sq]
        gamma_maps = [m for m in ball.elements if m.frobenius_sq <= bound_sq]
        lam_system = bergman.orbit_system(lam_maps, kernel)
        gamma_system = bergman.orbit_system(gamma_maps, kernel)
        riesz_lo, riesz_hi = frames.riesz_extremes(frames.gram(lam_system))
        probe_lo, probe_hi, probe_diag = frames.frame_bounds_probe(gamma_system, probes)
        riesz_trace_min.append(riesz_lo)
        riesz_trace_max.append(riesz_hi)
        probe_trace_min.append(probe_lo)
        probe_trace_max.append(probe_hi)

        window = min(3, len(probe_trace_min))
        frame_decision = all(
            lo >= frame_floor * probe_hi for lo in probe_trace_min[-window:]
        )
        riesz_decision = all(
            lo >= riesz_floor * max(hi, 0.0)
            for lo, hi in zip(riesz_trace_min[-window:], riesz_trace_max[-window:])
        )

        tiled = [
            rep
            for rep, full in zip(cosets.representatives, cosets.rep_fully_tiled)
            if full and rep.frobenius_sq <= bound_sq
        ]
        tiled_full = [rep.compose(h) for rep in tiled for h in cosets.stabilizer]
        s_relation_residual = frames.check_S_relation(
            bergman.orbit_system(tiled_full, kernel),
            bergman.orbit_system(tiled, kernel),
            len(stab_members),
            probes,
        )
        diagnostics = {
            "truncation_radius": norm,
            "probe_count": probe_diag["probe_count"],
            "probe_rank": probe_diag["probe_rank"],
            "gamma_count": len(gamma_maps),
            "lambda_count": len(lam_maps),
            "formal_degree_rel_error": degree_diag["est_rel_error"],
            "ball_certified": ball.closure_certified,
            "s_relation_residual": s_relation_residual,
            "probe_trace_min": list(probe_trace_min),
            "probe_trace_max": list(probe_trace_max),
            "riesz_trace_min": list(riesz_trace_min),
            "riesz_trace_max": list(riesz_trace_max),
        }
        report = frames.density_verdict(
            lattice=spec.name,
            ball_norm=norm,
            covolume=covolume,
            formal_degree=degree,
            stab_order=len(stab_members),
            gen_norm_sq=gen_norm_sq,
            frame_decision=frame_decision,
            riesz_decision=riesz_decision,
            exact_mode=False,
            a_est=probe_lo,
            b_est=probe_hi,
            riesz_min=riesz_lo,
            riesz_max=riesz_hi,
            diagnostics=diagnostics,
        )
        reports.append(report)
        emitter.record("frame_report", report.to_flat_dict())

    final = reports[-1]
    emitter.summary(
        {
            "lattice": spec.name,
            "alpha": alpha,
            "z": f"{z.x}+{z.y}i",
            "stab_order": final.stab_order,
            "covolume": final.covolume,
            "formal_degree": final.formal_degree,
            "density_product": final.density_product,
            "density_bound": final.density_bound,
            "verdict_i_applicable": final.verdict_i_applicable,
            "verdict_i_pass": final.verdict_i_pass,
            "verdict_ii_applicable": final.verdict_ii_applicable,
            "verdict_ii_pass": final.verdict_ii_pass,
            "verdict_consistency": "pass" if final.consistent else "flagged",
            "note": "numerical mode analyses finite truncations; decisions are trend-based, not proofs",
        }
    )
    return EXIT_OK


_COMMANDS = {
    "finite-scan": cmd_finite_scan,
    "bergman-density": cmd_bergman_density,
    "formal-degree": cmd_formal_degree,
    "ball": cmd_ball,
    "stabilizer": cmd_stabilizer,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        config = load_config(args.config) if args.config else {}
        settings = Settings(args, config)
        fmt = settings.get("format", "human")
        if fmt not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}, got {fmt!r}")
        out_path = settings.get("out", None)
        if out_path:
            with open(out_path, "w", encoding="utf-8") as fh:
                return _COMMANDS[args.command](settings, Emitter(fmt, fh))
        return _COMMANDS[args.command](settings, Emitter(fmt, sys.stdout))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TheoremViolationError as exc:
        print(f"theorem violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except Exception as exc:  # numerical and resource failures
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
