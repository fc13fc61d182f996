"""Command-line entry point: ``betaspace {sample,bench,workspace,control}``.

Exit codes: 0 success, 2 configuration error, 3 every requested sample failed,
4 simulation overflow (a diagnostic JSON is still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import _backend, bench, control, kinematics, sampling, workspace
from .config import load_robot, shipped_robots
from .errors import BetaSpaceError, ConfigError, NumericalOverflow
from .transform import TubeSet, build_beta_transform

EXIT_OK, EXIT_CONFIG, EXIT_SAMPLING, EXIT_OVERFLOW = 0, 2, 3, 4
DEFAULT_LENGTHS = (100.0, 150.0, 200.0)


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def _clean(x):
    """Replace non-finite floats with null or strings so the JSON stays standard."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
    return x


def write_json(record: dict, path: Path) -> None:
    path.write_text(json.dumps(_clean(record), indent=2, default=_json_default) + "\n", encoding="utf-8")


def _out_dir(path: str) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _lengths(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad --lengths value {text!r}") from exc


def _tubes(args) -> tuple[TubeSet, dict]:
    """Tube set and config defaults from ``--robot`` or ``--lengths``."""
    if getattr(args, "robot", None):
        cfg = load_robot(args.robot)
        return cfg.tubes, cfg.defaults
    try:
        return TubeSet(_lengths(args.lengths) if args.lengths else DEFAULT_LENGTHS), {}
    except (BetaSpaceError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _seed(args, defaults: dict) -> int:
    return int(args.seed if args.seed is not None else defaults.get("seed", 0))


# ---------------------------------------------------------------------- sample

def cmd_sample(args) -> int:
    tubes, defaults = _tubes(args)
    seed = _seed(args, defaults)
    count = args.count if args.count is not None else int(defaults.get("count", 1000))
    batch, stats = sampling.sample(tubes, args.method, count, seed, sqrt_transform=args.sqrt,
                                   max_attempts=args.max_attempts, use_margins=args.margins,
                                   threads=args.threads, backend=args.backend)
    out = _out_dir(args.out)
    sampling.write_batch_csv(batch, out / "samples.csv")
    record = sampling.stats_record(batch, stats, sqrt_transform=args.sqrt, lengths=list(tubes.lengths),
                                   max_attempts=args.max_attempts, backend=_backend.get(args.backend).BACKEND)
    write_json(record, out / "stats.json")
    print(f"{stats.succeeded}/{stats.requested} samples, success rate {stats.success_rate:.4f}, "
          f"fail rate {stats.fail_rate:.4f}")
    if count > 0 and stats.succeeded == 0:
        print("error: every sample exhausted the attempt cap", file=sys.stderr)
        return EXIT_SAMPLING
    return EXIT_OK


# ----------------------------------------------------------------------- bench

def cmd_bench(args) -> int:
    tubes, defaults = _tubes(args)
    report = bench.run_bench(tubes, args.count, args.repeats, _seed(args, defaults), args.max_attempts,
                             threads=args.threads, backend=args.backend)
    print(report.table())
    if args.out:
        out = _out_dir(args.out)
        write_json(report.as_dict(), out / "bench.json")
        with open(out / "bench.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "mean_ms", "std_ms", "factor", "success_rate", "fail_rate"])
            for r in report.rows:
                w.writerow([r.method, r.mean_ms, r.std_ms, r.factor, r.success_rate, r.fail_rate])
    return EXIT_OK


# ------------------------------------------------------------------- workspace

def workspace_cloud(args) -> tuple[np.ndarray, dict]:
    """Planar cloud for a toy or a robot plus metadata."""
    seed = args.seed if args.seed is not None else 0
    if args.toy:
        gen = {
            "square": lambda: kinematics.toy_square_points(args.count, seed),
            "disk": lambda: kinematics.toy_disk_points(args.count, seed, args.sqrt),
            "cc": lambda: kinematics.cc_toy_points(args.count, seed, args.sqrt),
        }[args.toy]
        return gen(), {"source": f"toy:{args.toy}", "seed": seed, "requested": args.count}
    cfg = load_robot(args.robot)
    seed = args.seed if args.seed is not None else int(cfg.defaults.get("seed", 0))
    tips = kinematics.sample_tips(cfg.model, args.count, seed, args.sqrt, args.sampler,
                                  threads=args.threads, backend=args.backend)
    meta = {"source": f"robot:{cfg.name}", "seed": seed, "requested": args.count,
            "sampler": args.sampler, "failed": args.count - len(tips)}
    return workspace.lantern_project(tips), meta


def cmd_workspace(args) -> int:
    if not args.toy and not args.robot:
        raise ConfigError("workspace needs --robot or --toy")
    cloud, meta = workspace_cloud(args)
    if args.count > 0 and len(cloud) == 0:
        print("error: every sample exhausted the attempt cap", file=sys.stderr)
        return EXIT_SAMPLING
    out = _out_dir(args.out)
    workspace.write_cloud_csv(cloud, out / "cloud.csv")

    boundary = workspace.concave_boundary(cloud, args.concavity, strict=False)
    workspace.write_polygon_csv(boundary, out / "boundary.csv")
    record = dict(meta, sqrt_transform=args.sqrt, points=len(cloud), concavity=args.concavity,
                  area=boundary.area, alpha_radius=boundary.radius, degenerate=len(boundary.polygon) == 0)

    if len(cloud) >= 3 and args.permutations > 0:
        curve = workspace.convergence_curve(cloud, args.permutations, seed=meta["seed"], concavity=args.concavity)
        workspace.write_curve_csv(curve, out / "convergence.csv")
        record.update(permutations=args.permutations,
                      samples_to_99=workspace.samples_to_fraction(curve, 0.99))
    if len(cloud) >= 2:
        cs = workspace.closeness_stats(cloud, args.block, backend=args.backend)
        record["closeness"] = {"mean": cs.mean, "std": cs.std, "median_of_medians": cs.median,
                               "block": cs.block, "pairs": cs.pairs}
    if args.toy == "disk":
        stat, p = workspace.annulus_chi_square(cloud)
        record["annulus_chi_square"] = {"statistic": stat, "p_value": p, "bins": 10}
    write_json(record, out / "workspace.json")
    print(f"{len(cloud)} points, area {boundary.area:.6g}")
    return EXIT_OK


# --------------------------------------------------------------------- control

def _gains(args, cfg) -> control.PIGains:
    if args.kp or args.ki:
        if not (args.kp and args.ki):
            raise ConfigError("--kp and --ki must be given together")
        return control.PIGains(_lengths(args.kp), _lengths(args.ki))
    if args.gains == "violation":
        return control.VIOLATION_GAINS
    if cfg is None:
        raise ConfigError("a named gain set needs --robot")
    if args.gains not in cfg.gains:
        raise ConfigError(f"robot has no gain set {args.gains!r}; available: {sorted(cfg.gains)}")
    g = cfg.gains[args.gains]
    return control.PIGains(g.kp, g.ki)


def _reference(args, t) -> np.ndarray:
    if args.reference:
        return np.array(_lengths(args.reference))
    scenario = {"vertex": np.ones(t.n), "center": np.full(t.n, 0.5), "zero": np.zeros(t.n)}
    if args.scenario not in scenario:
        raise ConfigError(f"unknown scenario {args.scenario!r}")
    return t.matrix @ scenario[args.scenario]


def cmd_control(args) -> int:
    cfg = load_robot(args.robot) if args.robot else None
    if cfg is not None:
        tubes = cfg.tubes
    else:
        try:
            tubes = TubeSet(_lengths(args.lengths) if args.lengths else DEFAULT_LENGTHS)
        except (BetaSpaceError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
    try:
        gains = _gains(args, cfg)
    except BetaSpaceError as exc:
        raise ConfigError(str(exc)) from exc
    if gains.n != tubes.n:
        raise ConfigError(f"{gains.n} gain pairs for {tubes.n} tubes")
    t = build_beta_transform(tubes)
    ref = _reference(args, t)
    ss = control.build_closed_loop(gains)
    ss_hat = control.transform_state_space(ss, t)
    ev, ev_hat = control.eigenvalues(ss.A), control.eigenvalues(ss_hat.A)
    ul, ur, bu = control.closed_form_transformed_blocks(gains)
    n = gains.n
    closed_form_err = max(np.abs(ss_hat.A[:n, :n] - ul).max(), np.abs(ss_hat.A[:n, n:] - ur).max(),
                          np.abs(ss_hat.B[:n] - bu).max())
    record = {
        "gains": {"kp": list(gains.kp), "ki": list(gains.ki)},
        "lengths": list(tubes.lengths),
        "reference": ref.tolist(),
        "coordinates": control.TRANSFORMED if args.transformed else control.ORIGINAL,
        "saturate_unit": bool(args.saturate),
        "dt": args.dt,
        "T": args.T,
        "ordering": control.gain_ordering_check(gains).as_dict(),
        "stable": control.is_stable(ss.A),
        "eigenvalues": control.complex_list(ev),
        "eigenvalues_transformed": control.complex_list(ev_hat),
        "spectrum_distance": control.spectrum_distance(ev, ev_hat),
        "closed_form_max_error": float(closed_form_err),
    }
    out = _out_dir(args.out)
    system = ss_hat if args.transformed else ss
    try:
        traj = control.simulate(system, control.constant(ref), args.dt, args.T, saturate_unit=args.saturate,
                                tubes=tubes, state_bound=args.state_bound)
    except NumericalOverflow as exc:
        record.update(overflow=True, overflow_time=exc.time, overflow_step=exc.step, message=str(exc))
        write_json(record, out / "analysis.json")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    control.write_trajectory_csv(traj, out / "trajectory.csv")
    record.update(overflow=False, steps=len(traj.t), violations=traj.violation_count,
                  max_violation=max(r.worst_violation for r in traj.reports), final_beta=traj.beta[-1].tolist())
    write_json(record, out / "analysis.json")
    print(f"{traj.violation_count} of {len(traj.t)} steps violate the nesting inequalities")
    return EXIT_OK


# ---------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="betaspace", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=1, help="worker threads for sampling (output is unchanged)")
    p.add_argument("--backend", choices=["compiled", "python"], default=None,
                   help="kernel backend (default: compiled if built)")
    sub = p.add_subparsers(dest="command", required=True)

    def robot_flags(sp, lengths=True):
        sp.add_argument("--robot", help=f"config path or name ({', '.join(shipped_robots())})")
        if lengths:
            sp.add_argument("--lengths", help="comma-separated tube lengths in mm, e.g. 100,150,200")
        sp.add_argument("--seed", type=int, default=None)

    s = sub.add_parser("sample", help="draw translation samples")
    robot_flags(s)
    s.add_argument("--method", default="direct", choices=[m.value for m in sampling.SamplerMethod])
    s.add_argument("--count", type=int, default=None)
    s.add_argument("--sqrt", action="store_true", help="square-root transform of the unit draws")
    s.add_argument("--margins", action="store_true", help="use margin-adjusted effective lengths")
    s.add_argument("--max-attempts", type=int, default=sampling.MAX_ATTEMPTS)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    b = sub.add_parser("bench", help="time all samplers")
    robot_flags(b)
    b.add_argument("--count", type=int, default=1000)
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--max-attempts", type=int, default=sampling.MAX_ATTEMPTS)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bench)

    w = sub.add_parser("workspace", help="estimate a planar workspace")
    robot_flags(w, lengths=False)
    w.add_argument("--toy", choices=["square", "disk", "cc"])
    w.add_argument("--sampler", default="direct", choices=[m.value for m in sampling.SamplerMethod])
    w.add_argument("--count", type=int, default=5000)
    w.add_argument("--sqrt", action="store_true")
    w.add_argument("--permutations", type=int, default=10)
    w.add_argument("--concavity", type=float, default=1.0)
    w.add_argument("--block", type=int, default=1000)
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_workspace)

    c = sub.add_parser("control", help="simulate the PI loop")
    robot_flags(c)
    c.add_argument("--gains", default="nominal", help="gain set name from the robot file, or 'violation'")
    c.add_argument("--kp", help="comma-separated proportional gains")
    c.add_argument("--ki", help="comma-separated integral gains")
    c.add_argument("--scenario", default="vertex", help="reference: vertex, center or zero")
    c.add_argument("--reference", help="explicit reference translation in mm, comma-separated")
    c.add_argument("--dt", type=float, default=0.01)
    c.add_argument("--T", type=float, default=20.0)
    c.add_argument("--transformed", action="store_true")
    c.add_argument("--saturate", action="store_true", help="clamp unit-space outputs to [0, 1]")
    c.add_argument("--state-bound", type=float, default=control.STATE_BOUND)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_control)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
