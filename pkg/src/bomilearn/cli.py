"""Command-line entry point: ``bomilearn {simulate,fit,verify,plot}``.

Exit codes: 0 ok, 1 a required verification check failed, 2 error (an
``error.json`` is written to the output directory).
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import fitting, metrics, plotting, protocol, verify
from .config import build_mapping_from, build_run_config, load_config
from .errors import BomiError, Diverged

EXIT_OK, EXIT_CHECK_FAILED, EXIT_ERROR = 0, 1, 2


def _dump(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def _write_table(path: Path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row) + "\n")
    return path


def _overrides(args) -> dict:
    over: dict = {}
    exp = {}
    if getattr(args, "sessions", None) is not None:
        exp["n_sessions"] = args.sessions
    if getattr(args, "trials", None) is not None:
        exp["trials_per_session"] = args.trials
    if args.seed is not None:
        exp["seed"] = args.seed
        over["verify"] = {"seed": args.seed}
    if exp:
        over["experiment"] = exp
    if getattr(args, "gamma_range", None) is not None:
        over["fit"] = {"gamma_range": list(args.gamma_range)}
    return over


def _session_modes(records, mapping):
    """SVD modes of the true map and of the learned map at the end of each session."""
    rows = []
    true = metrics.svd_modes(mapping.c)
    for j in range(mapping.n):
        rows.append((-1, "C", j, float(true.singular_values[j]), true.right[j]))
    angles = []
    last = {}
    for r in records:
        last[r.session_idx] = r
    for s in sorted(last):
        c_hat = last[s].w_hat_final @ mapping.phi
        modes = metrics.svd_modes(c_hat)
        for j in range(mapping.n):
            rows.append((s, "C_hat", j, float(modes.singular_values[j]), modes.right[j]))
        angles.append(metrics.subspace_angle(c_hat, mapping.c))
    return rows, angles


def cmd_simulate(run, out: Path, args) -> int:
    echo = run.echo()
    records = protocol.run_experiment(run.experiment, run.mapping, run.params)
    protocol.export_records(records, out / "records.csv", config=echo)
    re = metrics.reaching_error(records)
    fme = metrics.fme_series(records, run.mapping.w)
    metrics.save_series(re, out / "re.csv")
    metrics.save_series(fme, out / "fme.csv")
    window = int(run.tree["fit"]["window"])
    re_s = metrics.group_and_smooth(re, records, window)
    metrics.save_series(re_s, out / "re_smoothed.csv")
    rows, angles = _session_modes(records, run.mapping)
    plotting.write_modes(rows, out / "modes.csv")
    re_means = metrics.session_means(re, records)
    fme_means = metrics.session_means(fme, records)
    summary = {
        "config": echo,
        "seed": run.seed,
        "n_trials": len(records),
        "n_reached": int(sum(r.reached for r in records)),
        "re_session_means": re_means.tolist(),
        "fme_session_means": fme_means.tolist(),
        "fme_first": float(fme.values[0]),
        "fme_last": float(fme.values[-1]),
        "subspace_angle_per_session": angles,
        "re_trending_down": bool(re_means[-1] < re_means[0]),
        "fme_trending_down": bool(fme.values[-1] < fme.values[0]),
        "warnings": run.warnings,
    }
    _dump(summary, out / "summary.json")
    print(f"{len(records)} trials; RE session means {np.round(re_means, 3).tolist()}; "
          f"FME {fme.values[0]:.3f} -> {fme.values[-1]:.3f}")
    return EXIT_OK


def cmd_fit(run, out: Path, args) -> int:
    ref_path = Path(args.reference)
    if not ref_path.exists():
        raise FileNotFoundError(f"reference records not found: {ref_path}")
    records = protocol.import_records(ref_path)
    if len(records) < 10:
        raise ValueError("reference needs at least 10 trials")
    echoed = protocol.read_sidecar(ref_path).get("config") or {}
    experiment, mapping = run.experiment, run.mapping
    # the protocol and map must be those that produced the reference
    if "experiment" in echoed and "mapping" in echoed:
        experiment = protocol.ExperimentConfig.from_dict(echoed["experiment"])
        mapping = build_mapping_from(echoed)
    fit_cfg = run.tree["fit"]
    curve = fitting.re_learning_curve(records, int(fit_cfg["window"]))
    ef = fitting.fit_eta(curve)
    params = run.params
    if fit_cfg["eta_source"] == "fitted":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            params = params.replace(eta=ef.eta)
    gamma_range = tuple(float(v) for v in fit_cfg["gamma_range"])
    g_hat, g_curve = fitting.fit_gamma(records, experiment, mapping, params, gamma_range,
                                       coarse_step=float(fit_cfg["coarse_step"]),
                                       fine_step=float(fit_cfg["fine_step"]))
    result = fitting.FitResult(eta_hat=ef.eta, alpha_hat=ef.alpha, c_hat=ef.c, r_squared=ef.r_squared,
                               gamma_hat=g_hat, gamma_objective_curve=g_curve, gamma_range=gamma_range)
    echo = run.echo()
    echo["reference"] = {"path": ref_path.name, "config": echoed}
    fitting.save_fit(result, out / "fit.json", config=echo)
    _write_table(out / "gamma_curve.csv", ["gamma", "objective"], [(float(g), float(o)) for g, o in g_curve])
    metrics.save_series(curve, out / "re_fitted_series.csv")
    print(f"eta_hat={ef.eta:.5g} (R^2={ef.r_squared:.4f}); gamma_hat={g_hat:.4g} over {list(gamma_range)}")
    return EXIT_OK


def cmd_verify(run, out: Path, args) -> int:
    report, tables = verify.run_suite(run.params, run.mapping, run.tree["verify"], quick=args.quick)
    report["config"] = run.echo()
    report["warnings"] = run.warnings
    _dump(report, out / "verify.json")
    for name, (header, rows) in tables.items():
        _write_table(out / name, header, rows)
    for c in report["checks"]:
        tag = "PASS" if c["passed"] else ("FAIL" if c["required"] else "info")
        print(f"{tag:4s} {c['name']}")
    return EXIT_OK if report["all_required_passed"] else EXIT_CHECK_FAILED


def cmd_plot(run, out: Path, args) -> int:
    for item in args.paths:
        path = Path(item)
        with open(path) as fh:
            header = fh.readline().strip()
        if header.startswith("session,trial,t"):
            records = protocol.import_records(path)
            plotting.plot_trajectories(records, out / f"{path.stem}_trajectories.svg")
        elif header == "k,value":
            series = metrics.load_series(path)
            label = path.stem.split("_")[0].upper()
            plotting.plot_series(series.k, series.values, out / f"{path.stem}.svg", ylabel=label)
        elif header.startswith("session,source,mode"):
            plotting.plot_modes(plotting.read_modes(path), out / f"{path.stem}.svg")
        else:
            raise ValueError(f"{path}: unrecognised CSV header {header!r}")
        print(f"plotted {path.name}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "verify": cmd_verify, "plot": cmd_plot}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, help="experiment seed")
    common.add_argument("--quick", action="store_true", help="reduced workload")
    parser = argparse.ArgumentParser(prog="bomilearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", parents=[common], help="run the reaching experiment")
    sim.add_argument("--sessions", type=int)
    sim.add_argument("--trials", type=int, help="trials per session")
    fit = sub.add_parser("fit", parents=[common], help="fit eta and gamma to reference records")
    fit.add_argument("reference", help="records CSV from simulate (or matching format)")
    fit.add_argument("--gamma-range", type=float, nargs=2, metavar=("LOW", "HIGH"))
    sub.add_parser("verify", parents=[common], help="run the stability checks")
    plot = sub.add_parser("plot", parents=[common], help="draw SVG figures from CSV artifacts")
    plot.add_argument("paths", nargs="+")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        run = build_run_config(load_config(args.config, _overrides(args)))
        return COMMANDS[args.command](run, out, args)
    except (BomiError, OSError, ValueError, Diverged) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        try:
            _dump(err, out / "error.json")
        except OSError:
            pass
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
