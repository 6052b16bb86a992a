"""Command-line entry point: ``gridloc simulate | locate | report | sweep-sigma | profile``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
from collections import defaultdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

from gridloc import __version__
from gridloc.errors import GridlocError, UnknownAnchorError, ValidationError
from gridloc.geometry import Deployment, GridCell, Point, load_deployment
from gridloc.metrics import DEFAULT_BIN_EDGES, build_report, error_surface, ranging_profile
from gridloc.pipeline import EstimatorConfig, Estimate, Method, config_from_dict, load_config, run_batch
from gridloc.propagation import MODEL_PRESETS, PathLossModel, load_model
from gridloc.resolver import RssiWindow, average_window
from gridloc.simulator import MIN_DISTANCE, SCENARIO_PRESETS, Scenario, load_scenario, run

log = logging.getLogger("gridloc")

TRUTH_HEADER = ("window_id", "x", "y")
SAMPLES_HEADER = ("window_id", "anchor_id", "rssi_dbm")
ESTIMATES_HEADER = ("window_id", "x", "y", "method", "cell_col", "cell_row")
SKIPS_HEADER = ("window_id", "reason")
REPORT_HEADER = ("window_id", "truth_x", "truth_y", "est_x", "est_y", "error", "method")
SUMMARY_HEADER = ("sigma", "method", "count", "skipped", "mean", "median", "p95")


def fmt(v: float) -> str:
    return f"{v:.9g}"


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _digest(obj: Any) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def write_manifest(out_dir: Path, command: str, *, config: dict, outputs: list[Path], seed=None, scenario=None) -> Path:
    """Record what produced a set of outputs.

    ``digest`` covers every field except ``created``, so identical inputs give
    identical digests.
    """
    body = {
        "tool": "gridloc",
        "version": __version__,
        "command": command,
        "seed": seed,
        "scenario_digest": _digest(scenario) if scenario is not None else None,
        "config": config,
        "outputs": sorted(p.name for p in outputs),
    }
    manifest = dict(body, digest=_digest(body), created=datetime.now(timezone.utc).isoformat())
    path = out_dir / f"manifest-{command}.json"
    write_atomic(path, _canonical_json(manifest))
    return path


# ---------------------------------------------------------------- file readers


def _read_csv(path: Path, required: Sequence[str]) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise ValidationError(f"{path}: missing columns {missing}")
        return list(reader)


def _parse(path: Path, lineno: int, column: str, value: str, kind):
    try:
        return kind(value)
    except ValueError:
        raise ValidationError(f"{path}:{lineno}: column {column!r}: bad value {value!r}") from None


def read_truth(path: Path) -> list[tuple[int, Point]]:
    rows = _read_csv(path, TRUTH_HEADER)
    return [
        (
            _parse(path, i, "window_id", r["window_id"], int),
            Point(_parse(path, i, "x", r["x"], float), _parse(path, i, "y", r["y"], float)),
        )
        for i, r in enumerate(rows, start=2)
    ]


def read_windows(path: Path, window_seconds: float) -> list[RssiWindow]:
    """Group sample rows by window id; repeated anchors within a window are averaged.

    An optional ``timestamp`` column is checked against ``window_seconds``.
    """
    rows = _read_csv(path, SAMPLES_HEADER)
    grouped: dict[int, list[tuple[str, float, float]]] = defaultdict(list)
    for i, r in enumerate(rows, start=2):
        wid = _parse(path, i, "window_id", r["window_id"], int)
        rssi = _parse(path, i, "rssi_dbm", r["rssi_dbm"], float)
        ts = _parse(path, i, "timestamp", r["timestamp"], float) if r.get("timestamp") else 0.0
        grouped[wid].append((r["anchor_id"], rssi, ts))
    return [average_window(grouped[w], window_seconds, w) for w in sorted(grouped)]


def read_estimates(path: Path) -> list[Estimate]:
    out = []
    for i, r in enumerate(_read_csv(path, ESTIMATES_HEADER), start=2):
        cell = None
        if r["cell_col"] != "" and r["cell_row"] != "":
            cell = GridCell(_parse(path, i, "cell_col", r["cell_col"], int), _parse(path, i, "cell_row", r["cell_row"], int))
        out.append(
            Estimate(
                _parse(path, i, "window_id", r["window_id"], int),
                Point(_parse(path, i, "x", r["x"], float), _parse(path, i, "y", r["y"], float)),
                _parse(path, i, "method", r["method"], Method),
                cell,
            )
        )
    return out


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# ---------------------------------------------------------------- commands


def _resolve_scenario(spec: str | None, preset: str | None, seed: int | None) -> Scenario:
    name = preset or spec
    if name is None:
        raise ValidationError("give a scenario file or --preset")
    scenario = load_scenario(name)
    return scenario if seed is None else scenario.with_seed(seed)


def cmd_simulate(scenario: Scenario, out_dir: Path) -> list[Path]:
    trace, windows = run(scenario)
    truth = out_dir / "truth.csv"
    samples = out_dir / "samples.csv"
    deployment = out_dir / "deployment.json"
    model = out_dir / "model.json"
    write_atomic(truth, _csv_text(TRUTH_HEADER, ((w, fmt(p.x), fmt(p.y)) for w, p in trace)))
    write_atomic(
        samples,
        _csv_text(
            SAMPLES_HEADER,
            ((w.window_id, a, fmt(w.readings[a])) for w in windows for a in sorted(w.readings)),
        ),
    )
    write_atomic(deployment, _canonical_json(scenario.deployment.to_dict()))
    write_atomic(model, _canonical_json(scenario.model.to_dict()))
    outputs = [truth, samples, deployment, model]
    config = dict(scenario.to_dict(), min_distance_floor=MIN_DISTANCE)
    outputs.append(
        write_manifest(out_dir, "simulate", config=config, outputs=outputs, seed=scenario.seed, scenario=scenario.to_dict())
    )
    return outputs


def cmd_locate(
    deployment: Deployment,
    model: PathLossModel,
    samples_path: Path,
    config: EstimatorConfig,
    out_path: Path,
) -> list[Path]:
    windows = read_windows(samples_path, config.window_seconds)
    result = run_batch(config, deployment, model, windows)
    rows = (
        (
            e.window_id,
            fmt(e.position.x),
            fmt(e.position.y),
            e.method.value,
            "" if e.cell is None else e.cell.col,
            "" if e.cell is None else e.cell.row,
        )
        for e in result.estimates
    )
    skips_path = out_path.parent / "skips.csv"
    write_atomic(out_path, _csv_text(ESTIMATES_HEADER, rows))
    write_atomic(skips_path, _csv_text(SKIPS_HEADER, ((s.window_id, s.reason) for s in result.skips)))
    for s in result.skips:
        log.warning("skipped window %d: %s", s.window_id, s.reason)
    outputs = [out_path, skips_path]
    echo = {
        "estimator": config.to_dict(),
        "deployment": deployment.to_dict(),
        "model": model.to_dict(),
        "samples_sha256": hashlib.sha256(samples_path.read_bytes()).hexdigest(),
    }
    outputs.append(write_manifest(out_path.parent, "locate", config=echo, outputs=outputs))
    return outputs


def cmd_report(
    truth_path: Path,
    estimates_path: Path,
    out_dir: Path,
    bins: Sequence[float] = DEFAULT_BIN_EDGES,
    surface: tuple[int, int] | None = None,
) -> list[Path]:
    truth = read_truth(truth_path)
    estimates = read_estimates(estimates_path)
    report = build_report(truth, estimates, bins)
    grid = error_surface(truth, estimates, *surface) if surface else None

    outputs = [out_dir / "report.json", out_dir / "report.csv"]
    write_atomic(outputs[0], _canonical_json(report.to_dict()))
    write_atomic(
        outputs[1],
        _csv_text(
            REPORT_HEADER,
            (
                (w.window_id, fmt(w.truth.x), fmt(w.truth.y), fmt(w.estimate.x), fmt(w.estimate.y), fmt(w.error), w.method)
                for w in report.per_window
            ),
        ),
    )
    if grid is not None:
        path = out_dir / "surface.csv"
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows([[fmt(v) for v in row] for row in grid])
        write_atomic(path, buf.getvalue())
        outputs.append(path)
    echo = {
        "bins": list(bins),
        "surface": list(surface) if surface else None,
        "truth_sha256": hashlib.sha256(truth_path.read_bytes()).hexdigest(),
        "estimates_sha256": hashlib.sha256(estimates_path.read_bytes()).hexdigest(),
    }
    outputs.append(write_manifest(out_dir, "report", config=echo, outputs=outputs))
    return outputs


def sigma_seed(seed: int, sigma: float) -> int:
    """Per-sigma sub-seed; depends only on the base seed and the sigma value."""
    h = hashlib.blake2b(f"{seed}:{sigma!r}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "little")


def sweep_sigma_rows(scenario: Scenario, sigmas: Sequence[float], config: EstimatorConfig) -> list[dict[str, Any]]:
    unique = list(dict.fromkeys(float(s) for s in sigmas))
    if not unique:
        raise ValidationError("no sigma values given")
    if len(unique) != len(sigmas):
        log.warning("duplicate sigma values dropped: %s -> %s", list(sigmas), unique)
    rows = []
    for sigma in unique:
        sc = scenario.with_model(scenario.model.with_sigma(sigma)).with_seed(sigma_seed(scenario.seed, sigma))
        trace, windows = run(sc)
        for baseline in (False, True):
            cfg = EstimatorConfig(config.window_seconds, config.near_radius_fraction, config.clamp_policy, baseline)
            result = run_batch(cfg, sc.deployment, sc.model, windows)
            summary = build_report(trace, result.estimates).summary
            method = Method.CENTROID_BASELINE if baseline else Method.REFINED
            rows.append(dict(summary, sigma=sigma, method=method.value))
    return rows


def cmd_sweep_sigma(scenario: Scenario, sigmas: Sequence[float], out_dir: Path, config: EstimatorConfig) -> list[Path]:
    rows = sweep_sigma_rows(scenario, sigmas, config)

    def cell(v):
        return "" if v is None else fmt(v)

    path = out_dir / "summary.csv"
    write_atomic(
        path,
        _csv_text(
            SUMMARY_HEADER,
            ((fmt(r["sigma"]), r["method"], r["count"], r["skipped"], cell(r["mean"]), cell(r["median"]), cell(r["p95"])) for r in rows),
        ),
    )
    echo = {"scenario": scenario.to_dict(), "sigmas": list(dict.fromkeys(r["sigma"] for r in rows)), "estimator": config.to_dict()}
    return [path, write_manifest(out_dir, "sweep-sigma", config=echo, outputs=[path], seed=scenario.seed, scenario=scenario.to_dict())]


def cmd_profile(model: PathLossModel, distances: Sequence[float], trials: int, seed: int, out_path: Path) -> list[Path]:
    prof = ranging_profile(model, distances, trials, seed)
    write_atomic(out_path, _csv_text(("distance", "mean_abs_error"), ((fmt(d), fmt(e)) for d, e in prof)))
    echo = {"model": model.to_dict(), "distances": list(distances), "trials": trials}
    return [out_path, write_manifest(out_path.parent, "profile", config=echo, outputs=[out_path], seed=seed)]


# ---------------------------------------------------------------- argument parsing


def _estimator_config(args) -> EstimatorConfig:
    cfg = load_config(args.config) if args.config else EstimatorConfig()
    data = cfg.to_dict()
    if args.clamp:
        data["clamp_policy"] = "clamp"
    if getattr(args, "baseline", None) == "centroid":
        data["baseline_enabled"] = True
    return config_from_dict(data)


def _deployment_arg(spec: str) -> Deployment:
    if spec in SCENARIO_PRESETS:
        return load_scenario(spec).deployment
    return load_deployment(spec)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridloc", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate truth positions and RSSI windows")
    p.add_argument("scenario", nargs="?", help="scenario JSON file or preset name")
    p.add_argument("--preset", choices=SCENARIO_PRESETS)
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("locate", help="estimate positions from RSSI samples")
    p.add_argument("--deployment", help="deployment JSON file or scenario preset name")
    p.add_argument("--model", help=f"model JSON file or preset ({', '.join(MODEL_PRESETS)})")
    p.add_argument("--preset", choices=SCENARIO_PRESETS, help="take deployment and model from a scenario preset")
    p.add_argument("--samples", type=Path, required=True)
    p.add_argument("--config", type=Path, help="estimator config JSON")
    p.add_argument("--clamp", action="store_true", help="clamp refined positions to their cell")
    p.add_argument("--baseline", choices=["centroid"], help="use the weighted-centroid baseline instead")
    p.add_argument("--out", type=Path, required=True, help="estimates CSV path")

    p = sub.add_parser("report", help="error statistics for estimates against truth")
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--estimates", type=Path, required=True)
    p.add_argument("--bins", type=_float_list, default=list(DEFAULT_BIN_EDGES), help="ascending bin edges in meters")
    p.add_argument("--surface", type=int, nargs=2, metavar=("NX", "NY"), help="also write an NX x NY error surface")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("sweep-sigma", help="refined vs centroid-baseline error across noise levels")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--preset", choices=SCENARIO_PRESETS)
    p.add_argument("--seed", type=int)
    p.add_argument("--sigmas", type=_float_list, required=True)
    p.add_argument("--config", type=Path)
    p.add_argument("--clamp", action="store_true")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("profile", help="mean ranging error against true distance")
    p.add_argument("--model", required=True)
    p.add_argument("--distances", type=_float_list, default=[1, 2, 3, 4, 5, 6, 8, 10, 15, 20])
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "simulate":
            outputs = cmd_simulate(_resolve_scenario(args.scenario, args.preset, args.seed), args.out)
        elif args.command == "locate":
            preset = load_scenario(args.preset) if args.preset else None
            if not (args.deployment or preset) or not (args.model or preset):
                raise ValidationError("locate needs --deployment and --model, or --preset")
            deployment = _deployment_arg(args.deployment) if args.deployment else preset.deployment
            model = load_model(args.model) if args.model else preset.model
            outputs = cmd_locate(deployment, model, args.samples, _estimator_config(args), args.out)
        elif args.command == "report":
            outputs = cmd_report(args.truth, args.estimates, args.out, args.bins, tuple(args.surface) if args.surface else None)
        elif args.command == "sweep-sigma":
            scenario = _resolve_scenario(args.scenario, args.preset, args.seed)
            outputs = cmd_sweep_sigma(scenario, args.sigmas, args.out, _estimator_config(args))
        else:
            outputs = cmd_profile(load_model(args.model), args.distances, args.trials, args.seed, args.out)
    except UnknownAnchorError as exc:
        print(f"gridloc: error: {exc}", file=sys.stderr)
        return 1
    except (GridlocError, OSError, ValueError) as exc:
        print(f"gridloc: error: {exc}", file=sys.stderr)
        return 2
    for path in outputs:
        log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
