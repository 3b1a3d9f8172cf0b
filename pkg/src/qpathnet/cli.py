"""Command line runner: execute scenario configs or presets, emit artifacts.

    qpathnet run <config.json | preset:NAME> --out DIR [--mode ...] [...]
    qpathnet report <summary.json> [...] [--out DIR]

Exit codes: 0 success, 2 malformed config, 3 engine failure (for instance a
forbidden transition where a weak mean is requested).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .classical import chain_comparator, classical_mean, classical_paths, comparator_path_key
from .config import (
    ClassicalSettings,
    ConfigError,
    RunSettings,
    ScenarioConfig,
    export_config,
    load_config,
    parse_config,
)
from .meter import (
    default_grid,
    joint_reading_distribution,
    mean_reading,
    reading_distribution,
    strong_limit_bins,
    weak_limit_report,
)
from .paths import (
    ForbiddenTransitionError,
    amplitude_distribution,
    relative_amplitudes,
    strong_mean,
    weak_value,
)
from .sampling import sample_trials
from .scenarios import build_preset

DIGITS = 12  # significant digits in rendered reports


def _fmt(x) -> str:
    return f"{float(x):.{DIGITS}g}"


def _load(source: str) -> ScenarioConfig:
    if source.startswith("preset:"):
        preset = build_preset(source.removeprefix("preset:"))
        doc = export_config(
            preset.name,
            preset.chain,
            preset.meters,
            RunSettings(widths=preset.sweep_widths),
        )
        return parse_config(doc)
    return load_config(source)


def _with_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    run = config.run
    updates = {}
    if args.mode:
        updates["mode"] = args.mode
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.grid_step is not None:
        updates["grid_step"] = args.grid_step
    if args.grid_extent is not None:
        updates["grid_pad"] = args.grid_extent
    if updates:
        run = RunSettings(
            mode=updates.get("mode", run.mode),
            seed=updates.get("seed", run.seed),
            trials=updates.get("trials", run.trials),
            widths=run.widths,
            grid_step=updates.get("grid_step", run.grid_step),
            grid_pad=updates.get("grid_pad", run.grid_pad),
        )
    return ScenarioConfig(
        config.name, config.chain, config.functionals, config.meters, run, config.classical
    )


def _grid_for(config: ScenarioConfig, meter):
    if config.run.grid_step is None and config.run.grid_pad is None:
        return None
    dist = amplitude_distribution(config.chain, meter.functional)
    return default_grid(dist, meter.profile, step=config.run.grid_step, pad=config.run.grid_pad)


def _run_exact(config: ScenarioConfig, out: Path) -> dict:
    chain = config.chain
    meters = config.meters
    summary: dict = {"name": config.name, "mode": "exact", "dim": chain.dim, "meters": []}
    for i, meter in enumerate(meters):
        dist = reading_distribution(chain, meter, _grid_for(config, meter))
        csv_name = f"distribution_m{i}.csv"
        dist.write_csv(out / csv_name)
        wv = weak_value(chain, meter.functional)
        rel = relative_amplitudes(chain, meter.functional)
        bins = strong_limit_bins(chain, meter.functional)
        summary["meters"].append(
            {
                "index": i,
                "shape": meter.profile.shape,
                "width": meter.profile.width,
                "norm": dist.norm,
                "mean_reading": mean_reading(dist),
                "strong_mean": strong_mean(chain, meter.functional),
                "weak_value_re": wv.real,
                "weak_value_im": wv.imag,
                "strong_bins": [[f, m] for f, m in sorted(bins.items())],
                "relative_amplitudes": [[f, a.real, a.imag] for f, a in sorted(rel.items())],
                "distribution_csv": csv_name,
            }
        )
    head = summary["meters"][0]
    for key in ("strong_mean", "weak_value_re", "weak_value_im", "norm", "mean_reading"):
        summary[key] = head[key]
    if len(meters) >= 2:
        joint = joint_reading_distribution(chain, list(meters))
        summary["weak_marginals"] = [joint.marginal_mean(r) for r in range(len(meters))]
    return summary


def _run_sweep(config: ScenarioConfig, out: Path) -> dict:
    widths = config.run.widths
    if not widths:
        raise ConfigError("run.widths: sweep mode needs a list of widths")
    report = weak_limit_report(config.chain, config.meters[0].functional, widths)
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["width", "mean", "abs_error"])
        for w, m, e in zip(report.widths, report.means, report.errors):
            writer.writerow([repr(w), repr(m), repr(e)])
    return {
        "name": config.name,
        "mode": "sweep",
        "dim": config.chain.dim,
        "widths": list(report.widths),
        "means": list(report.means),
        "errors": list(report.errors),
        "limit": report.limit,
        "weak_value_re": report.weak.real,
        "weak_value_im": report.weak.imag,
        "monotone": report.monotone,
        "sweep_csv": "sweep.csv",
    }


def _run_sample(config: ScenarioConfig, out: Path) -> dict:
    trials = sample_trials(
        config.chain, list(config.meters), config.run.trials, config.run.seed
    )
    trials.write_csv(out / "trials.csv")
    s = trials.summary()
    return {
        "name": config.name,
        "mode": "sample",
        "dim": config.chain.dim,
        "seed": config.run.seed,
        "trials": s.n_trials,
        "success_count": s.n_success,
        "success_rate": s.success_rate,
        "exact_success_probability": s.exact_success_probability,
        "meters": [
            {
                "index": i,
                "empirical_mean": m.conditional_mean,
                "standard_error": m.standard_error,
                "exact_mean": m.exact_mean,
                "z_score": m.z_score,
            }
            for i, m in enumerate(s.meters)
        ],
        "trials_csv": "trials.csv",
    }


def _classical_settings(config: ScenarioConfig) -> ClassicalSettings:
    if config.classical is not None:
        return config.classical
    # derive the comparator network from the quantum chain
    network = chain_comparator(config.chain)
    values = None
    if config.meters:
        functional_values = config.meters[0].functional.values(config.chain)
        shape = (config.chain.dim,) * config.chain.n_steps
        values = []
        for path in classical_paths(network):
            indices, _ = comparator_path_key(path)
            values.append(float(functional_values[np.ravel_multi_index(indices, shape)]))
        values = tuple(values)
    return ClassicalSettings(network, values, frozenset({"f0"}))


def _run_classical(config: ScenarioConfig, out: Path) -> dict:
    settings = _classical_settings(config)
    paths = classical_paths(settings.network)
    with open(out / "classical_paths.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "receptacle", "probability", "value"])
        for i, p in enumerate(paths):
            hops = "|".join(f"{name}:{inlet}->{outlet}" for name, inlet, outlet in p.hops)
            value = settings.values[i] if settings.values is not None else ""
            writer.writerow([hops, p.receptacle, repr(p.probability), value])
    summary = {
        "name": config.name,
        "mode": "classical",
        "dim": config.chain.dim if config.chain is not None else None,
        "n_paths": len(paths),
        "probabilities": [p.probability for p in paths],
        "receptacles": sorted({p.receptacle for p in paths}),
        "paths_csv": "classical_paths.csv",
    }
    if settings.values is not None:
        condition = settings.condition or {p.receptacle for p in paths}
        summary["condition"] = sorted(condition)
        summary["conditional_mean"] = classical_mean(
            settings.network, settings.values, set(condition)
        )
    return summary


def run(source: str, out_dir, args=None) -> dict:
    """Execute one scenario and write its artifacts; returns the summary."""
    config = _load(source)
    if args is not None:
        config = _with_overrides(config, args)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mode = config.run.mode
    if mode != "classical" and config.chain is None:
        raise ConfigError(f"run.mode: mode {mode!r} needs a quantum system section")
    runner = {
        "exact": _run_exact,
        "sweep": _run_sweep,
        "sample": _run_sample,
        "classical": _run_classical,
    }[mode]
    summary = runner(config, out)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary


_METRIC_ORDER = (
    "strong_mean",
    "weak_value_re",
    "weak_value_im",
    "norm",
    "mean_reading",
    "limit",
    "success_rate",
    "exact_success_probability",
    "conditional_mean",
)


def report(summary_paths, out_dir=None) -> str:
    """Consolidate run summaries into one table (and plot-ready CSV files)."""
    summaries = []
    for path in summary_paths:
        with open(path) as fh:
            summaries.append((Path(path), json.load(fh)))
    dims = {s.get("dim") for _, s in summaries if s.get("dim") is not None}
    if len(dims) > 1:
        raise ValueError(f"refusing to mix summaries of different dimensions: {sorted(dims)}")

    rows: list[tuple[str, str, str]] = []
    for path, s in summaries:
        label = f"{s.get('name', path.stem)}/{s.get('mode', '?')}"
        for metric in _METRIC_ORDER:
            if metric in s and isinstance(s[metric], (int, float)):
                rows.append((label, metric, _fmt(s[metric])))
        if "weak_marginals" in s:
            for i, v in enumerate(s["weak_marginals"]):
                rows.append((label, f"weak_marginal_{i}", _fmt(v)))
        for m in s.get("meters", []):
            if "empirical_mean" in m:
                i = m["index"]
                rows.append((label, f"meter{i}_empirical_mean", _fmt(m["empirical_mean"])))
                rows.append((label, f"meter{i}_standard_error", _fmt(m["standard_error"])))
                rows.append((label, f"meter{i}_z_score", _fmt(m["z_score"])))

    # pair empirical and exact runs of one scenario: z-score of the sampled
    # conditional mean against the exact mean reading
    by_name: dict[str, dict[str, dict]] = {}
    for _, s in summaries:
        by_name.setdefault(s.get("name", ""), {})[s.get("mode", "")] = s
    for name, modes in sorted(by_name.items()):
        if "sample" in modes and "exact" in modes:
            sample, exact = modes["sample"], modes["exact"]
            for m_s, m_e in zip(sample.get("meters", []), exact.get("meters", [])):
                se = m_s.get("standard_error") or 0.0
                if se:
                    z = (m_s["empirical_mean"] - m_e["mean_reading"]) / se
                    rows.append(
                        (f"{name}/sample-vs-exact", f"meter{m_s['index']}_z_score", _fmt(z))
                    )

    width_a = max((len(r[0]) for r in rows), default=6)
    width_b = max((len(r[1]) for r in rows), default=6)
    lines = [f"{'source':<{width_a}}  {'metric':<{width_b}}  value"]
    lines += [f"{a:<{width_a}}  {b:<{width_b}}  {c}" for a, b, c in rows]
    table = "\n".join(lines)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["source", "metric", "value"])
            writer.writerows(rows)
        for path, s in summaries:
            if s.get("mode") == "sweep":
                with open(out / f"plot_{s['name']}_sweep.csv", "w", newline="") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(["width", "mean"])
                    for w, m in zip(s["widths"], s["means"]):
                        writer.writerow([repr(w), repr(m)])
            elif s.get("mode") == "exact":
                src = path.parent / s["meters"][0]["distribution_csv"]
                if src.exists():
                    (out / f"plot_{s['name']}_distribution.csv").write_text(src.read_text())
        (out / "report.txt").write_text(table + "\n")
    return table


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpathnet",
        description="Pointer statistics of sequential measurements on small quantum systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario config or preset")
    p_run.add_argument("source", help="path to a config JSON, or preset:NAME")
    p_run.add_argument("out", nargs="?", default=None, help="output directory (or use --out)")
    p_run.add_argument("--out", dest="out_flag", default=None)
    p_run.add_argument("--mode", choices=("exact", "sweep", "sample", "classical"), default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--grid-step", type=float, default=None)
    p_run.add_argument("--grid-extent", type=float, default=None, help="grid padding in profile widths")

    p_report = sub.add_parser("report", help="consolidate run summaries")
    p_report.add_argument("summaries", nargs="+")
    p_report.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            out = args.out_flag or args.out
            if out is None:
                print("error: run needs an output directory", file=sys.stderr)
                return 2
            summary = run(args.source, out, args)
            print(f"wrote {summary['mode']} artifacts for {summary['name']!r} to {out}")
            return 0
        table = report(args.summaries, args.out)
        print(table)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ForbiddenTransitionError as exc:
        print(
            f"engine error: {exc}\n"
            "remedy: choose pre/post states with a nonzero overlap, or use the "
            "strong-limit bins instead of a weak mean",
            file=sys.stderr,
        )
        return 3
    except (ValueError, OSError) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
