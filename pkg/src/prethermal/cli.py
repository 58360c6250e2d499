"""Command-line front end: ``prethermal {run,sweep,scaling,analyze}``."""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import io
from .config import _CONVERTERS, ConfigError, RunConfig, parse_config
from .fits import FitRefused, fit_heating_exponent, fit_timescales
from .observables import fourier_spectrum
from .simulation import simulate
from .studies import SweepDataset, run_sweep

log = logging.getLogger("prethermal")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _fit_dict(fit) -> dict | None:
    if fit is None:
        return None
    return {
        "lyapunov": fit.lyapunov,
        "tau_pth": fit.tau_pth,
        "tau_th": fit.tau_th,
        "heating_exponent": fit.heating_exponent,
        "tau_units": "periods",
        "diagnostics": fit.diagnostics,
    }


def _metadata(config: RunConfig, **extra) -> dict:
    return {"config": config.to_dict(), "config_hash": config.content_hash(), "version": __version__, **extra}


def _manifest(config: RunConfig, out: Path, files: list[str], status: str, started: str, **extra) -> dict:
    return {
        "config": config.to_dict(),
        "config_hash": config.content_hash(),
        "version": __version__,
        "status": status,
        "started": started,
        "finished": _now(),
        "files": {name: _sha256(out / name) for name in files if (out / name).exists()},
        **extra,
    }


def run_single(config: RunConfig, resume: bool = False) -> int:
    """Single or twin run with all outputs under ``config.output``."""
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    meta = _metadata(config)
    checkpoint_path = out / "checkpoint.bin"
    state = None
    if resume:
        if not checkpoint_path.exists():
            raise FileNotFoundError(f"no checkpoint at {checkpoint_path}")
        state, header = io.read_checkpoint(checkpoint_path)
        if header["config"] != config.to_dict():
            raise ConfigError("checkpoint was written by a different configuration")
        log.info("resuming from period %d", state.period)

    def on_checkpoint(s):
        io.write_checkpoint(checkpoint_path, s, config.to_dict())

    files: list[str] = []
    try:
        res = simulate(
            config.L, config.params, config.ic, config.n_periods, config.plan,
            twin=config.mode == "twin",
            stop_at_thermalization=config.stop_at_thermalization,
            renormalize_every=config.renormalize_every,
            checkpoint_every=config.checkpoint_every,
            on_checkpoint=on_checkpoint,
            resume=state,
        )
        io.write_trajectory(out / "trajectory.csv", res.record, meta)
        files.append("trajectory.csv")
        if res.window_m is not None:
            n = min(res.window_m.size, res.completed_periods - res.window[0] + 1)
            io.write_window(out / "window.csv", res.window[0], res.window_m[:n], meta)
            files.append("window.csv")
            if n >= 16:
                spectrum = res.spectrum(float(config.omega), candidates=config.point().candidates)
                io.write_spectrum(out / "spectrum.csv", spectrum, meta)
                files.append("spectrum.csv")
        if res.record.d is not None:
            fit = fit_timescales(res.record)
            (out / "timescales.json").write_text(json.dumps(_fit_dict(fit), indent=2, sort_keys=True) + "\n")
            files.append("timescales.json")
        for t, (a, b) in sorted(res.snapshots.items()):
            name = f"slice_t{t}.csv"
            io.write_slice(out / name, a, b, config.slice_axis, config.slice_layer, {**meta, "period_index": t})
            files.append(name)
            ext = "csv" if config.snapshot_format == "csv" else "bin"
            snap_meta = {"seed": config.seed, "W": float(config.W), "delta": float(config.delta), "period_index": t}
            io.save_snapshot(out / f"snapshot_t{t}.{ext}", a, snap_meta, config.snapshot_format)
            files.append(f"snapshot_t{t}.{ext}")
            if b is not None:
                io.save_snapshot(out / f"snapshot_twin_t{t}.{ext}", b, snap_meta, config.snapshot_format)
                files.append(f"snapshot_twin_t{t}.{ext}")
    except Exception as exc:
        io.write_manifest(out / "manifest.json",
                          _manifest(config, out, files, "partial", started, error=str(exc)))
        raise
    io.write_manifest(out / "manifest.json", _manifest(
        config, out, files, "complete", started,
        completed_periods=res.completed_periods, stopped_early=res.stopped_early,
        seeds={"initial_state": config.seed},
    ))
    return 0


def _coord_name(g, omega, L) -> str:
    g = str(g).replace("/", "o")
    return f"g{g}_w{omega}_L{L}"


def write_dataset(dataset: SweepDataset, config: RunConfig, out: Path, started: str) -> bool:
    """Persist a sweep; returns True when every point succeeded."""
    out.mkdir(parents=True, exist_ok=True)
    meta = _metadata(config)
    rows = {k: [] for k in ("g", "omega", "L", "R", "detected_order", "peak_frequency", "peak_amplitude",
                            "tau_pth", "tau_pth_std", "tau_th", "tau_th_std", "lyapunov", "lyapunov_std")}
    manifest_entries = []
    files = []
    ok = True
    for (g, w, L), entry in dataset.entries.items():
        name = _coord_name(g, w, L)
        pdir = out / "points" / name
        pdir.mkdir(parents=True, exist_ok=True)
        point_meta = {**meta, "coords": {"g": str(g), "omega": w, "L": L}}
        point_files = {}
        realizations = entry.ensemble.realizations if entry.ensemble else ([entry.result] if entry.result else [])
        seeds = []
        for r, res in enumerate(realizations):
            if isinstance(res, Exception):
                continue
            seeds.append(res.point.ic.seed)
            fname = f"trajectory_r{r}.csv"
            io.write_trajectory(pdir / fname, res.record, {**point_meta, "seed": res.point.ic.seed})
            point_files[fname] = f"points/{name}/{fname}"
        if entry.spectrum is not None:
            io.write_spectrum(pdir / "spectrum.csv", entry.spectrum, point_meta)
            point_files["spectrum.csv"] = f"points/{name}/spectrum.csv"
        summary = {"fit": _fit_dict(entry.fit), "run": entry.result.summary() if entry.result else None}
        if entry.ensemble:
            summary["ensemble"] = {k: vars(getattr(entry.ensemble, k)) for k in ("tau_pth", "tau_th", "lyapunov")}
        (pdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        point_files["summary.json"] = f"points/{name}/summary.json"
        files.extend(point_files.values())
        if entry.error:
            ok = False
        manifest_entries.append({"coords": {"g": str(g), "omega": w, "L": L}, "files": point_files,
                                 "seeds": seeds, "error": entry.error})
        sp, fit, ens = entry.spectrum, entry.fit, entry.ensemble
        rows["g"].append(float(g))
        rows["omega"].append(float(w))
        rows["L"].append(int(L))
        rows["R"].append(len(realizations))
        rows["detected_order"].append(float(sp.detected_order) if sp and sp.detected_order else float("nan"))
        rows["peak_frequency"].append(sp.peak_frequency if sp else float("nan"))
        rows["peak_amplitude"].append(sp.peak_amplitude if sp else float("nan"))
        for key in ("tau_pth", "tau_th", "lyapunov"):
            if ens:
                stat = getattr(ens, key)
                mean, std = stat.mean, stat.std
            else:
                mean, std = (getattr(fit, key) if fit else None), None
            rows[key].append(float("nan") if mean is None else float(mean))
            rows[key + "_std"].append(float("nan") if std is None else float(std))
    io.write_csv(out / "sweep.csv", rows, meta)
    files.append("sweep.csv")
    io.write_manifest(out / "manifest.json", _manifest(
        config, out, files, "complete" if ok else "partial", started, entries=manifest_entries,
    ))
    return ok


def run_grid(config: RunConfig) -> int:
    started = _now()
    dataset = run_sweep(config.sweep_spec(), workers=config.workers)
    ok = write_dataset(dataset, config, Path(config.output), started)
    return 0 if ok else 1


def analyze(path: Path, d_inf: float | None = None) -> dict:
    """Re-run the fits on stored trajectories (a run directory, sweep directory or one CSV)."""
    from .observables import D_INF

    d_inf = d_inf or D_INF
    if path.is_file():
        trajectories = [path]
    else:
        trajectories = sorted(path.glob("trajectory*.csv")) + sorted(path.glob("points/*/trajectory*.csv"))
    results = {}
    heating_points = []
    for tpath in trajectories:
        record, meta = io.read_trajectory(tpath)
        entry = {}
        if record.d is not None:
            fit = fit_timescales(record, d_inf)
            entry["fit"] = _fit_dict(fit)
            omega = meta.get("coords", {}).get("omega", meta.get("config", {}).get("omega"))
            if omega is not None:
                heating_points.append((float(omega), fit.tau_th))
        window = tpath.parent / "window.csv"
        if window.exists():
            start, m, wmeta = io.read_window(window)
            omega = float(wmeta["config"]["omega"])
            spec = fourier_spectrum(m, omega)
            entry["spectrum"] = {"peak_frequency": spec.peak_frequency, "peak_amplitude": spec.peak_amplitude,
                                 "detected_order": None if spec.detected_order is None else str(spec.detected_order)}
        results[str(tpath)] = entry
    out = {"trajectories": results}
    if len({w for w, _ in heating_points}) >= 3:
        try:
            c, diag = fit_heating_exponent(heating_points)
            out["heating_exponent"] = {"c": c, **diag}
        except FitRefused as exc:
            out["heating_exponent"] = {"refused": str(exc)}
    return out


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", nargs="?", help="configuration file (key = value lines)")
    group = parser.add_argument_group("configuration overrides")
    for key in _CONVERTERS:
        group.add_argument(f"--{key}", dest=f"cfg_{key}", metavar="VALUE", help=argparse.SUPPRESS)
    group.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any configuration key (flags named after each key also work)")


def _load_config(args, mode: str | None) -> RunConfig:
    text = Path(args.config).read_text() if args.config else ""
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value
    if mode is not None:
        overrides["mode"] = mode
    return parse_config(text, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prethermal", description="Driven classical spin lattice simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single or twin run (or whatever mode the config names)")
    _add_config_flags(p)
    p.add_argument("--resume", action="store_true", help="continue from OUTPUT/checkpoint.bin")

    p = sub.add_parser("sweep", help="grid over g / omega / L")
    _add_config_flags(p)

    p = sub.add_parser("scaling", help="size scaling with ceil(28^3/N) realizations per size")
    _add_config_flags(p)

    p = sub.add_parser("analyze", help="re-run fits on stored trajectories")
    p.add_argument("path", help="run directory, sweep directory or trajectory CSV")
    p.add_argument("--output", help="write the analysis JSON here instead of stdout")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "analyze":
            result = analyze(Path(args.path))
            text = json.dumps(result, indent=2, sort_keys=True, default=str)
            if args.output:
                Path(args.output).write_text(text + "\n")
            else:
                print(text)
            return 0
        mode = {"sweep": "sweep", "scaling": "scaling"}.get(args.command)
        config = _load_config(args, mode)
        if config.mode in ("single", "twin"):
            return run_single(config, resume=getattr(args, "resume", False))
        return run_grid(config)
    except ConfigError as exc:
        print(f"prethermal: configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"prethermal: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
