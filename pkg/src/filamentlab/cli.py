"""Experiment driver: config parsing, run orchestration, artifact output.

Configs are flat ``key = value`` text files (``#`` starts a comment).
Every canonical experiment fills unspecified keys with its reference
parameters, so a file containing only ``experiment = FdBackwardFixed``
reproduces the standard backward run.  Command-line ``--key value``
pairs override file keys.

Outputs per run: ``report.json`` (parameters, probe records, events),
``curvature_t*.csv`` per probe, ``energy.csv``, ``origin.csv``,
``spectrum_t*.csv`` (spectral runs), ``final_field.csv`` and
``manifest.json`` (config echo, package version, wall time).  Runs are
deterministic: identical configs produce byte-identical reports and CSV
files (the manifest's wall time is the only varying field).

Exit codes: 0 success, 2 validation/parse error, 3 solver error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .chebyshev import ChebyshevGrid
from .diagnostics import RunReport, write_columns_csv
from .errors import FilamentError, ParseError, ValidationError
from .fd import FdBcKind, UniformGrid, fd_run_backward, fd_run_forward
from .geometry import Metric
from .profiles import SelfSimilarParams
from .spectral import (SpectralBcKind, spectral_run_backward,
                       spectral_run_forward_two_stage)

OUTPUT_ROOT_ENV = "FILAMENTLAB_OUT"

EXPERIMENTS = (
    "FdBackwardFixed",
    "FdBackwardAsymptotic",
    "FdForward",
    "SpectralBackward",
    "SpectralAdaptiveBackward",
    "SpectralForwardTwoStage",
)

# canonical parameter sets, one per experiment
_DEFAULTS = {
    "FdBackwardFixed": dict(
        metric="euclidean", c0=0.2, L=50.0, ds=0.01, dt=-5e-5, t_end=0.1,
        bc="fixed", probes=[1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1]),
    "FdBackwardAsymptotic": dict(
        metric="euclidean", c0=0.2, L=10.0, ds=0.01, dt=-5e-5, t_end=0.1,
        bc="asymptotic", probes=[1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1]),
    "FdForward": dict(
        metric="euclidean", c0=0.2, L=50.0, ds=0.01, dt=5e-5, t_end=0.25,
        probes=[0.025, 0.05, 0.075, 0.1, 0.125, 0.15, 0.175, 0.2, 0.225, 0.25]),
    "SpectralBackward": dict(
        metric="euclidean", c0=0.2, L=10.0, N=2048, dt=-1e-6, t_end=0.03,
        bc="projected", adaptive=False, threshold=2e-4,
        probes=[0.05, 0.04, 0.03]),
    "SpectralAdaptiveBackward": dict(
        metric="euclidean", c0=0.2, L=10.0, N=1024, dt=-2e-6, t_end=2.67e-3,
        bc="projected", adaptive=True, threshold=2e-4,
        probes=[4.91e-2, 3.24e-2, 1.22e-2, 6.09e-3, 2.67e-3]),
    "SpectralForwardTwoStage": dict(
        metric="euclidean", c0=0.2, L=50.0, N=16384, dt=1e-5, t_switch=0.3,
        L2=10.0, N2=1024, t_end=1.5,
        probes=[0.1, 0.2, 0.3, 0.5, 1.0, 1.5]),
}

_KEY_TYPES = {
    "experiment": str, "metric": str, "bc": str,
    "c0": float, "L": float, "ds": float, "dt": float, "t_end": float,
    "t_switch": float, "L2": float, "N2": int, "N": int,
    "threshold": float, "adaptive": bool, "probes": list,
    "out_dir": str, "deterministic": bool,
}

_FD_BC = {"fixed": FdBcKind.FIXED_FIRST_ORDER,
          "asymptotic": FdBcKind.ASYMPTOTIC_SECOND_ORDER}
_SPECTRAL_BC = {"projected": SpectralBcKind.PROJECTED_SECOND_ORDER,
                "selfsim": SpectralBcKind.SELF_SIMILARITY,
                "radiation": SpectralBcKind.RADIATION}


@dataclass
class ExperimentConfig:
    experiment: str
    metric: str = "euclidean"
    c0: float = 0.2
    L: float = 10.0
    N: int | None = None
    ds: float | None = None
    dt: float = -1e-5
    t_end: float = 0.1
    bc: str | None = None
    adaptive: bool = False
    threshold: float = 2e-4
    t_switch: float = 0.3
    L2: float = 10.0
    N2: int = 1024
    probes: list = field(default_factory=list)
    out_dir: str | None = None
    deterministic: bool = True

    @property
    def metric_enum(self) -> Metric:
        return Metric.EUCLIDEAN if self.metric == "euclidean" else Metric.HYPERBOLIC

    def to_dict(self):
        d = {k: getattr(self, k) for k in (
            "experiment", "metric", "c0", "L", "N", "ds", "dt", "t_end",
            "bc", "adaptive", "threshold", "t_switch", "L2", "N2",
            "probes", "deterministic")}
        return d


def _parse_value(key: str, raw: str, line_no: int):
    typ = _KEY_TYPES.get(key)
    if typ is None:
        raise ValidationError("unknown key", key=key)
    raw = raw.strip()
    try:
        if typ is bool:
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if typ is list:
            return [float(v) for v in raw.replace(",", " ").split()]
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ParseError(f"cannot parse value for '{key}': {raw!r}",
                         line=line_no) from exc


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse the flat key = value format and validate against the
    experiment's schema, filling canonical defaults."""
    raw: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError("expected 'key = value'", line=line_no)
        key, _, value = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ParseError("empty key", line=line_no)
        raw[key] = _parse_value(key, value, line_no)
    for key, value in (overrides or {}).items():
        raw[key] = _parse_value(key, value, 0) if isinstance(value, str) else value
    return validate_config(raw)


def validate_config(raw: dict) -> ExperimentConfig:
    if "experiment" not in raw:
        raise ValidationError("required", key="experiment")
    exp = raw["experiment"]
    if exp not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment {exp!r}; expected one of "
                              f"{', '.join(EXPERIMENTS)}", key="experiment")
    merged = dict(_DEFAULTS[exp])
    for key, value in raw.items():
        if key == "experiment":
            continue
        merged[key] = value
    cfg = ExperimentConfig(experiment=exp)
    for key, value in merged.items():
        if not hasattr(cfg, key):
            raise ValidationError("unknown key", key=key)
        setattr(cfg, key, value)

    if cfg.metric not in ("euclidean", "hyperbolic"):
        raise ValidationError("must be 'euclidean' or 'hyperbolic'", key="metric")
    if cfg.c0 < 0:
        raise ValidationError("must be >= 0", key="c0")
    if cfg.L <= 0:
        raise ValidationError("must be > 0", key="L")
    if cfg.dt == 0:
        raise ValidationError("must be nonzero", key="dt")
    backward = exp in ("FdBackwardFixed", "FdBackwardAsymptotic",
                       "SpectralBackward", "SpectralAdaptiveBackward")
    if backward and cfg.dt >= 0:
        raise ValidationError("backward experiments need dt < 0", key="dt")
    if not backward and cfg.dt <= 0:
        raise ValidationError("forward experiments need dt > 0", key="dt")
    if backward and not (0 < cfg.t_end < 1):
        raise ValidationError("backward runs need 0 < t_end < 1", key="t_end")
    if exp.startswith("Fd"):
        if cfg.ds is None or cfg.ds <= 0:
            raise ValidationError("FD experiments need ds > 0", key="ds")
        if cfg.bc is not None and cfg.bc not in _FD_BC:
            raise ValidationError("must be 'fixed' or 'asymptotic'", key="bc")
    else:
        if cfg.N is None or cfg.N < 8 or cfg.N % 2:
            raise ValidationError("spectral experiments need even N >= 8", key="N")
        if cfg.bc is not None and cfg.bc not in _SPECTRAL_BC:
            raise ValidationError("must be 'projected', 'selfsim' or 'radiation'",
                                  key="bc")
    if cfg.threshold <= 0:
        raise ValidationError("must be > 0", key="threshold")
    return cfg


def run_experiment(cfg: ExperimentConfig, out_dir) -> RunReport:
    """Dispatch to the solver and write the artifact files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t_wall = time.time()
    p = SelfSimilarParams(c0=cfg.c0, t=1.0, metric=cfg.metric_enum)
    exp = cfg.experiment
    if exp in ("FdBackwardFixed", "FdBackwardAsymptotic"):
        grid = UniformGrid.from_spacing(cfg.L, cfg.ds)
        report = fd_run_backward(p, grid, cfg.dt, _FD_BC[cfg.bc], cfg.t_end,
                                 probe_times=cfg.probes)
    elif exp == "FdForward":
        grid = UniformGrid.from_spacing(cfg.L, cfg.ds)
        report = fd_run_forward(p, grid, cfg.dt, cfg.t_end,
                                probe_times=cfg.probes)
    elif exp in ("SpectralBackward", "SpectralAdaptiveBackward"):
        grid = ChebyshevGrid(L=cfg.L, N=cfg.N)
        report = spectral_run_backward(
            p, grid, cfg.dt, _SPECTRAL_BC[cfg.bc], cfg.t_end,
            adaptive=cfg.adaptive or exp == "SpectralAdaptiveBackward",
            threshold=cfg.threshold, probe_times=cfg.probes)
    else:
        report = spectral_run_forward_two_stage(
            p,
            stage1={"L": cfg.L, "N": cfg.N, "dt": cfg.dt,
                    "t_switch": cfg.t_switch},
            stage2={"L": cfg.L2, "N": cfg.N2, "t_end": cfg.t_end},
            probe_times=cfg.probes)
    wall = time.time() - t_wall
    _write_artifacts(cfg, report, out, wall)
    return report


def _probe_nodes(cfg: ExperimentConfig, probe):
    if cfg.experiment.startswith("Fd"):
        return UniformGrid.from_spacing(cfg.L, cfg.ds).nodes
    if cfg.experiment.endswith("TwoStage") and probe.t > cfg.t_switch:
        return ChebyshevGrid(L=cfg.L2, N=probe.N).nodes
    return ChebyshevGrid(L=cfg.L, N=probe.N).nodes


def _write_artifacts(cfg: ExperimentConfig, report: RunReport, out: Path,
                     wall: float):
    report.write_json(out / "report.json")
    for idx, probe in enumerate(report.probes):
        s = _probe_nodes(cfg, probe)
        write_columns_csv(out / f"curvature_t{idx:03d}.csv", "s,c", s, probe.c)
        if probe.spectrum is not None:
            write_columns_csv(out / f"spectrum_t{idx:03d}.csv", "k,abs_ak",
                              np.arange(probe.spectrum.size), probe.spectrum)
    times = np.array([probe.t for probe in report.probes])
    write_columns_csv(out / "energy.csv", "t,energy",
                      times, np.array([probe.energy for probe in report.probes]))
    write_columns_csv(out / "origin.csv", "t,c_origin",
                      times, np.array([probe.c_origin for probe in report.probes]))
    final = report.final_state
    if final is not None:
        if hasattr(final, "values"):
            nodes = final.grid.nodes
            write_columns_csv(out / "final_field.csv", "s,Re z,Im z",
                              nodes, final.values.real, final.values.imag)
        else:
            write_columns_csv(out / "final_field.csv", "s,T1,T2,T3",
                              final.grid.nodes, final.T[:, 0], final.T[:, 1],
                              final.T[:, 2])
    manifest = {"config": cfg.to_dict(), "version": __version__,
                "wall_seconds": wall}
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def _collect_overrides(extra: list) -> dict:
    overrides = {}
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--"):
            raise ValidationError(f"unexpected argument {token!r}", key=token)
        key = token[2:]
        if "=" in key:
            key, _, value = key.partition("=")
        else:
            if i + 1 >= len(extra):
                raise ValidationError("missing value", key=key)
            i += 1
            value = extra[i]
        overrides[key] = value
        i += 1
    return overrides


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="filamentlab",
        description="Self-similar vortex-filament flow experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", help="config file path")
    run_p.add_argument("--out", help="output directory "
                       f"(default: ${OUTPUT_ROOT_ENV} or ./out)")
    sub.add_parser("list-experiments", help="list experiment names")
    val_p = sub.add_parser("validate", help="validate a config file")
    val_p.add_argument("config", help="config file path")

    args, extra = parser.parse_known_args(argv)

    if args.command == "list-experiments":
        for name in EXPERIMENTS:
            print(name)
        return 0

    try:
        overrides = _collect_overrides(extra)
        out_override = overrides.pop("out", None)
        text = Path(args.config).read_text()
        cfg = parse_config(text, overrides)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print(json.dumps(cfg.to_dict(), indent=1))
        return 0

    out_dir = (getattr(args, "out", None) or out_override or cfg.out_dir
               or os.environ.get(OUTPUT_ROOT_ENV) or "out")
    try:
        report = run_experiment(cfg, out_dir)
    except FilamentError as exc:
        print(f"solver error [{cfg.experiment}]: {exc}", file=sys.stderr)
        return 3
    print(f"{cfg.experiment}: {len(report.probes)} probes, "
          f"{len(report.events)} events -> {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
