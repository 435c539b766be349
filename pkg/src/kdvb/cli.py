"""Configuration parsing, subcommand dispatch, and artifact emission.

A run is described by one JSON document.  Common keys:

    subcommand       one of solve, energy, inviscid, rate, scaling,
                     sharpness, imethod-bounds, h1-bound
    epsilon, alpha   model parameters (epsilon in [0, 1], alpha in (0, 1])
    modes, box_length, dealias_fraction        spatial grid
    dt, t_final, snapshot_stride               time stepping
    seed             64-bit integer, defaults to 0
    out              output directory (the --out flag overrides)
    initial_data     {"kind": "soliton" | "gaussian" | "power_law" | "sine", ...}

plus one experiment block named after the subcommand (see the per-
subcommand ``_SCHEMAS``).  Unknown keys anywhere are rejected.

Artifacts are byte-deterministic for a fixed config, seed, and software
environment: results (CSV/JSON) and manifest.json never embed clocks;
wall time goes to the separate timing.json sidecar, which is excluded
from the determinism contract.

Exit codes: 0 success, 2 config error, 3 numerical divergence,
4 resolution error, 1 anything else.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    DivergenceError,
    ParameterError,
    ResolutionError,
)
from .evolve import SolverConfig, solve, write_trajectory
from .experiments import (
    gaussian_initial_data,
    h1_bound_check,
    inviscid_sweep,
    power_law_initial_data,
    rate_fit,
    scaling_check,
    soliton_initial_data,
)
from .imethod import DyadicConfig, IMultiplierSpec, m4_bound_sample
from .norms import build_energy_ledger, l2_dissipation_residual, write_ledger_csv
from .propagator import ModelParams
from .reports import SweepReport, canonical_json
from .sharpness import exponent_sweep, write_sweep_csv
from .spectral import GridSpec, RealField

SUBCOMMANDS = (
    "solve",
    "energy",
    "inviscid",
    "rate",
    "scaling",
    "sharpness",
    "imethod-bounds",
    "h1-bound",
)

_COMMON_KEYS = {
    "subcommand",
    "epsilon",
    "alpha",
    "modes",
    "box_length",
    "dealias_fraction",
    "dt",
    "t_final",
    "snapshot_stride",
    "seed",
    "out",
    "initial_data",
}

_SCHEMAS = {
    "solve": set(),
    "energy": {"refine_check"},
    "inviscid": {"eps_ladder", "sobolev_s"},
    "rate": {"eps_ladder", "sobolev_s"},
    "scaling": {"lambda_exp"},
    "sharpness": {"s_list", "n_ladder", "delta", "regime"},
    "imethod-bounds": {"n1_ladder", "ratios", "cutoff_n", "s_exp", "n_samples"},
    "h1-bound": {"eps_ladder"},
}

_DATA_KEYS = {
    "soliton": {"kind", "c", "x0"},
    "gaussian": {"kind", "width", "l2_norm", "modulation"},
    "power_law": {"kind", "decay_exponent", "l2_norm", "seed"},
    "sine": {"kind", "amplitude", "wavenumber_index"},
}

_DEFAULTS = {
    "dealias_fraction": 2.0 / 3.0,
    "snapshot_stride": 1,
    "seed": 0,
    "t_final": 1.0,
    "out": "kdvb_out",
}


@dataclass(frozen=True)
class RunConfig:
    """A fully validated run description."""

    subcommand: str
    params: ModelParams
    grid: GridSpec
    dt: float
    t_final: float
    snapshot_stride: int
    seed: int
    out_path: Path
    initial_data: dict
    experiment: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        """The config as it will be echoed into the manifest."""
        return {
            "subcommand": self.subcommand,
            "epsilon": self.params.epsilon,
            "alpha": self.params.alpha,
            "modes": self.grid.modes,
            "box_length": self.grid.box_length,
            "dealias_fraction": self.grid.dealias_fraction,
            "dt": self.dt,
            "t_final": self.t_final,
            "snapshot_stride": self.snapshot_stride,
            "seed": self.seed,
            "out": str(self.out_path),
            "initial_data": self.initial_data,
            self.subcommand: self.experiment,
        }


def _require(doc: dict, key: str):
    if key not in doc:
        raise ConfigError(f"missing required key {key!r}")
    return doc[key]


def parse_config(text: str) -> RunConfig:
    """Validate a JSON run description; errors name the offending key."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")

    sub = _require(doc, "subcommand")
    if sub not in SUBCOMMANDS:
        raise ConfigError(f"subcommand must be one of {SUBCOMMANDS}, got {sub!r}")

    allowed = _COMMON_KEYS | {sub}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    merged = {**_DEFAULTS, **doc}

    try:
        params = ModelParams(
            epsilon=float(_require(merged, "epsilon")),
            alpha=float(_require(merged, "alpha")),
        )
    except ParameterError as exc:
        raise ConfigError(f"model parameters: {exc}") from exc

    try:
        grid = GridSpec(
            box_length=float(_require(merged, "box_length")),
            modes=int(_require(merged, "modes")),
            dealias_fraction=float(merged["dealias_fraction"]),
        )
    except ParameterError as exc:
        raise ConfigError(f"grid: {exc}") from exc

    needs_solver = sub in ("solve", "energy", "inviscid", "rate", "scaling", "h1-bound")
    dt = float(_require(merged, "dt")) if needs_solver else float(merged.get("dt", 1e-3))
    t_final = float(merged["t_final"])
    stride = int(merged["snapshot_stride"])
    if needs_solver:
        try:
            SolverConfig(
                params=params, grid=grid, dt=dt, t_final=t_final, snapshot_stride=stride
            )
        except ParameterError as exc:
            raise ConfigError(f"solver: {exc}") from exc

    data = merged.get("initial_data", {"kind": "gaussian", "width": 2.0, "l2_norm": 1.0})
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError("initial_data must be an object with a 'kind' key")
    kind = data["kind"]
    if kind not in _DATA_KEYS:
        raise ConfigError(
            f"initial_data.kind must be one of {sorted(_DATA_KEYS)}, got {kind!r}"
        )
    bad = set(data) - _DATA_KEYS[kind]
    if bad:
        raise ConfigError(f"unknown initial_data keys for {kind!r}: {sorted(bad)}")

    experiment = merged.get(sub, {})
    if not isinstance(experiment, dict):
        raise ConfigError(f"experiment block {sub!r} must be an object")
    bad = set(experiment) - _SCHEMAS[sub]
    if bad:
        raise ConfigError(f"unknown keys in {sub!r} block: {sorted(bad)}")

    return RunConfig(
        subcommand=sub,
        params=params,
        grid=grid,
        dt=dt,
        t_final=t_final,
        snapshot_stride=stride,
        seed=int(merged["seed"]),
        out_path=Path(merged["out"]),
        initial_data=data,
        experiment=experiment,
    )


def build_initial_data(cfg: RunConfig) -> RealField:
    data = cfg.initial_data
    kind = data["kind"]
    if kind == "soliton":
        return soliton_initial_data(
            c=float(data.get("c", 4.0)), x0=float(data.get("x0", 0.0)), grid=cfg.grid
        )
    if kind == "gaussian":
        return gaussian_initial_data(
            cfg.grid,
            width=float(data.get("width", 2.0)),
            l2_norm=float(data.get("l2_norm", 1.0)),
            modulation=float(data.get("modulation", 0.0)),
        )
    if kind == "power_law":
        return power_law_initial_data(
            cfg.grid,
            decay_exponent=float(data.get("decay_exponent", -1.51)),
            l2_norm=float(data.get("l2_norm", 0.5)),
            seed=int(data.get("seed", cfg.seed)),
        )
    amp = float(data.get("amplitude", 1.0))
    index = int(data.get("wavenumber_index", 1))
    x = cfg.grid.collocation_points()
    return RealField(
        amp * np.sin(2.0 * np.pi * index * x / cfg.grid.box_length), cfg.grid
    )


def _solver_config(cfg: RunConfig) -> SolverConfig:
    return SolverConfig(
        params=cfg.params,
        grid=cfg.grid,
        dt=cfg.dt,
        t_final=cfg.t_final,
        snapshot_stride=cfg.snapshot_stride,
    )


def _sweep_csv_rows(report: SweepReport) -> str:
    out = io.StringIO()
    out.write("epsilon,observable\n")
    for value, rec in zip(report.values, report.observables):
        out.write(f"{value:.17g},{rec['observable']:.17g}\n")
    return out.getvalue()


def _run_solve(cfg: RunConfig, artifacts: dict) -> dict:
    traj = solve(build_initial_data(cfg), _solver_config(cfg))
    buf = io.BytesIO()
    write_trajectory(buf, traj)
    artifacts["trajectory.bin"] = buf.getvalue()
    ledger = build_energy_ledger(traj)
    csv = io.StringIO()
    write_ledger_csv(csv, ledger)
    artifacts["ledger.csv"] = csv.getvalue().encode()
    return {"snapshots": len(traj.states), "ledger_residual": l2_dissipation_residual(traj)}


def _run_energy(cfg: RunConfig, artifacts: dict) -> dict:
    phi = build_initial_data(cfg)
    traj = solve(phi, _solver_config(cfg))
    ledger = build_energy_ledger(traj)
    csv = io.StringIO()
    write_ledger_csv(csv, ledger)
    artifacts["ledger.csv"] = csv.getvalue().encode()
    result = {"ledger_residual": l2_dissipation_residual(traj)}
    if cfg.experiment.get("refine_check", False):
        refined_cfg = SolverConfig(
            params=cfg.params,
            grid=cfg.grid,
            dt=cfg.dt / 2.0,
            t_final=cfg.t_final,
            snapshot_stride=cfg.snapshot_stride,
        )
        result["ledger_residual_refined"] = l2_dissipation_residual(solve(phi, refined_cfg))
        result["refinement_factor"] = result["ledger_residual"] / max(
            result["ledger_residual_refined"], 1e-300
        )
    return result


def _sweep_result(cfg: RunConfig, report: SweepReport, experiment: str) -> dict:
    """CLI-facing sweep record: experiment, params, ladder, observables,
    fit, floors, seed, grid, dt."""
    return {
        "experiment": experiment,
        "params": {"epsilon": cfg.params.epsilon, "alpha": cfg.params.alpha},
        "ladder": list(report.values),
        "observables": list(report.observables),
        "fit": report.fit,
        "floors": {"self_convergence": report.meta.get("floor")},
        "seed": report.seed,
        "grid": {"box_length": cfg.grid.box_length, "modes": cfg.grid.modes},
        "dt": cfg.dt,
        "meta": report.meta,
    }


def _run_inviscid(cfg: RunConfig, artifacts: dict, with_rate: bool) -> dict:
    block = cfg.experiment
    ladder = tuple(float(e) for e in block.get("eps_ladder", (1e-1, 1e-2, 1e-3, 1e-4)))
    s = float(block.get("sobolev_s", 0.0))
    report = inviscid_sweep(
        build_initial_data(cfg),
        alpha=cfg.params.alpha,
        eps_ladder=ladder,
        t_final=cfg.t_final,
        s=s,
        dt=cfg.dt,
        snapshot_stride=cfg.snapshot_stride,
        seed=cfg.seed,
    )
    artifacts["sweep.csv"] = _sweep_csv_rows(report).encode()
    result = _sweep_result(cfg, report, "rate" if with_rate else "inviscid")
    if with_rate:
        result["rate_slope"] = rate_fit(report)
    return result


def _run_scaling(cfg: RunConfig, artifacts: dict) -> dict:
    distance = scaling_check(
        build_initial_data(cfg),
        cfg.params,
        lambda_exp=int(cfg.experiment.get("lambda_exp", 1)),
        t_final=cfg.t_final,
        dt=cfg.dt,
    )
    return {"distance": distance}


def _run_sharpness(cfg: RunConfig, artifacts: dict) -> dict:
    block = cfg.experiment
    alpha = cfg.params.alpha
    regime = block.get("regime", "low_alpha" if alpha <= 0.5 else "high_alpha")
    s_list = tuple(float(s) for s in _require(block, "s_list"))
    n_ladder = tuple(float(n) for n in _require(block, "n_ladder"))
    report = exponent_sweep(
        regime, alpha, s_list, n_ladder, delta=float(block.get("delta", 0.01))
    )
    csv = io.StringIO()
    write_sweep_csv(csv, report)
    artifacts["sweep.csv"] = csv.getvalue().encode()
    return report.to_dict()


def _run_imethod_bounds(cfg: RunConfig, artifacts: dict) -> dict:
    block = cfg.experiment
    dyadic = DyadicConfig(
        n1_ladder=tuple(float(n) for n in _require(block, "n1_ladder")),
        ratios=tuple(float(r) for r in block.get("ratios", (1.0, 0.75, 0.5))),
        seed=cfg.seed,
    )
    spec = IMultiplierSpec(
        cutoff_n=float(block.get("cutoff_n", 0.5)),
        s_exp=float(block.get("s_exp", -0.74)),
    )
    report = m4_bound_sample(
        dyadic, spec, cfg.params, int(block.get("n_samples", 10_000))
    )
    artifacts["bound_report.json"] = (report.to_json() + "\n").encode()
    return {
        "slope": report.slope_vs_logn,
        "max_ratio": report.max_ratio,
        "max_ratios": list(report.max_ratios),
    }


def _run_h1_bound(cfg: RunConfig, artifacts: dict) -> dict:
    ladder = tuple(
        float(e) for e in cfg.experiment.get("eps_ladder", (1.0, 0.1, 0.01, 0.001))
    )
    report = h1_bound_check(
        build_initial_data(cfg),
        alpha=cfg.params.alpha,
        eps_ladder=ladder,
        t_final=cfg.t_final,
        dt=cfg.dt,
        snapshot_stride=cfg.snapshot_stride,
        seed=cfg.seed,
    )
    artifacts["sweep.csv"] = _sweep_csv_rows(report).encode()
    obs = [rec["observable"] for rec in report.observables]
    result = _sweep_result(cfg, report, "h1-bound")
    result["band_ratio"] = max(obs) / min(obs)
    return result


def run(cfg: RunConfig) -> int:
    """Execute the configured experiment; write artifacts and manifest.

    Returns the process exit code.  On failure an error.json artifact
    records the exception class and message.
    """
    cfg.out_path.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, bytes] = {}
    started = time.monotonic()
    try:
        if cfg.subcommand == "solve":
            result = _run_solve(cfg, artifacts)
        elif cfg.subcommand == "energy":
            result = _run_energy(cfg, artifacts)
        elif cfg.subcommand == "inviscid":
            result = _run_inviscid(cfg, artifacts, with_rate=False)
        elif cfg.subcommand == "rate":
            result = _run_inviscid(cfg, artifacts, with_rate=True)
        elif cfg.subcommand == "scaling":
            result = _run_scaling(cfg, artifacts)
        elif cfg.subcommand == "sharpness":
            result = _run_sharpness(cfg, artifacts)
        elif cfg.subcommand == "imethod-bounds":
            result = _run_imethod_bounds(cfg, artifacts)
        else:
            result = _run_h1_bound(cfg, artifacts)
    except (ConfigError, ParameterError) as exc:
        return _fail(cfg, exc, 2)
    except DivergenceError as exc:
        return _fail(cfg, exc, 3)
    except ResolutionError as exc:
        return _fail(cfg, exc, 4)

    resolved = cfg.resolved()
    result["config"] = resolved
    artifacts["result.json"] = (canonical_json(result) + "\n").encode()
    config_comment = ("# config: " + canonical_json(resolved).replace("\n", " ") + "\n").encode()
    for name in list(artifacts):
        if name.endswith(".csv"):
            artifacts[name] = config_comment + artifacts[name]
    manifest = {
        "config": resolved,
        "versions": {
            "kdvb": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "floors": result.get("floors"),
        "seed": cfg.seed,
    }
    artifacts["manifest.json"] = (canonical_json(manifest) + "\n").encode()
    for name, blob in sorted(artifacts.items()):
        (cfg.out_path / name).write_bytes(blob)
    # wall time is deliberately outside the deterministic artifact set
    (cfg.out_path / "timing.json").write_text(
        canonical_json({"wall_time_s": time.monotonic() - started}) + "\n"
    )
    return 0


def _fail(cfg: RunConfig, exc: Exception, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    try:
        cfg.out_path.mkdir(parents=True, exist_ok=True)
        (cfg.out_path / "error.json").write_text(canonical_json(payload) + "\n")
    except OSError:
        pass
    print(canonical_json(payload), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="kdvb",
        description="Pseudospectral experiments for the dissipative KdV equation",
    )
    parser.add_argument("--config", required=True, help="path to a JSON run description")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument(
        "--threads",
        type=int,
        default=0,
        help="worker bound hint; 0 = auto (execution is currently sequential)",
    )
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(
            canonical_json({"error": "ConfigError", "message": str(exc), "exit_code": 2}),
            file=sys.stderr,
        )
        return 2
    try:
        cfg = parse_config(text)
        if args.out is not None:
            cfg = RunConfig(
                **{**cfg.__dict__, "out_path": Path(args.out)}
            )
        if args.seed is not None:
            cfg = RunConfig(**{**cfg.__dict__, "seed": int(args.seed)})
    except ConfigError as exc:
        print(
            canonical_json({"error": "ConfigError", "message": str(exc), "exit_code": 2}),
            file=sys.stderr,
        )
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
