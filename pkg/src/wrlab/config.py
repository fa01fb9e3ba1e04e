"""Experiment configuration: INI-style files with nested sections.

A config fully determines a campaign together with the master seed; there is
no wall-clock seeding anywhere.  Sections mirror the run structure::

    [experiment]        kind, seed, output, workers
    [environment]       model + named parameters, optional guard_margin
    [geometry]          dim, a, window or window_size, delta or delta_size
    [schedule]          z_grid, replicates, L_list, runs, tau, merge_bound
    [mcmc]              sweeps, burn_in, thinning, move_mix, batch_count

Only named environment models are expressible in a file; arbitrary density
handles exist at the library level only.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import Window
from .intensity import (
    HomogeneousLebesgue,
    IntensityModel,
    ManhattanGrid,
    RandomSetIndicator,
    ShotNoise,
    VoronoiEdges,
)
from .wr_gibbs import MCMCSettings

EXPERIMENT_KINDS = (
    "percolation-scan",
    "wr-order-parameter",
    "rc-check",
    "domination-check",
    "dlr-check",
    "env-validate",
)

ENVIRONMENT_MODELS = ("lebesgue", "shot-noise", "random-set", "voronoi", "manhattan")


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


@dataclass
class ExperimentConfig:
    kind: str
    model: IntensityModel
    model_name: str
    dim: int
    a: float
    window: Window
    delta: Window | None
    z_grid: list[float]
    L_list: list[float]
    replicates: int
    runs: int
    settings: MCMCSettings
    seed: int
    out_dir: str
    workers: int = 1
    guard_margin: float | None = None
    tau: float | None = None
    merge_bound: int | None = None
    replicate_offset: int = 0
    both_axes: bool = False
    raw: dict = field(default_factory=dict)

    def hash(self) -> str:
        """Hash of the resolved config.

        Workers, output path, and the replicate offset are excluded: they
        change no number (the offset only selects which replicate streams a
        partial run covers, so partials with different offsets must share
        the hash to be mergeable).
        """
        payload = {
            k: v
            for k, v in self.raw.items()
            if k not in ("output", "workers", "replicate_offset", "replicates", "runs")
        }
        blob = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _parse_model(section) -> tuple[IntensityModel, str]:
    name = section.get("model", "").strip().lower()
    if name not in ENVIRONMENT_MODELS:
        raise ConfigError(
            f"environment model must be one of {ENVIRONMENT_MODELS}, got {name!r}"
        )
    try:
        if name == "lebesgue":
            return HomogeneousLebesgue(section.getfloat("z0", 1.0)), name
        if name == "shot-noise":
            return (
                ShotNoise(
                    pp_intensity=section.getfloat("pp_intensity"),
                    kernel_radius=section.getfloat("kernel_radius"),
                    kernel_amplitude=section.getfloat("kernel_amplitude"),
                ),
                name,
            )
        if name == "random-set":
            return (
                RandomSetIndicator(
                    lambda_inside=section.getfloat("lambda_inside"),
                    lambda_outside=section.getfloat("lambda_outside"),
                    germ_intensity=section.getfloat("germ_intensity"),
                    grain_radius=section.getfloat("grain_radius"),
                ),
                name,
            )
        if name == "voronoi":
            return VoronoiEdges(seed_intensity=section.getfloat("seed_intensity")), name
        return ManhattanGrid(line_intensity=section.getfloat("line_intensity")), name
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for model {name!r}: {exc}") from exc


def _parse_window(section, prefix: str, dim: int, required: bool) -> Window | None:
    corners = section.get(prefix, None)
    size = section.getfloat(f"{prefix}_size", None)
    if corners is not None:
        vals = _floats(corners)
        if len(vals) != 2 * dim:
            raise ConfigError(
                f"{prefix} needs {2 * dim} numbers (lower then upper), got {len(vals)}"
            )
        return Window(np.array(vals[:dim]), np.array(vals[dim:]))
    if size is not None:
        return Window.cube(size, dim)
    if required:
        raise ConfigError(f"geometry section must define {prefix} or {prefix}_size")
    return None


def config_from_resolved(raw: dict) -> ExperimentConfig:
    """Rebuild a config from a manifest's resolved-config block.

    This is the manifest-completeness contract: every number in a result
    file is reproducible from the manifest alone (plus the code version).
    """
    models = {
        "lebesgue": lambda p: HomogeneousLebesgue(**p),
        "shot-noise": lambda p: ShotNoise(**p),
        "random-set": lambda p: RandomSetIndicator(**p),
        "voronoi": lambda p: VoronoiEdges(**p),
        "manhattan": lambda p: ManhattanGrid(**p),
    }
    try:
        model = models[raw["model"]](raw["model_params"])
        dim = raw["dim"]

        def window_of(vals):
            if vals is None:
                return None
            return Window(np.array(vals[:dim]), np.array(vals[dim:]))

        mcmc = raw["mcmc"]
        settings = MCMCSettings(
            sweeps=mcmc["sweeps"],
            burn_in=mcmc["burn_in"],
            thinning=mcmc["thinning"],
            move_mix=tuple(mcmc["move_mix"]),
            batch_count=mcmc["batch_count"],
            moves_per_sweep=mcmc["moves_per_sweep"],
            recolor_cluster_cap=mcmc["recolor_cluster_cap"],
        )
        return ExperimentConfig(
            kind=raw["kind"],
            model=model,
            model_name=raw["model"],
            dim=dim,
            a=raw["a"],
            window=window_of(raw["window"]),
            delta=window_of(raw["delta"]),
            z_grid=list(raw["z_grid"]),
            L_list=list(raw["L_list"]),
            replicates=raw["replicates"],
            runs=raw["runs"],
            settings=settings,
            seed=raw["seed"],
            out_dir=raw.get("output", "results"),
            workers=raw.get("workers", 1),
            guard_margin=raw["guard_margin"],
            tau=raw["tau"],
            merge_bound=raw["merge_bound"],
            replicate_offset=raw.get("replicate_offset", 0),
            both_axes=raw.get("both_axes", False),
            raw=dict(raw),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"manifest resolved_config is incomplete: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        return parse_config(parser)
    except (configparser.Error, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(parser: configparser.ConfigParser) -> ExperimentConfig:
    if "experiment" not in parser:
        raise ConfigError("missing [experiment] section")
    exp = parser["experiment"]
    kind = exp.get("kind", "").strip()
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"kind must be one of {EXPERIMENT_KINDS}, got {kind!r}")
    if "seed" not in exp:
        raise ConfigError("a master seed is mandatory (no wall-clock seeding)")
    seed = exp.getint("seed")
    out_dir = exp.get("output", "results")
    workers = exp.getint("workers", 1)
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    if "environment" not in parser:
        raise ConfigError("missing [environment] section")
    model, model_name = _parse_model(parser["environment"])
    guard_margin = parser["environment"].getfloat("guard_margin", None)

    if "geometry" not in parser:
        raise ConfigError("missing [geometry] section")
    geo = parser["geometry"]
    dim = geo.getint("dim", 2)
    if dim < 1:
        raise ConfigError("dim must be >= 1")
    if model_name in ("voronoi", "manhattan") and dim != 2:
        raise ConfigError(f"model {model_name!r} requires dim = 2")
    a = geo.getfloat("a", None)
    if a is None or a <= 0:
        raise ConfigError("geometry needs a positive ball radius a")

    sched = parser["schedule"] if "schedule" in parser else {}

    def sched_get(key, default=None):
        return sched.get(key, default) if hasattr(sched, "get") else default

    L_text = sched_get("L_list")
    L_list = _floats(L_text) if L_text else []
    if kind == "percolation-scan" and not L_list:
        raise ConfigError("percolation-scan needs L_list in [schedule]")
    if any(l2 <= l1 for l1, l2 in zip(L_list, L_list[1:])):
        raise ConfigError("L_list must be strictly increasing")

    window_optional = kind == "percolation-scan" or (
        kind == "wr-order-parameter" and bool(L_list)
    )
    window = _parse_window(geo, "window", dim, required=not window_optional)
    delta = _parse_window(geo, "delta", dim, required=False)
    if delta is None and kind in ("rc-check", "wr-order-parameter", "dlr-check", "domination-check"):
        size = geo.getfloat("delta_size", None)
        if size is None and window is not None:
            # default: the centered unit box, clipped to a fifth of the window
            side = min(1.0, float(window.sides.min()) / 5.0)
            center = (window.lower + window.upper) / 2.0
            delta = Window(center - side / 2.0, center + side / 2.0)
    if window is not None and delta is not None and not window.contains_window(delta):
        raise ConfigError("delta must lie inside the window")

    z_text = sched_get("z_grid", "1.0")
    z_grid = _floats(z_text)
    if not z_grid:
        raise ConfigError("z_grid must not be empty")
    if any(z < 0 for z in z_grid):
        raise ConfigError("z values must be >= 0")
    if any(z2 <= z1 for z1, z2 in zip(z_grid, z_grid[1:])):
        raise ConfigError("z_grid must be strictly increasing")
    replicates = int(sched_get("replicates", "4"))
    if replicates < 1:
        raise ConfigError("replicates must be >= 1")
    replicate_offset = int(sched_get("replicate_offset", "0"))
    if replicate_offset < 0:
        raise ConfigError("replicate_offset must be >= 0")
    both_axes = str(sched_get("both_axes", "false")).strip().lower() in ("1", "true", "yes")
    runs = int(sched_get("runs", "20"))
    tau_text = sched_get("tau")
    tau = float(tau_text) if tau_text else None
    mb_text = sched_get("merge_bound")
    merge_bound = int(mb_text) if mb_text else None

    mcmc = parser["mcmc"] if "mcmc" in parser else {}

    def mcmc_get(key, default):
        return mcmc.get(key, default) if hasattr(mcmc, "get") else default

    mix = _floats(mcmc_get("move_mix", "0.4 0.4 0.2"))
    if len(mix) != 3:
        raise ConfigError("move_mix needs three probabilities")
    try:
        settings = MCMCSettings(
            sweeps=int(mcmc_get("sweeps", "2000")),
            burn_in=int(mcmc_get("burn_in", "500")),
            thinning=int(mcmc_get("thinning", "2")),
            move_mix=tuple(mix),
            batch_count=int(mcmc_get("batch_count", "16")),
            moves_per_sweep=int(mcmc_get("moves_per_sweep", "0")) or None,
            recolor_cluster_cap=int(mcmc_get("recolor_cluster_cap", "128")),
        )
    except ValueError as exc:
        raise ConfigError(f"bad mcmc section: {exc}") from exc

    raw = {
        "kind": kind,
        "seed": seed,
        "output": out_dir,
        "workers": workers,
        "model": model_name,
        "model_params": {
            k: v for k, v in vars(model).items() if not callable(v)
        },
        "guard_margin": guard_margin,
        "dim": dim,
        "a": a,
        "window": None if window is None else window.lower.tolist() + window.upper.tolist(),
        "delta": None if delta is None else delta.lower.tolist() + delta.upper.tolist(),
        "z_grid": z_grid,
        "L_list": L_list,
        "replicates": replicates,
        "replicate_offset": replicate_offset,
        "both_axes": both_axes,
        "runs": runs,
        "tau": tau,
        "merge_bound": merge_bound,
        "mcmc": {
            "sweeps": settings.sweeps,
            "burn_in": settings.burn_in,
            "thinning": settings.thinning,
            "move_mix": list(settings.move_mix),
            "batch_count": settings.batch_count,
            "moves_per_sweep": settings.moves_per_sweep,
            "recolor_cluster_cap": settings.recolor_cluster_cap,
        },
    }
    return ExperimentConfig(
        kind=kind,
        model=model,
        model_name=model_name,
        dim=dim,
        a=a,
        window=window,
        delta=delta,
        z_grid=z_grid,
        L_list=L_list,
        replicates=replicates,
        runs=runs,
        settings=settings,
        seed=seed,
        out_dir=out_dir,
        workers=workers,
        guard_margin=guard_margin,
        tau=tau,
        merge_bound=merge_bound,
        replicate_offset=replicate_offset,
        both_axes=both_axes,
        raw=raw,
    )
