"""Experiment configuration: INI files with strict key checking.

Sections and keys are fixed; anything unrecognized is rejected by name so a
typo cannot silently fall back to a default. Every stage that consumes
randomness must carry an explicit seed.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

import numpy as np

from .forward import ForwardModel, NoiseSpec
from .geometry import IlluminationScheme, build_scheme, validate_scheme
from .lens import BlrDesignReport, LensSpec, make_blr_lens, make_small_lens
from .phantom import make_phantom
from .solvers import SolverConfig

__all__ = [
    "ExperimentConfig",
    "load_config",
    "make_lens",
    "realize",
]

# section -> {key: (required, kind)}; kind drives parsing
_SCHEMA = {
    "object": {
        "source": (True, "choice:file,phantom"),
        "n": (True, "int"),
        "seed": (False, "int"),
        "path": (False, "str"),
    },
    "lens": {
        "kind": (True, "choice:small,blr"),
        "m": (True, "int"),
        "r_inner": (False, "float"),
        "r_outer": (False, "float"),
        "focus_radius": (False, "float"),
        "design_iters": (False, "int"),
        "seed": (True, "int"),
    },
    "scheme": {
        "dx": (True, "float"),
        "dy": (True, "float"),
        "jitter": (True, "float"),
        "shear": (True, "bool"),
        "seed": (True, "int"),
    },
    "noise": {
        "sigma_std": (True, "float"),
        "seed": (True, "int"),
    },
    "init": {
        "method": (True, "choice:random,tps,gcl"),
        "percentile_keep": (False, "float"),
    },
    "solver": {
        "algorithm": (True, "choice:ap,raar,synchro-raar,synchro-cg"),
        "iterations": (True, "int"),
        "beta": (False, "float"),
        "sync_kernel": (False, "choice:K,curlyK"),
        "alpha_max": (False, "float"),
        "line_search_tol": (False, "float"),
        "seed": (True, "int"),
    },
    "output": {
        "directory": (True, "str"),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed and validated experiment description.

    object_seed is None only when the object is loaded from a file, and
    object_path is None only when the phantom generator is used.
    """

    object_source: str
    object_n: int
    object_seed: int | None
    object_path: str | None
    lens: LensSpec
    scheme_dx: float
    scheme_dy: float
    scheme_jitter: float
    scheme_shear: bool
    scheme_seed: int
    noise: NoiseSpec
    solver: SolverConfig
    output_directory: str


def _parse_value(raw: str, kind: str, where: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind.startswith("choice:"):
            options = kind.split(":", 1)[1].split(",")
            value = raw.strip()
            if value not in options:
                raise ValueError(f"must be one of {options}")
            return value
        return raw.strip()
    except ValueError as exc:
        raise ValueError(f"config key {where}: bad value {raw!r} ({exc})") from None


def load_config(path: str) -> ExperimentConfig:
    """Parse an INI experiment file, rejecting unknown sections and keys."""
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(path)
    values: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ValueError(f"config: unknown section [{section}]")
        schema = _SCHEMA[section]
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in schema:
                raise ValueError(f"config: unknown key {section}.{key}")
            values[section][key] = _parse_value(raw, schema[key][1], f"{section}.{key}")
    for section, schema in _SCHEMA.items():
        if section not in values:
            raise ValueError(f"config: missing section [{section}]")
        for key, (required, _) in schema.items():
            if required and key not in values[section]:
                raise ValueError(f"config: missing key {section}.{key}")

    obj = values["object"]
    if obj["source"] == "phantom" and "seed" not in obj:
        raise ValueError("config: object.seed is required when object.source = phantom")
    if obj["source"] == "file" and "path" not in obj:
        raise ValueError("config: object.path is required when object.source = file")

    lens_sec = values["lens"]
    lens_kwargs = {k: lens_sec[k] for k in ("r_inner", "r_outer", "focus_radius", "design_iters") if k in lens_sec}
    lens = LensSpec(kind=lens_sec["kind"], m=lens_sec["m"], seed=lens_sec["seed"], **lens_kwargs)

    solver_sec = values["solver"]
    init_sec = values["init"]
    solver_kwargs = {
        k: solver_sec[k] for k in ("beta", "sync_kernel", "alpha_max", "line_search_tol") if k in solver_sec
    }
    if "percentile_keep" in init_sec:
        solver_kwargs["percentile_keep"] = init_sec["percentile_keep"]
    solver = SolverConfig(
        algorithm=solver_sec["algorithm"],
        iterations=solver_sec["iterations"],
        init=init_sec["method"],
        seed=solver_sec["seed"],
        **solver_kwargs,
    )

    return ExperimentConfig(
        object_source=obj["source"],
        object_n=obj["n"],
        object_seed=obj.get("seed"),
        object_path=obj.get("path"),
        lens=lens,
        scheme_dx=values["scheme"]["dx"],
        scheme_dy=values["scheme"]["dy"],
        scheme_jitter=values["scheme"]["jitter"],
        scheme_shear=values["scheme"]["shear"],
        scheme_seed=values["scheme"]["seed"],
        noise=NoiseSpec(sigma_std=values["noise"]["sigma_std"], seed=values["noise"]["seed"]),
        solver=solver,
        output_directory=values["output"]["directory"],
    )


def make_lens(spec: LensSpec) -> tuple[np.ndarray, BlrDesignReport | None]:
    if spec.kind == "small":
        return make_small_lens(spec), None
    lens, report = make_blr_lens(spec)
    return lens, report


def realize(config: ExperimentConfig) -> tuple[ForwardModel, np.ndarray, IlluminationScheme]:
    """Build the model and ground-truth object a config describes.

    Returns (model, object, scheme). Scheme validation failures raise with
    the offending report so callers can show diagnostics.
    """
    scheme = build_scheme(
        n=config.object_n,
        m=config.lens.m,
        dx=config.scheme_dx,
        dy=config.scheme_dy,
        jitter=config.scheme_jitter,
        shear=config.scheme_shear,
        seed=config.scheme_seed,
    )
    report = validate_scheme(scheme)
    if not report.ok:
        raise ValueError(
            "scheme validation failed: "
            f"{len(report.duplicate_pairs)} duplicate position pairs, "
            f"{report.uncovered_pixels} uncovered pixels, "
            f"{len(report.isolated_frames)} isolated frames"
        )
    lens, _ = make_lens(config.lens)
    model = ForwardModel(scheme, lens)
    if config.object_source == "phantom":
        image = make_phantom(config.object_n, seed=config.object_seed)
    else:
        from .arrayio import read_array

        image = read_array(config.object_path)
        if image.shape != (config.object_n, config.object_n):
            raise ValueError(
                f"object file has shape {image.shape}, config says n = {config.object_n}"
            )
        image = np.ascontiguousarray(image, dtype=np.complex128)
    return model, image, scheme
