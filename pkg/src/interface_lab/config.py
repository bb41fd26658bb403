"""Experiment configuration: TOML or JSON, strictly validated.

Unknown keys are rejected everywhere so that a typo cannot silently fall
back to a default.  `validate` performs the static checks and returns
diagnostics without computing anything.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .domains import DomainSpec
from .errors import ConfigError

EXPERIMENTS = (
    "green", "sample", "variance_infinite", "variance_finite", "besov_scaling",
    "bridge_1d", "thomee_error", "spectral_gap", "sobolev_gff",
)

_TOP_KEYS = {"experiment", "domain", "kappa", "N_grid", "h_grid", "test_function",
             "seed", "count", "tolerances", "output_dir", "lambdas", "sobolev_s",
             "modes"}
_DOMAIN_KEYS = {"shape", "dimension", "radius", "center"}
_TF_KEYS = {"kind", "center", "radius", "amplitude", "modes"}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    domain: DomainSpec = None
    kappa: tuple = (1.0, 1.0)
    N_grid: tuple = ()
    h_grid: tuple = ()
    test_function: dict = None
    seed: int = 0
    count: int = 0
    tolerances: dict = field(default_factory=dict)
    lambdas: tuple = ()
    sobolev_s: float = 0.0
    modes: int = 0
    output_dir: str = "."
    raw: dict = field(default_factory=dict, repr=False)


def _reject_unknown(mapping: dict, allowed: set, where: str):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def load_config(path) -> ExperimentConfig:
    """Parse a TOML (default) or JSON config file."""
    text = open(path, "rb").read()
    if str(path).endswith(".json"):
        try:
            data = json.loads(text.decode())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    else:
        import tomli

        try:
            data = tomli.loads(text.decode())
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from exc
    return config_from_dict(data)


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    _reject_unknown(data, _TOP_KEYS, "config")
    if "experiment" not in data:
        raise ConfigError("missing required key 'experiment'")
    exp = data["experiment"]
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; valid: {', '.join(EXPERIMENTS)}")

    domain = None
    if "domain" in data:
        dom = data["domain"]
        _reject_unknown(dom, _DOMAIN_KEYS, "domain")
        try:
            domain = DomainSpec(
                shape=dom.get("shape", "Interval"),
                dimension=int(dom.get("dimension", 1)),
                radius=float(dom.get("radius", 1.0)),
                center=tuple(dom.get("center", ())),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid domain: {exc}") from exc

    tf = data.get("test_function")
    if tf is not None:
        _reject_unknown(tf, _TF_KEYS, "test_function")

    kappa = tuple(float(k) for k in data.get("kappa", (1.0, 1.0)))
    if not kappa or all(k == 0.0 for k in kappa):
        raise ConfigError("kappa must contain a nonzero coefficient")

    try:
        return ExperimentConfig(
            experiment=exp,
            domain=domain,
            kappa=kappa,
            N_grid=tuple(int(n) for n in data.get("N_grid", ())),
            h_grid=tuple(float(h) for h in data.get("h_grid", ())),
            test_function=tf,
            seed=int(data.get("seed", 0)),
            count=int(data.get("count", 0)),
            tolerances=dict(data.get("tolerances", {})),
            lambdas=tuple(float(x) for x in data.get("lambdas", ())),
            sobolev_s=float(data.get("sobolev_s", 0.0)),
            modes=int(data.get("modes", 0)),
            output_dir=str(data.get("output_dir", ".")),
            raw=data,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def validate(config: ExperimentConfig) -> list:
    """Static diagnostics; empty list means the config is runnable."""
    diags = []
    exp = config.experiment
    dim = config.domain.dimension if config.domain else None

    if config.kappa:
        from .errors import CoefficientSignError
        from .operators import Coefficients

        try:
            Coefficients(config.kappa)
        except CoefficientSignError as exc:
            diags.append(str(exc))

    if exp in ("variance_infinite", "besov_scaling"):
        d = dim if dim is not None else (config.test_function or {}).get("dimension")
        d = d if d is not None else 3
        if d < 3:
            diags.append("infinite-volume experiments require d >= 3 "
                         "(no thermodynamic limit below)")
        if not config.N_grid:
            diags.append("N_grid is required")
    if exp in ("variance_finite", "sample", "green", "sobolev_gff") and config.domain is None:
        diags.append("domain is required")
    if exp in ("thomee_error", "spectral_gap"):
        if not config.h_grid:
            diags.append("h_grid is required")
        elif any(b >= a for a, b in zip(config.h_grid, config.h_grid[1:])):
            diags.append("h_grid must be strictly decreasing")
    if exp == "bridge_1d" and not config.N_grid:
        diags.append("N_grid is required")
    if exp in ("sample", "bridge_1d", "sobolev_gff") and config.count < 2:
        diags.append("count >= 2 is required for Monte Carlo experiments")
    if exp == "besov_scaling":
        if not config.lambdas:
            diags.append("lambdas is required")
        elif any(not 0 < x <= 1 for x in config.lambdas):
            diags.append("lambdas must lie in (0, 1]")
    return diags
