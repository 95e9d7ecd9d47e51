"""Flat, typed key = value experiment configuration files."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path

import numpy as np

from ..covariates import CovariateSpec
from ..equilibrium import DgpSpec, FixedEffects, Model, grid_support
from ..model import STANDARD_CONFIGS

SCHEMA_VERSION = 1


class Mode(str, Enum):
    BASELINE_CLOSED_FORM = "baseline_closed_form"
    FE_ONLY_MC = "fe_only_mc"
    FULL_SIMULATED = "full_simulated"
    POINT_ID = "point_id"


class Criterion(str, Enum):
    NONPARAMETRIC = "nonparametric"
    PARAMETRIC = "parametric"
    BOTH = "both"


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def parse_seeds(text: str) -> tuple[int, ...]:
    """'0-9' or '1,5,7' or a mix like '0-2,10'."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else part[1:].split("-", 1)
            lo = int(lo) if not part.startswith("-") else -int(lo)
            out.extend(range(lo, int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise ConfigError("empty seed list")
    if any(s < 0 or s >= 2 ** 64 for s in out):
        raise ConfigError("seeds must be unsigned 64-bit integers")
    return tuple(out)


def _names(text: str) -> tuple[str, ...]:
    names = tuple(v.strip() for v in text.split(",") if v.strip())
    for nm in names:
        if nm not in STANDARD_CONFIGS:
            raise ConfigError(f"unknown restriction '{nm}'; choose from {sorted(STANDARD_CONFIGS)}")
    return names


@dataclass
class ExperimentConfig:
    mode: Mode = Mode.BASELINE_CLOSED_FORM
    model: Model = Model.BASELINE
    n: int = 100
    gamma0: float = 1.0
    beta0: tuple[float, ...] = (1.0,)
    support_size: int = 21
    z_support: tuple[float, ...] = ()
    sigma_A: float = 1.0
    rho: float = 0.0
    covariate: str = "jaccard"
    gamma_min: float = -10.0
    gamma_max: float = 10.0
    gamma_step: float = 0.5
    restrictions: tuple[str, ...] = ("tetrad",)
    criterion: Criterion = Criterion.BOTH
    seeds: tuple[int, ...] = (0,)
    replace_nonconverged: bool = True
    seed_attempts: int = 1000
    sweep_cap: int = 100
    mc_draws: int = 100_000
    cell_min: int = 10
    max_tuples: int = 2_000_000
    search_seed: int = 0
    output_dir: str = "netid_out"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.mode = Mode(self.mode)
        self.model = Model(self.model)
        self.criterion = Criterion(self.criterion)
        if self.gamma_step <= 0:
            raise ConfigError("gamma_step must be positive")
        if self.gamma_max < self.gamma_min:
            raise ConfigError("gamma_max is below gamma_min")
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}; expected {SCHEMA_VERSION}")
        if self.covariate not in ("jaccard", "common_friends"):
            raise ConfigError("covariate must be 'jaccard' or 'common_friends'")
        expected = {Mode.BASELINE_CLOSED_FORM: Model.BASELINE, Mode.FE_ONLY_MC: Model.FE_ONLY,
                    Mode.FULL_SIMULATED: Model.FULL}
        if self.mode in expected and self.model is not expected[self.mode]:
            raise ConfigError(f"mode {self.mode.value} runs the {expected[self.mode].value} model")
        if self.mode is Mode.FULL_SIMULATED and len(self.beta0) != 1:
            raise ConfigError("the full model fixes a scalar beta0")

    def theta_grid(self) -> np.ndarray:
        count = int(round((self.gamma_max - self.gamma_min) / self.gamma_step))
        return self.gamma_min + self.gamma_step * np.arange(count + 1)

    def covariate_spec(self) -> CovariateSpec:
        return CovariateSpec.jaccard() if self.covariate == "jaccard" else CovariateSpec.common_friends()

    def dgp(self, seed: int | None = None) -> DgpSpec:
        seed = self.seeds[0] if seed is None else seed
        if self.model is Model.BASELINE:
            return DgpSpec(Model.BASELINE, self.n, self.gamma0, self.beta0[:1], seed=seed)
        if self.model is Model.FE_ONLY:
            return DgpSpec(Model.FE_ONLY, self.n, self.gamma0, self.beta0[:1], fe=FixedEffects(self.sigma_A, self.rho),
                           seed=seed)
        support = np.asarray(self.z_support) if self.z_support else grid_support(self.support_size)
        return DgpSpec.full(self.n, self.gamma0, beta0=self.beta0[0], sigma_A=self.sigma_A, rho=self.rho,
                            covariate=self.covariate_spec(), z_support=support, seed=seed)

    def to_text(self) -> str:
        lines = [f"schema_version = {self.schema_version}"]
        for f in fields(self):
            if f.name == "schema_version":
                continue
            v = getattr(self, f.name)
            if isinstance(v, Enum):
                v = v.value
            elif isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_PARSERS = {
    "mode": str, "model": str, "n": int, "gamma0": float, "beta0": _floats, "support_size": int,
    "z_support": _floats, "sigma_A": float, "rho": float, "covariate": str, "gamma_min": float,
    "gamma_max": float, "gamma_step": float, "restrictions": _names, "criterion": str, "seeds": parse_seeds,
    "replace_nonconverged": _bool, "seed_attempts": int, "sweep_cap": int, "mc_draws": int, "cell_min": int,
    "max_tuples": int, "search_seed": int, "output_dir": str, "schema_version": int,
}


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        try:
            values[key] = _PARSERS[key](val)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for '{key}': {exc}") from exc
    if "schema_version" not in values:
        raise ConfigError("schema_version is required")
    try:
        return ExperimentConfig(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())
