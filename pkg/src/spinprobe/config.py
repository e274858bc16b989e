"""Experiment configuration and disorder sampling.

Configs live in flat JSON files (schema_version 1) and can be overridden
field-by-field from the CLI. Disorder draws use counter-based Philox
streams keyed by (seed, jx, realization), so any run order or worker count
reproduces identical realizations.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .operators import SpinBathModel

SCHEMA_VERSION = 1

ENGINES = ("exact", "nmme", "markovian")


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of one experiment campaign.

    Energies are in units of the detector splitting scale; time in its
    inverse. p and q left as None means the kernel rates are set per run
    from the bath's coupling-weighted transition-frequency spread.
    """

    n_bath: int = 10
    b0z: float = 1.0
    delta: float = 0.4
    lambda_max: float = 0.05
    jx_list: tuple = (0.0, 0.15, 0.5, 1.0, 2.0)
    kT: float = 0.25
    dt: float = 0.2
    t_final_short: float = 100.0
    t_final_long: float = 3000.0
    n_cut: int = 20
    n_grid: int = 40
    seed: int = 20260809
    realizations: int = 8
    engines: tuple = ("exact", "nmme")
    p: float | None = None
    q: float | None = None
    tau_b: float | None = None
    backend: str = "auto"
    estimation_engine: str = "exact"
    estimation_dt: float | None = None
    stats_realizations: int | None = None
    workers: int = 1
    figure_format: str = "pdf"
    schema_version: int = SCHEMA_VERSION

    def validate(self) -> "ExperimentConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(
                f"unsupported schema_version {self.schema_version}; expected {SCHEMA_VERSION}"
            )
        if self.n_bath < 1:
            raise ConfigError(f"n_bath must be >= 1, got {self.n_bath}")
        if self.b0z <= 0:
            raise ConfigError(f"b0z must be positive, got {self.b0z}")
        if self.delta < 0:
            raise ConfigError(f"delta must be >= 0, got {self.delta}")
        if self.lambda_max < 0:
            raise ConfigError(f"lambda_max must be >= 0, got {self.lambda_max}")
        if not self.jx_list:
            raise ConfigError("jx_list must not be empty")
        if any(jx < 0 for jx in self.jx_list):
            raise ConfigError("jx_list values must be >= 0")
        if self.kT <= 0:
            raise ConfigError(f"kT must be positive, got {self.kT}")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t_final_short <= 0 or self.t_final_long <= 0:
            raise ConfigError("horizons must be positive")
        if not 1 <= self.n_cut <= 2**self.n_bath:
            raise ConfigError(f"n_cut must be in [1, 2^{self.n_bath}], got {self.n_cut}")
        if self.n_grid < 5:
            raise ConfigError(f"n_grid must be >= 5, got {self.n_grid}")
        if self.realizations < 1:
            raise ConfigError(f"realizations must be >= 1, got {self.realizations}")
        if not self.engines:
            raise ConfigError("engines must not be empty")
        unknown = set(self.engines) - set(ENGINES)
        if unknown:
            raise ConfigError(f"unknown engines {sorted(unknown)}; valid: {ENGINES}")
        if self.estimation_engine not in ("exact", "nmme"):
            raise ConfigError(
                f"estimation_engine must be 'exact' or 'nmme', got {self.estimation_engine!r}"
            )
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.figure_format not in ("pdf", "svg", "png"):
            raise ConfigError(f"figure_format must be pdf, svg or png")
        if (self.p is None) != (self.q is None):
            raise ConfigError("p and q must be given together or both left unset")
        if self.p is not None and (self.p <= 0 or self.q <= 0):
            raise ConfigError("kernel rates p, q must be positive")
        return self

    def to_dict(self) -> dict:
        data = asdict(self)
        data["jx_list"] = list(self.jx_list)
        data["engines"] = list(self.engines)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "jx_list" in data:
            data["jx_list"] = tuple(data["jx_list"])
        if "engines" in data:
            data["engines"] = tuple(data["engines"])
        return cls(**data).validate()

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}")
        return cls.from_dict(data)

    def to_file(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def override(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs).validate()


def _stream_rng(seed: int, jx: float, stream: int) -> np.random.Generator:
    jx_key = int(round(jx * 1e9))
    seq = np.random.SeedSequence([int(seed), jx_key, int(stream)])
    return np.random.Generator(np.random.Philox(seq))


def sample_realization(config: ExperimentConfig, jx: float, stream: int) -> SpinBathModel:
    """Draw one disorder realization for coupling bound jx on a keyed stream.

    Bath fields bz, bx are uniform in [b0z - delta/2, b0z + delta/2], the
    couplings lambda_i in [-lambda_max, lambda_max] and jx_ij in [-jx, jx];
    the detector itself carries no one-body noise. Draw order is fixed
    (bz, bx, lam, then the upper triangle of jx row by row).
    """
    if jx < 0:
        raise ConfigError(f"jx must be >= 0, got {jx}")
    if stream < 0:
        raise ConfigError(f"stream must be >= 0, got {stream}")
    rng = _stream_rng(config.seed, jx, stream)
    n = config.n_bath
    half = 0.5 * config.delta
    bz = config.b0z + half * (2.0 * rng.random(n) - 1.0)
    bx = config.b0z + half * (2.0 * rng.random(n) - 1.0)
    lam = config.lambda_max * (2.0 * rng.random(n) - 1.0)
    jx_matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            jx_matrix[i, j] = jx * (2.0 * rng.random() - 1.0)
    return SpinBathModel(n_bath=n, b0z=config.b0z, bx=bx, bz=bz, lam=lam, jx=jx_matrix)
