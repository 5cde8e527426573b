"""Flat YAML experiment configuration.

Every key has a default, so an empty file (or no file) is a valid config.
Unknown keys are rejected so typos fail loudly. See docs/config.md for the
meaning of each key.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from ..linalg import TomolabError


class ConfigError(TomolabError, ValueError):
    pass


@dataclass
class ExperimentConfig:
    seed: int = 20240601
    workers: int = 1
    # sweeps
    d_list: list = field(default_factory=lambda: [2, 4, 8])
    eps_list: list = field(default_factory=lambda: [0.3, 0.5])
    ell_list: list = field(default_factory=lambda: ["d", 2])
    q_list: list = field(default_factory=lambda: [1, 2])
    n_grid: list = field(default_factory=lambda: [50, 100, 200])
    s_grid: list = field(default_factory=lambda: [50, 200])
    trials: int = 200
    states_per_cell: int = 3
    # Monte Carlo sizes
    mc_samples: int = 100_000
    chi2_samples: int = 10_000
    povms_per_cell: int = 50
    observables_per_d: int = 20
    shadow_shots: int = 100_000
    rank_r_cells: list = field(default_factory=lambda: [[6, 2, 0.25], [9, 3, 0.16]])
    tail_d: int = 16
    tail_rank: int = 8
    tail_t: float = 0.5
    tail_trials: int = 10_000
    # risk / scaling
    kind: str = "random-basis"
    scaling_eps: float = 0.3
    scaling_trials: int = 31
    bisect_probes: int = 20
    bisect_rtol: float = 0.02
    eps_ratio_d: Optional[int] = 4
    # packing
    packing_d: int = 8
    packing_eps: float = 0.5
    packing_n: int = 50
    shadow_packing_n: int = 20
    rank_r_packing: list = field(default_factory=lambda: [9, 3, 0.16, 20])
    chi2_packing_m: int = 3
    chi2_packing_n: int = 10
    max_draws: Optional[int] = None
    # shadows
    shadow_d: int = 8
    n_observables: int = 50
    shadow_eps: float = 0.2
    shadow_trials: int = 30
    shadow_n: Optional[int] = None
    two_outcome_d: int = 4
    two_outcome_m: int = 20
    # discrimination
    discriminate_d: int = 8
    discriminate_m: int = 20
    discriminate_eps: float = 0.6
    discriminate_n: Optional[list] = None
    discriminate_trials: int = 30
    # lower-bound table
    table_d: list = field(default_factory=lambda: [8, 16, 64])
    table_eps: list = field(default_factory=lambda: [0.1])
    table_ell: list = field(default_factory=lambda: [2])
    table_log_m: list = field(default_factory=lambda: [0.0, 4.6])
    table_observables: list = field(default_factory=lambda: [1000])
    table_r: list = field(default_factory=lambda: [2])
    scaling_pair: list = field(default_factory=lambda: [65536, 131072])
    # single tomography run
    method: str = "random-basis"
    n: int = 10_000
    state_file: Optional[str] = None
    project: bool = False
    # tolerances
    tol_abs: float = 0.01
    tol_se: float = 5.0
    tol_se_risk: float = 3.0
    tol_rel: float = 0.1
    tol_ratio: float = 0.2
    tol_exact: float = 1e-9
    # selftest
    include_scaling: bool = False

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def config_from_dict(raw: Optional[dict], **overrides) -> ExperimentConfig:
    raw = dict(raw or {})
    raw.update({k: v for k, v in overrides.items() if v is not None})
    unknown = sorted(set(raw) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = ExperimentConfig(**raw)
    validate(cfg)
    return cfg


def load_config(path: Optional[str | Path], **overrides) -> ExperimentConfig:
    raw: dict = {}
    if path is not None:
        text = Path(path).read_text()
        raw = yaml.safe_load(text) or {}
        if not isinstance(raw, dict):
            raise ConfigError("config file must be a mapping of keys to values")
    return config_from_dict(raw, **overrides)


def validate(cfg: ExperimentConfig) -> None:
    if not 0 <= int(cfg.seed) < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    if cfg.workers < 1:
        raise ConfigError("workers must be positive")
    for name in ("trials", "mc_samples", "chi2_samples", "povms_per_cell", "scaling_trials", "bisect_probes"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be positive")
    if any(int(d) < 2 for d in cfg.d_list):
        raise ConfigError("every d must be at least 2")
    if any(not 0 < float(e) < 1 for e in cfg.eps_list):
        raise ConfigError("every eps must lie in (0, 1)")
    for ell in cfg.ell_list:
        if ell != "d" and (not isinstance(ell, int) or ell < 1):
            raise ConfigError("ell_list entries must be positive integers or 'd'")
    if cfg.kind not in ("random-basis", "pauli"):
        raise ConfigError("kind must be 'random-basis' or 'pauli'")
    if cfg.method not in ("random-basis", "pauli"):
        raise ConfigError("method must be 'random-basis' or 'pauli'")
    for cell in cfg.rank_r_cells:
        if len(cell) != 3:
            raise ConfigError("rank_r_cells entries are [d, r, nu]")
