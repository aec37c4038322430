"""Config files (YAML or JSON) with sections ``run``, ``aae``, ``noise`` and ``synth``."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .feature_map import AAEConfig
from .noisy import NoiseModel
from .pipeline import RunConfig

# file key -> constructor argument, per section
_RUN_KEYS = {k: k for k in ("lr", "batch", "epochs", "eval_k", "seed", "memory_dim", "embed_hidden", "scorer_hidden", "threshold")}
_AAE_KEYS = {"beta": "beta", "tau": "tau", "n_qubits": "n_qubits", "update_strategy": "strategy", "encoding": "encoding"}
_NOISE_KEYS = {"depol": "depol_p", "readout_eps": "readout_eps", "shots": "shots", "n_eval": "n_eval"}
_SYNTH_KEYS = {k: k for k in ("n_users", "n_items", "n_events", "signal", "d", "noise")}
SECTIONS = {"run": _RUN_KEYS, "aae": _AAE_KEYS, "noise": _NOISE_KEYS, "synth": _SYNTH_KEYS}


@dataclass
class SynthConfig:
    n_users: int = 50
    n_items: int = 50
    n_events: int = 5000
    signal: float = 0.9
    d: int = 8
    noise: float = 0.1


@dataclass
class Settings:
    """Fully resolved configuration for one CLI invocation."""

    run: RunConfig = field(default_factory=RunConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    n_eval: int = 100
    synth: SynthConfig = field(default_factory=SynthConfig)

    def to_dict(self) -> dict:
        run = self.run.to_dict()
        aae = run.pop("aae")
        return {
            "run": run,
            "aae": {file_key: aae[arg] for file_key, arg in _AAE_KEYS.items()},
            "noise": {"depol": self.noise.depol_p, "readout_eps": self.noise.readout_eps, "shots": self.noise.shots, "n_eval": self.n_eval},
            "synth": asdict(self.synth),
        }


def load_file(path) -> dict:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON: {exc}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def resolve(doc: dict | None = None, overrides: dict | None = None) -> Settings:
    """Merge a config document with flag overrides (``{section: {key: value}}``) and validate."""
    merged: dict = {}
    for source in (doc or {}, overrides or {}):
        for section, values in source.items():
            if section not in SECTIONS:
                raise ConfigError(f"unknown config section {section!r}")
            if values is None:
                continue
            if not isinstance(values, dict):
                raise ConfigError(f"section {section!r} must be a mapping")
            for key, value in values.items():
                if key not in SECTIONS[section]:
                    raise ConfigError(f"unknown key {section}.{key}")
                if value is not None:
                    merged.setdefault(section, {})[key] = value

    def args(section):
        return {SECTIONS[section][k]: v for k, v in merged.get(section, {}).items()}

    try:
        run_args = args("run")
        for key in ("embed_hidden", "scorer_hidden"):
            if key in run_args:
                run_args[key] = tuple(int(w) for w in run_args[key])
        run = RunConfig(aae=AAEConfig(**args("aae")), **run_args)
        noise_args = args("noise")
        n_eval = int(noise_args.pop("n_eval", 100))
        if n_eval < 1:
            raise ConfigError("noise.n_eval must be >= 1")
        noise = NoiseModel(seed=run.seed, **noise_args)
        synth = SynthConfig(**args("synth"))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return Settings(run, noise, n_eval, synth)
