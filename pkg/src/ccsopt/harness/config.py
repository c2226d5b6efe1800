"""Experiment configuration: dataclass, named presets, and INI loading.

Config files carry four sections. [experiment] holds loop controls and
acquisition budgets, [surrogate] holds the budget profile plus per-key
surrogate overrides, and [aquifer]/[econ] override proxy constants.
Unknown sections or keys are configuration errors, never warnings.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

from ccsopt.errors import ConfigError
from ccsopt.proxy.benchmarks import BENCHMARKS
from ccsopt.proxy.cases import CASES, AquiferSpec, EconSpec
from ccsopt.surrogates import ROSTER, resolve_options

_EXPERIMENT_INT_KEYS = (
    "n_init",
    "n_iterations",
    "batch_size",
    "n_trials",
    "seed",
    "n_mc_samples",
    "raw_candidates",
    "n_restarts",
    "local_steps",
)
_EXPERIMENT_STR_KEYS = ("case", "surrogate", "output_dir", "preset")

# named protocols; explicit keys override preset values
PRESETS: dict[str, dict] = {
    # 15 initial points, 15 iterations of 4 candidates
    "c1-protoA": {
        "case": "c1v1",
        "n_init": 15,
        "n_iterations": 15,
        "batch_size": 4,
    },
    # the 12-iteration, 5-sample variant of the same protocol
    "c1-protoB": {
        "case": "c1v1",
        "n_init": 15,
        "n_iterations": 12,
        "batch_size": 5,
    },
    # full-length multi-objective study
    "c2-paper": {
        "case": "c2",
        "n_init": 15,
        "n_iterations": 120,
        "batch_size": 5,
        "n_trials": 8,
        "surrogate_options": {"budget": "paper"},
    },
    # smoke-scale variant sized for one CPU
    "c2-desk": {
        "case": "c2",
        "n_init": 15,
        "n_iterations": 20,
        "batch_size": 5,
        "n_trials": 8,
        "n_mc_samples": 16,
        "raw_candidates": 64,
        "n_restarts": 2,
        "local_steps": 0,
        "surrogate_options": {"budget": "desk"},
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a seeded run needs; validated on construction."""

    case_id: str
    surrogate: str
    n_init: int = 15
    n_iterations: int = 15
    batch_size: int = 4
    n_trials: int = 1
    seed: int = 0
    n_mc_samples: int = 64
    raw_candidates: int = 256
    n_restarts: int = 4
    local_steps: int = 3
    surrogate_options: dict = field(default_factory=dict)
    aquifer: AquiferSpec = field(default_factory=AquiferSpec)
    econ: EconSpec = field(default_factory=EconSpec)
    output_dir: str | None = None

    def __post_init__(self):
        if self.case_id not in CASES and self.case_id not in BENCHMARKS:
            raise ConfigError(
                f"unknown case {self.case_id!r}; "
                f"known: {sorted(CASES) + sorted(BENCHMARKS)}"
            )
        if self.surrogate not in ROSTER:
            raise ConfigError(
                f"unknown surrogate {self.surrogate!r}; roster: {ROSTER}"
            )
        if self.n_init < 2:
            raise ConfigError(f"n_init must be >= 2, got {self.n_init}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.n_iterations < 0:
            raise ConfigError(f"n_iterations must be >= 0, got {self.n_iterations}")
        if self.n_trials < 1:
            raise ConfigError(f"n_trials must be >= 1, got {self.n_trials}")
        # fail fast on bad surrogate options rather than at first fit
        resolve_options(dict(self.surrogate_options))

    def snapshot(self) -> dict:
        """Functional configuration as JSON-ready primitives.

        output_dir is excluded: where logs land does not change them.
        """
        return {
            "case": self.case_id,
            "surrogate": self.surrogate,
            "n_init": self.n_init,
            "n_iterations": self.n_iterations,
            "batch_size": self.batch_size,
            "n_trials": self.n_trials,
            "seed": self.seed,
            "n_mc_samples": self.n_mc_samples,
            "raw_candidates": self.raw_candidates,
            "n_restarts": self.n_restarts,
            "local_steps": self.local_steps,
            "surrogate_options": {
                k: list(v) if isinstance(v, tuple) else v
                for k, v in sorted(self.surrogate_options.items())
            },
            "aquifer": dataclasses.asdict(self.aquifer),
            "econ": dataclasses.asdict(self.econ),
        }


def make_config(preset: str | None = None, **overrides) -> ExperimentConfig:
    """Build a config from an optional preset plus keyword overrides."""
    merged: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        merged.update(PRESETS[preset])
    base_opts = dict(merged.pop("surrogate_options", {}))
    extra_opts = overrides.pop("surrogate_options", None)
    if extra_opts:
        base_opts.update(extra_opts)
    merged.update(overrides)
    case_id = merged.pop("case", None)
    if case_id is None:
        raise ConfigError("config must name a case")
    if "surrogate" not in merged:
        raise ConfigError("config must name a surrogate")
    return ExperimentConfig(
        case_id=case_id, surrogate_options=base_opts, **merged
    )


def _coerce(value: str):
    text = value.strip()
    if "," in text:
        try:
            return tuple(int(tok) for tok in text.split(","))
        except ValueError:
            raise ConfigError(f"bad tuple value {value!r}") from None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _dataclass_from_section(cls, section, name):
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in section.items():
        if key not in known:
            raise ConfigError(f"unknown [{name}] key {key!r}")
        try:
            kwargs[key] = float(raw)
        except ValueError:
            raise ConfigError(f"[{name}] {key} must be a number, got {raw!r}") from None
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{name}]: {exc}") from None


def load_config(path, **overrides) -> ExperimentConfig:
    """Parse an INI config file; overrides win over file values."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    unknown = set(parser.sections()) - {"experiment", "surrogate", "aquifer", "econ"}
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")

    kwargs: dict = {}
    preset = None
    if parser.has_section("experiment"):
        for key, raw in parser["experiment"].items():
            if key in _EXPERIMENT_INT_KEYS:
                try:
                    kwargs[key] = int(raw)
                except ValueError:
                    raise ConfigError(
                        f"[experiment] {key} must be an integer, got {raw!r}"
                    ) from None
            elif key in _EXPERIMENT_STR_KEYS:
                if key == "preset":
                    preset = raw.strip()
                else:
                    kwargs[key] = raw.strip()
            else:
                raise ConfigError(f"unknown [experiment] key {key!r}")
    if parser.has_section("surrogate"):
        kwargs["surrogate_options"] = {
            key: _coerce(raw) for key, raw in parser["surrogate"].items()
        }
    if parser.has_section("aquifer"):
        kwargs["aquifer"] = _dataclass_from_section(
            AquiferSpec, parser["aquifer"], "aquifer"
        )
    if parser.has_section("econ"):
        kwargs["econ"] = _dataclass_from_section(EconSpec, parser["econ"], "econ")

    opts = kwargs.pop("surrogate_options", None)
    extra = overrides.pop("surrogate_options", None)
    merged_opts = dict(opts or {})
    if extra:
        merged_opts.update(extra)
    kwargs.update(overrides)
    if merged_opts:
        kwargs["surrogate_options"] = merged_opts
    return make_config(preset=preset, **kwargs)
