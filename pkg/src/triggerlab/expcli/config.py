"""Experiment configs: plain-text key = value with a suite-name section header.

Format:

    [adaptive_game]
    seed = 42
    replicates = 100000
    q = 101
    k = 1
    m = 12

Exactly one section; its header names the suite.  Every suite declares its
known parameter keys with types and defaults below; unknown keys are
rejected with a line diagnostic.  ``seed`` and ``replicates`` are common to
all suites.  Booleans are written ``true``/``false``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from triggerlab.errors import ConfigError

# suite -> {param: (python type, default)}
SUITE_PARAMS: dict = {
    "passive_bound": {
        "epsilon": (float, 0.1),
        "delta": (float, 0.6),
        "ell0": (float, 0.1),
        "ell1": (float, 0.9),
        "m_max": (int, 8),
        "stochastic": (bool, True),
        "model0_fixture": (str, ""),
        "model1_fixture": (str, ""),
        "dist_eval_fixture": (str, ""),
        "delta_prime": (float, 0.0),
    },
    "adaptive_game": {
        "q": (int, 101),
        "k": (int, 1),
        "m": (int, 12),
        "degree": (int, 0),  # 0 means "equal to m"
        "ell0": (float, 0.0),
        "ell1": (float, 1.0),
        "indist_replicates": (int, 2500),
        "indist_queries": (int, 12),
    },
    "query_complexity": {
        "epsilon": (float, 0.001),
        "eta_a": (float, 0.05),
        "eta_b": (float, 0.01),
    },
    "whitebox_coverage": {
        "gamma": (float, 0.8),
        "epsilon_R": (float, 0.1),
        "eta": (float, 0.05),
        "p": (float, 0.3),
        "ell0": (float, 0.2),
        "ell1": (float, 0.8),
        "loss_mode": (str, "bernoulli"),
    },
    "crypto_arena": {
        "n": (int, 8),
        "m": (int, 100),
        "deployment_samples": (int, 10000),
        "breach_replicates": (int, 1000),
    },
    "regime_report": {
        "epsilon": (float, 0.001),
        "delta": (float, 0.5),
        "ell0": (float, 0.1),
        "ell1": (float, 0.9),
        "m": (int, 100),
        "gamma": (float, 0.8),
        "epsilon_R": (float, 0.05),
        "eta": (float, 0.05),
    },
    "lemma_suite": {
        "q": (int, 5),
        "m": (int, 2),
        "k": (int, 1),
        "q_large": (int, 7),
        "m_large": (int, 3),
        "random_pairs": (int, 200),
        "max_atoms": (int, 6),
    },
}

COMMON_DEFAULTS = {"seed": 42, "replicates": 1000}

# Per-suite default replicate counts where 1000 is not the natural scale.
REPLICATE_DEFAULTS = {
    "query_complexity": 100000,
    "adaptive_game": 100000,
    "whitebox_coverage": 2000,
    "crypto_arena": 10000,
    "regime_report": 1,
    "lemma_suite": 1,
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    replicates: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in SUITE_PARAMS:
            raise ConfigError(
                f"unknown suite {self.experiment!r}; known: {sorted(SUITE_PARAMS)}"
            )
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        spec = SUITE_PARAMS[self.experiment]
        unknown = set(self.params) - set(spec)
        if unknown:
            raise ConfigError(f"unknown parameter keys {sorted(unknown)} "
                              f"for suite {self.experiment!r}")
        merged = {key: self.params.get(key, default) for key, (_, default) in spec.items()}
        for key, value in merged.items():
            want = spec[key][0]
            if want is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
                merged[key] = value
            if not isinstance(value, want) or (want is int and isinstance(value, bool)):
                raise ConfigError(
                    f"parameter {key!r} must be {want.__name__}, got {value!r}"
                )
        object.__setattr__(self, "params", merged)


def default_config(suite: str) -> ExperimentConfig:
    replicates = REPLICATE_DEFAULTS.get(suite, COMMON_DEFAULTS["replicates"])
    return ExperimentConfig(suite, COMMON_DEFAULTS["seed"], replicates, {})


def parse_config(text: str) -> ExperimentConfig:
    """Parse the single-section config format with line diagnostics."""
    suite = None
    fields: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            if suite is not None:
                raise ConfigError(f"line {lineno}: only one suite section allowed")
            suite = line[1:-1].strip()
            continue
        if suite is None:
            raise ConfigError(f"line {lineno}: content before the [suite] header")
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in fields:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        fields[key] = (lineno, value.strip())
    if suite is None:
        raise ConfigError("missing [suite] section header")
    if suite not in SUITE_PARAMS:
        raise ConfigError(f"unknown suite {suite!r}; known: {sorted(SUITE_PARAMS)}")

    seed = COMMON_DEFAULTS["seed"]
    replicates = REPLICATE_DEFAULTS.get(suite, COMMON_DEFAULTS["replicates"])
    params = {}
    spec = SUITE_PARAMS[suite]
    for key, (lineno, value) in fields.items():
        if key == "seed":
            seed = _convert(lineno, key, value, int)
        elif key == "replicates":
            replicates = _convert(lineno, key, value, int)
        elif key in spec:
            params[key] = _convert(lineno, key, value, spec[key][0])
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r} for suite {suite!r}")
    return ExperimentConfig(suite, seed, replicates, params)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = [f"[{cfg.experiment}]", f"seed = {cfg.seed}", f"replicates = {cfg.replicates}"]
    for key in SUITE_PARAMS[cfg.experiment]:
        lines.append(f"{key} = {_format_value(cfg.params[key])}")
    return "\n".join(lines) + "\n"


def apply_overrides(cfg: ExperimentConfig, sets: list) -> ExperimentConfig:
    """Apply CLI --set key=value overrides (typed per the suite schema)."""
    seed = cfg.seed
    replicates = cfg.replicates
    params = dict(cfg.params)
    spec = SUITE_PARAMS[cfg.experiment]
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "seed":
            seed = _convert(0, key, value, int)
        elif key == "replicates":
            replicates = _convert(0, key, value, int)
        elif key in spec:
            params[key] = _convert(0, key, value, spec[key][0])
        else:
            raise ConfigError(f"unknown key {key!r} for suite {cfg.experiment!r}")
    return ExperimentConfig(cfg.experiment, seed, replicates, params)


def _convert(lineno: int, key: str, value: str, want: type):
    where = f"line {lineno}: " if lineno else ""
    if want is bool:
        low = value.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"{where}key {key!r}: expected true/false, got {value!r}")
    if want is int:
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{where}key {key!r}: expected integer, got {value!r}") from None
    if want is float:
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{where}key {key!r}: expected number, got {value!r}") from None
    return value


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)
