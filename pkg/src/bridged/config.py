"""Experiment configuration files.

A config is an INI-style text file with sections ``[experiment]``,
``[sampler]``, ``[data]`` and ``[model]``. Only ``experiment.name`` is
required; everything else falls back to per-experiment defaults. Unknown
sections or keys are rejected with the offending line number.
"""
import configparser
import hashlib
import os
from dataclasses import dataclass, field

from bridged.errors import ConfigError

OUTPUT_ENV = "BRIDGED_OUTPUT_DIR"
DEFAULT_OUTPUT = "bridged-out"

EXPERIMENTS = ("lqe", "bmmc", "harmonization", "flow", "cox")

# key -> type for each section
SCHEMA = {
    "experiment": {"name": str, "seed": int, "output_dir": str},
    "sampler": {
        "method": str, "iterations": int, "burn_in": int, "target": float,
        "decay": float, "window_fraction": float, "initial_step": float,
        "warm_start": bool, "tau": float,
    },
    "data": {
        "source": str, "path": str, "n": int, "seed": int, "nodes": int,
        "n_uncertain": int, "n_rep": int, "subjects": int, "regions": int,
        "label": str, "group": str, "n_labeled": int, "n_unlabeled": int,
        "mask_men": int, "mask_women": int, "lam0": float,
    },
    "model": {"tol": float, "grid_max": float, "grid_size": int, "eta": float},
}

DEFAULTS = {
    "lqe": {"sampler": {"method": "rw", "iterations": 2000, "burn_in": 500},
            "data": {"source": "synthetic", "n": 200}},
    "bmmc": {"sampler": {"method": "bmmc", "iterations": 1500, "burn_in": 500},
             "data": {"source": "synthetic", "n_labeled": 30, "n_unlabeled": 6,
                      "label": "DEATH_EVENT", "group": "sex", "mask_men": 97,
                      "mask_women": 52}},
    "harmonization": {"sampler": {"method": "gibbs", "iterations": 10000, "burn_in": 2000},
                      "data": {"source": "synthetic", "subjects": 20, "regions": 24},
                      "model": {"grid_max": 5.0, "grid_size": 10}},
    "flow": {"sampler": {"method": "rw", "iterations": 10000, "burn_in": 2000},
             "data": {"source": "synthetic", "nodes": 40, "n_uncertain": 5, "n_rep": 500}},
    "cox": {"sampler": {"method": "bridged", "iterations": 10000, "burn_in": 2000},
            "data": {"source": "synthetic", "n": 500, "lam0": 0.8}},
}

METHODS = {
    "lqe": ("rw", "mala", "pg_gibbs"),
    "bmmc": ("bmmc", "gibbs_hinge"),
    "harmonization": ("gibbs",),
    "flow": ("rw",),
    "cox": ("bridged", "canonical"),
}


@dataclass
class ExperimentConfig:
    """Parsed configuration plus the exact text and its hash."""

    name: str
    seed: int
    output_dir: str
    sampler: dict
    data: dict
    model: dict
    text: str
    config_hash: str
    source_path: str = ""
    given: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return self.sampler["iterations"]

    @property
    def burn_in(self):
        return self.sampler["burn_in"]

    @property
    def run_dir(self):
        return os.path.join(self.output_dir, f"{self.name}-{self.config_hash[:12]}")


def _line_of(text, section, key=None):
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return no
        elif current == section and key is not None:
            k = line.split("=", 1)[0].split(":", 1)[0].strip().lower()
            if k == key:
                return no
    return 0


def _convert(text, section, key, value, typ):
    try:
        if typ is bool:
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        return typ(value.strip())
    except ValueError:
        line = _line_of(text, section, key)
        raise ConfigError(
            f"line {line}: [{section}] {key} = {value!r} is not a valid {typ.__name__}"
        ) from None


def parse_config(text, source_path=""):
    """Parse config text into an :class:`ExperimentConfig`."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source_path or "<config>")
    except configparser.ParsingError as exc:
        first = exc.errors[0][0] if exc.errors else 0
        raise ConfigError(f"line {first}: malformed line") from None
    except configparser.Error as exc:
        line = getattr(exc, "lineno", 0)
        raise ConfigError(f"line {line}: {exc.message if hasattr(exc, 'message') else exc}") from None

    given = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"line {_line_of(text, section)}: unknown section [{section}]")
        given[section] = {}
        for key, value in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(
                    f"line {_line_of(text, section, key)}: unknown key {key!r} in [{section}]")
            given[section][key] = _convert(text, section, key, value, SCHEMA[section][key])

    exp = given.get("experiment", {})
    name = exp.get("name")
    if name is None:
        raise ConfigError("line 0: [experiment] name is required")
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"line {_line_of(text, 'experiment', 'name')}: unknown experiment {name!r}; "
            f"valid names: {', '.join(EXPERIMENTS)}")
    merged = {}
    for section in ("sampler", "data", "model"):
        merged[section] = dict(DEFAULTS[name].get(section, {}))
        merged[section].update(given.get(section, {}))

    s = merged["sampler"]
    if s["method"] not in METHODS[name]:
        raise ConfigError(
            f"line {_line_of(text, 'sampler', 'method')}: method {s['method']!r} not available "
            f"for {name}; choose from {', '.join(METHODS[name])}")
    if not s["iterations"] > s["burn_in"] >= 0:
        raise ConfigError(
            f"line {_line_of(text, 'sampler', 'burn_in')}: need iterations > burn_in >= 0")

    output_dir = exp.get("output_dir") or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return ExperimentConfig(
        name=name, seed=exp.get("seed", 0), output_dir=output_dir,
        sampler=s, data=merged["data"], model=merged["model"], text=text,
        config_hash=digest, source_path=source_path, given=given,
    )


def load_config(path):
    """Read and parse a config file; a missing file is a :class:`ConfigError`."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source_path=path)
