"""Run configuration shared by the command line and the acceptance suite."""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional
import configparser
import logging
import os

logger = logging.getLogger(__name__)

# Default quadrature order (nodes per axis per cell)
DEFAULT_QUADRATURE_ORDER = 64

# Named tolerances of the numerical checks, keyed the way they appear in config files.
# Plane comparisons use the fixed tolerances of core_geometry.
DEFAULT_TOLERANCES = {
    "hermitian": 1e-8,
    "condition": 1e12,
    "annihilation": 1e-3,
    "kernel_moment": 1e-4,
}

OUTPUT_FORMATS = ("csv", "json")

# Section used when a config file has no section headers of its own
_SECTION = "run"


@dataclass(frozen=True)
class RunConfig:
    """Reproducible settings for a command line run.

    Args:
        quadrature_order (int, optional): Gauss-Legendre nodes per axis per cell. Defaults to 64.
        tolerances (Dict[str, float], optional): Named tolerances. Missing names fall back to DEFAULT_TOLERANCES.
        output_format (str, optional): Either "csv" or "json". Defaults to "json".
        seed (int, optional): Seed of the randomized property sweeps. Defaults to 0.
        degrees (bool, optional): Whether angles on the command line are given in degrees. Defaults to False.
    """

    quadrature_order: int = DEFAULT_QUADRATURE_ORDER
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_format: str = "json"
    seed: int = 0
    degrees: bool = False

    def __post_init__(self):
        if self.quadrature_order < 4:
            raise ValueError(f"quadrature_order must be at least 4, got {self.quadrature_order}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ValueError(
                f"output_format must be one of {OUTPUT_FORMATS}, got {self.output_format!r}"
            )
        merged = dict(DEFAULT_TOLERANCES)
        merged.update(self.tolerances)
        for name, value in merged.items():
            if not value > 0:
                raise ValueError(f"Tolerance {name!r} must be positive, got {value}")
        object.__setattr__(self, "tolerances", merged)

    def tolerance(self, name: str) -> float:
        """Looks up a named tolerance.

        Raises:
            KeyError: If the name is unknown.
        """
        return self.tolerances[name]

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Returns a copy with every non-None override applied."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **changes)


def read_config_file(path: str) -> Dict[str, str]:
    """Reads a key-value config file.

    Lines look like `quadrature_order = 32`. Tolerances are given as `tol.<name> = <value>`.
    A leading `[run]` header is optional.

    Args:
        path (str): The config file to read.

    Raises:
        FileNotFoundError: If the file does not exist.

    Returns:
        Dict[str, str]: The raw key-value pairs.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Config file not found: {path}")
    with open(path, "r") as file:
        text = file.read()
    parser = configparser.ConfigParser()
    # plain key-value files have no header
    if not text.lstrip().startswith("["):
        text = f"[{_SECTION}]\n{text}"
    parser.read_string(text)
    section = parser[_SECTION] if parser.has_section(_SECTION) else parser[parser.sections()[0]]
    logger.info(f"Read {len(section)} settings from {os.path.abspath(path)}")
    return dict(section)


def config_from_mapping(values: Dict[str, str], base: Optional[RunConfig] = None) -> RunConfig:
    """Builds a RunConfig from raw strings, on top of an optional base config.

    Raises:
        ValueError: On unknown keys or unparsable values.
    """
    base = base if base is not None else RunConfig()
    tolerances = dict(base.tolerances)
    changes: Dict[str, Any] = {}
    for key, raw in values.items():
        key = key.strip().lower()
        if key.startswith("tol.") or key.startswith("tolerance."):
            tolerances[key.split(".", 1)[1]] = float(raw)
        elif key == "quadrature_order":
            changes["quadrature_order"] = int(raw)
        elif key == "output_format":
            changes["output_format"] = raw.strip().lower()
        elif key == "seed":
            changes["seed"] = int(raw)
        elif key == "degrees":
            changes["degrees"] = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            raise ValueError(f"Unknown config key: {key!r}")
    changes["tolerances"] = tolerances
    return replace(base, **changes)


def load_run_config(path: Optional[str] = None, **overrides: Any) -> RunConfig:
    """Loads the run configuration. Command line overrides win over the file.

    Args:
        path (str, optional): A key-value config file. Defaults to None.
        **overrides: quadrature_order, output_format, seed or degrees given on the command line.

    Returns:
        RunConfig: The merged configuration.
    """
    config = RunConfig()
    if path is not None:
        config = config_from_mapping(read_config_file(path), config)
    return config.with_overrides(**overrides)
