# Configuration Management

import copy
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..core.errors import ConfigError
from ..core.geodesics import OdeSettings
from ..core.metrics import MetricFamily, S3Point
from ..core.reduction import OptimizerConfig, SolverConfig
from .validation import validate_run_config

DEFAULTS_PATH = Path(__file__).parent.parent / "data" / "defaults.json"


def get_default_config() -> Dict[str, Any]:
    """Default configuration loaded from the packaged defaults.json."""
    if not DEFAULTS_PATH.exists():
        raise FileNotFoundError(f"Defaults file not found: {DEFAULTS_PATH}")
    return read_json(DEFAULTS_PATH)


def read_json(path: Path) -> Dict[str, Any]:
    # Parse a JSON object, reporting syntax errors with line and column.
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def merge_config(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    # Recursive merge; dict values merge key by key, everything else replaces.
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict) and key != "family":
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config_file(config_path: Optional[Path]) -> Dict[str, Any]:
    # Load a user configuration merged over the defaults and validate it.
    config = get_default_config()
    if config_path is not None:
        config_path = Path(config_path)
        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {config_path}")
        config = merge_config(config, read_json(config_path))
    validate_run_config(config)
    return config


def save_config_file(config: Dict[str, Any], config_path: Path) -> None:
    # Save configuration to a file.
    config_path.parent.mkdir(parents=True, exist_ok=True)
    with open(config_path, "w") as f:
        json.dump(config, f, indent=2)


@dataclass
class RunConfig:
    """Typed view of a validated configuration document."""

    family: MetricFamily
    point: S3Point
    rho: float
    lmax: int
    verify_lmax: int
    seed: int
    jobs: int
    solver: SolverConfig
    optimizer: OptimizerConfig
    chart_step: float
    outer_step: float
    validity_floor: float
    rho_list: List[float]
    eps_list: List[float]
    remainder_rho_list: List[float]
    profile_rho_list: List[float]
    homothety_threshold: float
    coefficient_floor: float
    probe_radius: float
    probe_count: int
    output_root: Path
    timestamped: bool
    document: Dict[str, Any] = field(default_factory=dict, repr=False)

    @classmethod
    def from_document(cls, doc: Dict[str, Any]) -> "RunConfig":
        validate_run_config(doc)
        s, o, c = doc["solver"], doc["optimizer"], doc["curvature"]
        a, e = doc["asymptotics"], doc["einstein"]
        ode = OdeSettings(
            method=doc["ode"]["method"],
            rtol=float(doc["ode"]["rtol"]),
            atol=float(doc["ode"]["atol"]),
            n_cheb=int(doc["ode"]["n_cheb"]),
        )
        solver = SolverConfig(
            tol=float(s["tol"]),
            max_iter=int(s["max_iter"]),
            lmax=int(doc["lmax"]),
            delta=float(s["delta"]),
            gradient_mode=s["gradient_mode"],
            fd_step=float(s["fd_step"]),
            ode=ode,
        )
        optimizer = OptimizerConfig(
            n_rho=int(o["n_rho"]),
            max_evals=int(o["max_evals"]),
            xatol=float(o["xatol"]),
            fatol=float(o["fatol"]),
            flat_tol=float(o["flat_tol"]),
        )
        return cls(
            family=replace(MetricFamily.from_document(doc["family"]), validity_floor=float(c["validity_floor"])),
            point=S3Point(tuple(doc["point"])),
            rho=float(doc["rho"]),
            lmax=int(doc["lmax"]),
            verify_lmax=int(doc["verify_lmax"]),
            seed=int(doc["seed"]),
            jobs=int(doc["jobs"]),
            solver=solver,
            optimizer=optimizer,
            chart_step=float(c["chart_step"]),
            outer_step=float(c["outer_step"]),
            validity_floor=float(c["validity_floor"]),
            rho_list=[float(r) for r in a["rho_list"]],
            eps_list=[float(x) for x in a["eps_list"]],
            remainder_rho_list=[float(r) for r in a["remainder_rho_list"]],
            profile_rho_list=[float(r) for r in a["profile_rho_list"]],
            homothety_threshold=float(e["homothety_threshold"]),
            coefficient_floor=float(e["coefficient_floor"]),
            probe_radius=float(e["probe_radius"]),
            probe_count=int(e["probe_count"]),
            output_root=Path(doc["output"]["root"]),
            timestamped=bool(doc["output"]["timestamped"]),
            document=copy.deepcopy(doc),
        )

    @classmethod
    def load(cls, config_path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None) -> "RunConfig":
        doc = load_config_file(config_path)
        if overrides:
            doc = merge_config(doc, overrides)
        return cls.from_document(doc)

    def to_document(self) -> Dict[str, Any]:
        doc = copy.deepcopy(self.document)
        doc["family"] = self.family.to_document()
        return doc
