# Data Loading Utilities

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from ..core.errors import ConfigError
from ..core.metrics import MetricFamily

logger = logging.getLogger(__name__)


def _read_json(path: Path) -> Any:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from e


def load_family(source: Union[str, Path, Dict[str, Any]]) -> MetricFamily:
    # Load a metric family.
    # Args:
    #     source: family document, or path to a JSON file holding one
    #             (either bare or under a "family" key)
    # Returns:
    #     MetricFamily
    if isinstance(source, dict):
        return MetricFamily.from_document(source.get("family", source))
    path = Path(source)
    if not path.is_file():
        raise FileNotFoundError(f"Family file not found: {path}")
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: family document must be a JSON object")
    return MetricFamily.from_document(doc.get("family", doc))


def load_config_data(config_path: Union[str, Path]) -> Dict[str, Any]:
    # Load configuration data from JSON files.
    # Args:
    #     config_path: Path to a JSON file, or a directory whose *.json files
    #                  are returned keyed by file stem
    # Returns:
    #     Configuration dictionary
    config_path = Path(config_path)

    if config_path.is_file():
        data = _read_json(config_path)
        if not isinstance(data, dict):
            raise ConfigError(f"{config_path}: top level must be a JSON object")
        return data
    if config_path.is_dir():
        config: Dict[str, Any] = {}
        for file_path in sorted(config_path.glob("*.json")):
            try:
                config[file_path.stem] = _read_json(file_path)
            except ConfigError as e:
                logger.warning("skipping %s: %s", file_path, e)
        return config
    raise FileNotFoundError(f"Config path {config_path} does not exist")


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def save_data(data: Any, file_path: Union[str, Path], indent: int = 2) -> None:
    # Save data to JSON file.
    # Args:
    #     data: Data to save; numpy arrays and scalars are converted
    #     file_path: Path to save file
    #     indent: JSON indentation level
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)

    with open(file_path, "w") as f:
        json.dump(data, f, indent=indent, default=_to_builtin)
        f.write("\n")


def save_rows_csv(rows: Sequence[Dict[str, Any]], file_path: Union[str, Path]) -> None:
    # Save a table as RFC 4180 CSV; columns in first-seen order across rows.
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    fieldnames: List[str] = []
    for row in rows:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)

    with open(file_path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) for k, v in row.items()})


def _cell(value: Any) -> Any:
    if isinstance(value, (np.generic,)):
        value = value.item()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return json.dumps(_to_builtin(value) if isinstance(value, np.ndarray) else list(value))
    return value
