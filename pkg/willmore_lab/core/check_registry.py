# Check Registry - Manages the verification suites run by `wlab verify`

import importlib
import logging
import math
import time
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Optional

from .errors import ConfigError, WillmoreLabError

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """Outcome of one verification check."""

    suite: str
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


CheckFn = Callable[[Any], CheckResult]

# suite -> check name -> callable, in registration order
_SUITES: Dict[str, Dict[str, CheckFn]] = {}


def register_check(suite: str, name: str, check: CheckFn) -> None:
    """Register a check under a suite."""
    _SUITES.setdefault(suite, {})[name] = check


def unregister_check(suite: str, name: str) -> None:
    """Remove a check; drops the suite once it is empty."""
    checks = _SUITES.get(suite)
    if checks and name in checks:
        del checks[name]
        if not checks:
            del _SUITES[suite]


def get_check(suite: str, name: str) -> CheckFn:
    """Get a check by suite and name."""
    if suite not in _SUITES or name not in _SUITES[suite]:
        raise ConfigError(f"Check '{suite}/{name}' not found. Available: {list_checks(suite if suite in _SUITES else None)}")
    return _SUITES[suite][name]


def list_suites() -> List[str]:
    """List all registered suites."""
    return list(_SUITES.keys())


def list_checks(suite: Optional[str] = None) -> List[str]:
    """List registered checks as 'suite/name', optionally for one suite."""
    suites = [suite] if suite is not None else list_suites()
    return [f"{s}/{n}" for s in suites for n in _SUITES.get(s, {})]


def check(suite: str, name: str) -> Callable[[CheckFn], CheckFn]:
    """Decorator form of register_check."""

    def wrap(fn: CheckFn) -> CheckFn:
        register_check(suite, name, fn)
        return fn

    return wrap


def run_check(suite: str, name: str, config: Any) -> CheckResult:
    # Run one check; library errors become a failed result.
    fn = get_check(suite, name)
    start = time.perf_counter()
    try:
        result = fn(config)
    except WillmoreLabError as e:
        logger.warning("check %s/%s raised %s: %s", suite, name, type(e).__name__, e)
        result = CheckResult(suite, name, False, float("nan"), float("nan"), f"{type(e).__name__}: {e}")
    logger.info("%s/%s %s (%.3g vs %.3g) in %.1fs", suite, name, "pass" if result.passed else "FAIL",
                result.value, result.threshold, time.perf_counter() - start)
    return result


def run_suite(suite: str, config: Any) -> List[CheckResult]:
    """Run every check of a suite in registration order."""
    if suite not in _SUITES:
        raise ConfigError(f"Suite '{suite}' not found. Available: {list_suites()}")
    return [run_check(suite, name, config) for name in list(_SUITES[suite])]


def load_builtin_checks() -> Dict[str, Dict[str, CheckFn]]:
    """Load all built-in verification suites."""
    for module in ("spectral", "metric", "geometry", "energy", "reduction", "asymptotics", "einstein"):
        try:
            importlib.import_module(f"..checks.{module}", __package__)
        except ImportError as e:
            logger.warning("Could not load %s checks: %s", module, e)
    return _SUITES


def below(suite: str, name: str, value: float, threshold: float, detail: str = "") -> CheckResult:
    """Result that passes when a finite value stays under the threshold."""
    value = float(value)
    return CheckResult(suite, name, math.isfinite(value) and value < threshold, value, float(threshold), detail)
