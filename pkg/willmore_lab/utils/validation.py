# Configuration Validation Utilities

import math
from typing import Any, Dict, Sequence

from ..core.errors import ConfigError
from ..core.metrics import BUILTIN_TENSORS, FAMILY_KINDS
from ..core.willmore import GRADIENT_MODES

ODE_METHODS = ("DOP853", "RK45", "Radau", "LSODA")


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite, got {value!r}")
    return float(value)


def _integer(value: Any, key: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{key} must be at least {minimum}, got {value}")
    return value


def _positive(value: Any, key: str) -> float:
    x = _number(value, key)
    if x <= 0.0:
        raise ConfigError(f"{key} must be positive, got {x}")
    return x


def _number_list(value: Any, key: str) -> Sequence[float]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key} must be a non-empty list of numbers")
    return [_number(v, f"{key}[{i}]") for i, v in enumerate(value)]


def validate_family_document(doc: Dict[str, Any]) -> None:
    # Validate a metric family document.
    # Args:
    #     doc: {"kind": ..., plus the kind's parameters}
    # Raises:
    #     ConfigError: naming the offending key
    if not isinstance(doc, dict):
        raise ConfigError("family must be a JSON object")
    kind = doc.get("kind")
    if kind not in FAMILY_KINDS:
        raise ConfigError(f"family.kind must be one of {FAMILY_KINDS}, got {kind!r}")

    if kind == "berger":
        if "lambda" not in doc and "epsilon" not in doc:
            raise ConfigError("berger family needs family.lambda or family.epsilon")
        if "lambda" in doc and _number(doc["lambda"], "family.lambda") <= 0.0:
            raise ConfigError(f"family.lambda must be positive, got {doc['lambda']}")
        if "epsilon" in doc:
            _number(doc["epsilon"], "family.epsilon")
    elif kind == "left_invariant":
        lambdas = _number_list(doc.get("lambdas"), "family.lambdas")
        if len(lambdas) != 3:
            raise ConfigError(f"family.lambdas needs 3 entries, got {len(lambdas)}")
        if min(lambdas) <= 0.0:
            raise ConfigError("family.lambdas must all be positive")
        if "epsilon" in doc:
            _number(doc["epsilon"], "family.epsilon")
    elif kind == "homothety":
        if "scale" in doc:
            _positive(doc["scale"], "family.scale")
        elif "epsilon" in doc:
            if _number(doc["epsilon"], "family.epsilon") <= -1.0:
                raise ConfigError("family.epsilon must exceed -1 for a homothety")
        else:
            raise ConfigError("homothety family needs family.epsilon or family.scale")
    elif kind == "round_plus_tensor":
        if "epsilon" not in doc:
            raise ConfigError("round_plus_tensor family needs family.epsilon")
        _number(doc["epsilon"], "family.epsilon")
        _validate_tensor(doc.get("h"))


def _validate_tensor(h: Any) -> None:
    if isinstance(h, str):
        if h not in BUILTIN_TENSORS:
            raise ConfigError(f"family.h must be one of {BUILTIN_TENSORS}, got {h!r}")
        return
    if isinstance(h, dict) and "builtin" in h:
        if h["builtin"] not in BUILTIN_TENSORS:
            raise ConfigError(f"family.h.builtin must be one of {BUILTIN_TENSORS}, got {h['builtin']!r}")
        if "c" in h:
            _number(h["c"], "family.h.c")
        return
    if isinstance(h, dict) and "table" in h:
        rows = h["table"]
        if not isinstance(rows, list) or not rows:
            raise ConfigError("family.h.table must be a non-empty list")
        for i, row in enumerate(rows):
            key = f"family.h.table[{i}]"
            if not isinstance(row, list) or len(row) != 4:
                raise ConfigError(f"{key} must be [a, b, coeff, [n0, n1, n2, n3]]")
            a, b, coeff, powers = row
            for name, idx in (("a", a), ("b", b)):
                if isinstance(idx, bool) or idx not in (0, 1, 2):
                    raise ConfigError(f"{key}.{name} must be 0, 1 or 2, got {idx!r}")
            _number(coeff, f"{key}.coeff")
            if not isinstance(powers, list) or len(powers) != 4:
                raise ConfigError(f"{key} powers must list 4 exponents")
            for j, n in enumerate(powers):
                _integer(n, f"{key}.powers[{j}]", 0)
        if "scale" in h:
            _number(h["scale"], "family.h.scale")
        return
    raise ConfigError("family.h must be a builtin name, {\"builtin\": ...} or {\"table\": ...}")


def validate_rho(rho: Any, delta: float = 0.0) -> float:
    # Validate a geodesic radius, optionally against the window [delta, pi - delta].
    r = _number(rho, "rho")
    lo, hi = max(delta, 0.0), math.pi - max(delta, 0.0)
    if not 0.0 < r < math.pi:
        raise ConfigError(f"rho must lie in (0, pi), got {r}")
    if delta > 0.0 and not lo <= r <= hi:
        raise ConfigError(f"rho = {r} outside the window [{lo:.4f}, {hi:.4f}]")
    return r


def validate_point(point: Any) -> Sequence[float]:
    # Validate a quaternion [x0, x1, x2, x3]; normalisation happens in S3Point.
    if not isinstance(point, (list, tuple)) or len(point) != 4:
        raise ConfigError(f"point must be a list of 4 numbers, got {point!r}")
    values = [_number(v, f"point[{i}]") for i, v in enumerate(point)]
    if math.sqrt(sum(v * v for v in values)) < 1e-12:
        raise ConfigError("point must be nonzero")
    return values


def validate_run_config(config: Dict[str, Any]) -> None:
    # Validate a merged run configuration.
    # Raises:
    #     ConfigError: naming the offending key
    validate_family_document(config.get("family"))
    validate_point(config.get("point"))
    _integer(config.get("lmax"), "lmax", 8)
    _integer(config.get("verify_lmax"), "verify_lmax", 8)
    _integer(config.get("seed"), "seed", 0)
    _integer(config.get("jobs"), "jobs", 1)

    solver = config.get("solver", {})
    _positive(solver.get("tol"), "solver.tol")
    _integer(solver.get("max_iter"), "solver.max_iter", 1)
    delta = _number(solver.get("delta"), "solver.delta")
    if not 0.0 < delta < math.pi / 2:
        raise ConfigError(f"solver.delta must lie in (0, pi/2), got {delta}")
    if solver.get("gradient_mode") not in GRADIENT_MODES:
        raise ConfigError(f"solver.gradient_mode must be one of {GRADIENT_MODES}")
    _positive(solver.get("fd_step"), "solver.fd_step")
    validate_rho(config.get("rho"), delta)

    ode = config.get("ode", {})
    if ode.get("method") not in ODE_METHODS:
        raise ConfigError(f"ode.method must be one of {ODE_METHODS}, got {ode.get('method')!r}")
    _positive(ode.get("rtol"), "ode.rtol")
    _positive(ode.get("atol"), "ode.atol")
    _integer(ode.get("n_cheb"), "ode.n_cheb", 8)

    curvature = config.get("curvature", {})
    for key in ("chart_step", "outer_step", "validity_floor"):
        _positive(curvature.get(key), f"curvature.{key}")
    if curvature["chart_step"] < 1e-7:
        raise ConfigError("curvature.chart_step below 1e-7 loses all digits")
    if curvature["validity_floor"] >= 1.0:
        raise ConfigError("curvature.validity_floor must lie below the round eigenvalue 1")

    optimizer = config.get("optimizer", {})
    _integer(optimizer.get("n_rho"), "optimizer.n_rho", 2)
    _integer(optimizer.get("max_evals"), "optimizer.max_evals", 1)
    for key in ("xatol", "fatol", "flat_tol"):
        _positive(optimizer.get(key), f"optimizer.{key}")

    asymptotics = config.get("asymptotics", {})
    for key in ("rho_list", "remainder_rho_list", "profile_rho_list"):
        for i, r in enumerate(_number_list(asymptotics.get(key), f"asymptotics.{key}")):
            if not 0.0 < r <= 0.25:
                raise ConfigError(f"asymptotics.{key}[{i}] must lie in (0, 0.25], got {r}")
    _number_list(asymptotics.get("eps_list"), "asymptotics.eps_list")

    einstein = config.get("einstein", {})
    for key in ("homothety_threshold", "coefficient_floor", "probe_radius"):
        _positive(einstein.get(key), f"einstein.{key}")
    _integer(einstein.get("probe_count"), "einstein.probe_count", 5)

    output = config.get("output", {})
    if not isinstance(output.get("root"), str):
        raise ConfigError("output.root must be a path string")
    if not isinstance(output.get("timestamped"), bool):
        raise ConfigError("output.timestamped must be true or false")
