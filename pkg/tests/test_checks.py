"""Tests for the verification registry and the built-in suites."""

import math

import pytest

from willmore_lab.core.check_registry import (
    CheckResult,
    below,
    check,
    get_check,
    list_checks,
    list_suites,
    load_builtin_checks,
    register_check,
    run_check,
    run_suite,
    unregister_check,
)
from willmore_lab.core.errors import ConfigError, NoConvergence

BUILTIN_SUITES = ["spectral", "metric", "geometry", "energy", "reduction", "asymptotics", "einstein"]


@pytest.fixture
def scratch_suite():
    yield "scratch"
    for name in [c.split("/", 1)[1] for c in list_checks("scratch")]:
        unregister_check("scratch", name)


def test_register_and_unregister(scratch_suite):
    register_check(scratch_suite, "one", lambda config: below(scratch_suite, "one", 0.5, 1.0))
    assert scratch_suite in list_suites()
    assert list_checks(scratch_suite) == ["scratch/one"]
    assert get_check(scratch_suite, "one")(None).passed
    unregister_check(scratch_suite, "one")
    assert scratch_suite not in list_suites()
    with pytest.raises(ConfigError):
        get_check(scratch_suite, "one")


def test_decorator_and_run_suite(scratch_suite):
    @check(scratch_suite, "passes")
    def passes(config):
        return below(scratch_suite, "passes", 1e-12, 1e-8)

    @check(scratch_suite, "raises")
    def raises(config):
        raise NoConvergence("stalled")

    results = run_suite(scratch_suite, config=None)
    assert [r.name for r in results] == ["passes", "raises"]
    assert results[0].passed
    assert not results[1].passed
    assert "NoConvergence" in results[1].detail


def test_unknown_suite():
    with pytest.raises(ConfigError):
        run_suite("no-such-suite", None)


def test_below_rejects_non_finite():
    assert not below("s", "n", math.nan, 1.0).passed
    assert not below("s", "n", 2.0, 1.0).passed
    result = below("s", "n", 0.5, 1.0, "detail")
    assert result == CheckResult("s", "n", True, 0.5, 1.0, "detail")
    assert result.to_dict()["detail"] == "detail"


def test_builtin_checks_are_listed():
    load_builtin_checks()
    names = list_checks()
    for expected in ("spectral/parseval", "metric/berger_koszul", "geometry/round_area",
                     "energy/gauss_bonnet", "reduction/critical_point",
                     "asymptotics/geodesic_rho4_law", "asymptotics/reduced_energy_order", "einstein/berger_is_case_one"):
        assert expected in names
    assert set(BUILTIN_SUITES) <= set(list_suites())


def test_spectral_suite_passes(run_config):
    load_builtin_checks()
    results = run_suite("spectral", run_config)
    failed = [f"{r.name}: {r.value}" for r in results if not r.passed]
    assert not failed


@pytest.mark.slow
@pytest.mark.parametrize("suite", BUILTIN_SUITES)
def test_builtin_suite_passes(run_config, suite):
    load_builtin_checks()
    failed = [f"{r.name}: {r.value} ({r.detail})" for r in run_suite(suite, run_config) if not r.passed]
    assert not failed


@pytest.mark.slow
def test_run_check_single(run_config):
    load_builtin_checks()
    result = run_check("metric", "berger_koszul", run_config)
    assert result.passed
    assert result.suite == "metric"


@pytest.mark.slow
@pytest.mark.parametrize("name", ["variation_identities", "gauss_bonnet", "gradient_directional"])
def test_perturbed_energy_checks_at_low_band_limit(run_config, name):
    load_builtin_checks()
    assert run_config.lmax == 8
    result = run_check("energy", name, run_config)
    assert result.passed, result.detail
