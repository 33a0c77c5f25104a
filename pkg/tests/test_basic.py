"""Basic tests for the WillmoreLab package."""

import willmore_lab as wl
from willmore_lab.core.check_registry import list_suites, load_builtin_checks


def test_package_import():
    """Test that the package imports correctly."""
    assert wl.__version__ == "0.3.0"
    assert wl.__author__ == "WillmoreLab developers"
    assert wl.__license__ == "AGPL-3.0"


def test_core_functions_exist():
    """Test that core functions are available."""
    for name in ('curvature_bundle', 'graph_sphere', 'energy', 'willmore_gradient',
                 'solve_auxiliary', 'reduced_functional', 'find_critical',
                 'small_radius_energy_fit', 'classify_family', 'load_family', 'load_config_data'):
        assert hasattr(wl, name), name


def test_all_names_resolve():
    for name in wl.__all__:
        assert getattr(wl, name) is not None


def test_builtin_suites_registered():
    load_builtin_checks()
    expected = {'spectral', 'metric', 'geometry', 'energy', 'reduction', 'asymptotics', 'einstein'}
    assert expected.issubset(set(list_suites()))
