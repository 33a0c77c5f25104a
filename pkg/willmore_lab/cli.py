#!/usr/bin/env python3
"""
Command-line interface for WillmoreLab
"""

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

import willmore_lab as wl
from .core.asymptotics import (
    BRANCHES,
    CRITICAL_COEFFICIENT,
    PROFILE_COEFFICIENT,
    gluing_consistency,
    profile_residual_series,
    remainder_bound_fit,
    rho_derivative_probe,
    small_radius_energy_fit,
)
from .core.check_registry import list_checks, list_suites, load_builtin_checks, run_suite
from .core.curvature import bianchi_residual, curvature_bundle, traceless_ricci_linearization
from .core.einstein import default_probes, classify_family, normal_coordinate_expansion, probe_points
from .core.errors import ConfigError, NoConvergence, NumericalError, WindowCollapse
from .core.geodesics import graph_sphere
from .core.metrics import validity_bound
from .core.reduction import find_critical, solve_auxiliary
from .core.spectral import SphereField
from .core.willmore import energy, hessian_spectrum, willmore_gradient
from .data.loader import load_config_data, save_data, save_rows_csv
from .utils.config import RunConfig, save_config_file

logger = logging.getLogger("willmore_lab.cli")

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='Path to a JSON config merged over the defaults')
    common.add_argument('--family', help='Path to a metric family JSON document')
    common.add_argument('--out', help='Output directory (default: ./out/<timestamp>/<command>)')
    common.add_argument('--jobs', type=int, help='Worker processes for grid evaluations')
    common.add_argument('--seed', type=int, help='Seed for random probes')
    common.add_argument('--point', type=float, nargs=4, metavar='X', help='Centre quaternion x0 x1 x2 x3')
    common.add_argument('--rho', type=float, help='Geodesic radius')
    common.add_argument('--lmax', type=int, help='Spherical-harmonic band limit')
    common.add_argument('--pretty', action='store_true', help='Pretty print JSON output')
    common.add_argument('-v', '--verbose', action='store_true', help='Debug logging on stderr')

    parser = argparse.ArgumentParser(
        prog='wlab',
        description="WillmoreLab - conformal Willmore spheres in perturbed round 3-spheres",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  wlab curvature --family data/berger.json
  wlab energy --rho 0.8 --mode fd
  wlab reduce --family data/berger.json --rho 0.8
  wlab find-critical --jobs 4
  wlab asymptotics --quantity energy
  wlab classify --family data/homothety.json
  wlab verify --suite spectral --suite metric
  wlab list-suites
        """
    )
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    subparsers.add_parser('curvature', parents=[common], help='Curvature report at probe points')

    sphere = subparsers.add_parser('sphere', parents=[common], help='Sample a geodesic-sphere graph')
    sphere.add_argument('--w', help='JSON file with SH coefficients of w (default: w = 0)')

    energy_parser = subparsers.add_parser('energy', parents=[common], help='Energies and gradient of a graph sphere')
    energy_parser.add_argument('--w', help='JSON file with SH coefficients of w (default: w = 0)')
    energy_parser.add_argument('--mode', choices=['analytic', 'fd'], help='Gradient mode')
    energy_parser.add_argument('--hessian', action='store_true', help='Also tabulate the second-variation spectrum')

    reduce_parser = subparsers.add_parser('reduce', parents=[common], help='Solve the auxiliary equation at (p, rho)')
    reduce_parser.add_argument('--mode', choices=['analytic', 'fd'], help='Gradient mode')

    subparsers.add_parser('find-critical', parents=[common], help='Maximise the reduced functional')

    asym = subparsers.add_parser('asymptotics', parents=[common], help='Small-radius fits of the reduced functional')
    asym.add_argument('--quantity', choices=['all', 'energy', 'remainder', 'profile', 'derivative', 'gluing'],
                      default='all', help='Series to compute')

    classify = subparsers.add_parser('classify', parents=[common], help='Case I / II / III classification')
    classify.add_argument('--normal-coordinates', action='store_true',
                          help='Also fit the normal-coordinate expansion at the point')

    verify = subparsers.add_parser('verify', parents=[common], help='Run verification suites')
    verify.add_argument('--suite', action='append', help='Suite name (repeatable, default: all)')

    subparsers.add_parser('list-suites', help='List verification suites and their checks')
    subparsers.add_parser('version', help='Show version information')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point for WillmoreLab."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_OK

    level = logging.DEBUG if getattr(args, 'verbose', False) else logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger('willmore_lab').setLevel(level)

    handlers = {
        'curvature': handle_curvature,
        'sphere': handle_sphere,
        'energy': handle_energy,
        'reduce': handle_reduce,
        'find-critical': handle_find_critical,
        'asymptotics': handle_asymptotics,
        'classify': handle_classify,
        'verify': handle_verify,
    }
    try:
        if args.command == 'list-suites':
            return handle_list_suites()
        if args.command == 'version':
            return handle_version()
        config = load_run_config(args)
        return handlers[args.command](args, config)
    except (ConfigError, FileNotFoundError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"Numerical failure ({type(e).__name__}): {e}", file=sys.stderr)
        return EXIT_NUMERICAL


# configuration and output plumbing

def load_run_config(args: argparse.Namespace) -> RunConfig:
    overrides: Dict[str, Any] = {}
    if args.family:
        doc = load_config_data(args.family)
        overrides['family'] = doc.get('family', doc)
    for key in ('jobs', 'seed', 'rho', 'lmax'):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.point is not None:
        overrides['point'] = list(args.point)
    if getattr(args, 'mode', None):
        overrides['solver'] = {'gradient_mode': args.mode}
    return RunConfig.load(Path(args.config) if args.config else None, overrides)


def output_dir(args: argparse.Namespace, config: RunConfig) -> Path:
    if args.out:
        out = Path(args.out)
    elif config.timestamped:
        out = config.output_root / datetime.now().strftime("%Y%m%d-%H%M%S") / args.command
    else:
        out = config.output_root / args.command
    out.mkdir(parents=True, exist_ok=True)
    save_config_file(config.to_document(), out / 'config.json')
    return out


def emit(args: argparse.Namespace, summary: Dict[str, Any]) -> None:
    if args.pretty:
        print(json.dumps(summary, indent=2, default=str))
    else:
        print(json.dumps(summary, default=str))


def load_w(path: Optional[str], lmax: int) -> SphereField:
    if not path:
        return SphereField.zeros(lmax)
    data = load_config_data(path)
    coeffs = data.get('w')
    if not isinstance(coeffs, list):
        raise ConfigError(f"{path}: expected a 'w' list of SH coefficients")
    return SphereField(int(data.get('lmax', lmax)), np.asarray(coeffs, dtype=float))


# command handlers

def handle_curvature(args: argparse.Namespace, config: RunConfig) -> int:
    """Handle the curvature command."""
    out = output_dir(args, config)
    family = config.family
    points = [config.point] + probe_points()
    rows, bundles = [], []
    for pt in points:
        b = curvature_bundle(family, pt, config.chart_step)
        bianchi = float(np.max(np.abs(bianchi_residual(family, pt, config.outer_step, config.chart_step))))
        doc = b.to_dict()
        doc['bianchi'] = bianchi
        bundles.append(doc)
        rows.append({
            'x0': pt.q[0], 'x1': pt.q[1], 'x2': pt.q[2], 'x3': pt.q[3],
            'scalar': b.scalar, 'ric0_norm2': b.ric0_norm2,
            'ricci_decomposition': b.ricci_decomposition_residual(), 'bianchi': bianchi,
        })
    report: Dict[str, Any] = {
        'family': family.to_document(),
        'validity_bound': validity_bound(family.with_epsilon(0.0), config.validity_floor),
        'points': bundles,
    }
    if family.kind != 'round':
        try:
            lin = traceless_ricci_linearization(family, config.point)
            report['linearization'] = {'tensor': lin.tensor.tolist(), 't2': lin.t2, 'richardson_gap': lin.richardson_gap}
        except NumericalError as e:
            logger.warning("traceless Ricci linearization skipped: %s", e)
    save_data(report, out / 'curvature.json')
    save_rows_csv(rows, out / 'curvature.csv')
    emit(args, {'out': str(out), 'scalar': [r['scalar'] for r in rows], 'ric0_norm2': [r['ric0_norm2'] for r in rows]})
    return EXIT_OK


def handle_sphere(args: argparse.Namespace, config: RunConfig) -> int:
    """Handle the sphere command."""
    out = output_dir(args, config)
    w = load_w(args.w, config.lmax)
    surface = graph_sphere(config.family, config.point, config.rho, w, config.solver.ode)
    summary = {
        'rho': config.rho,
        'area': surface.area(),
        'H_min': float(np.min(surface.H)),
        'H_max': float(np.max(surface.H)),
        'residuals': surface.invariant_residuals(),
    }
    save_rows_csv(surface.to_rows(), out / 'sphere.csv')
    save_data(summary, out / 'sphere.json')
    emit(args, {'out': str(out), **summary})
    return EXIT_OK


def handle_energy(args: argparse.Namespace, config: RunConfig) -> int:
    """Handle the energy command."""
    out = output_dir(args, config)
    w = load_w(args.w, config.lmax)
    surface = graph_sphere(config.family, config.point, config.rho, w, config.solver.ode)
    report = energy(surface).to_dict()
    grad = willmore_gradient(config.family, config.point, config.rho, w, config.solver.gradient_mode,
                             config.solver.fd_step, config.solver.ode)
    report['gradient_mode'] = config.solver.gradient_mode
    report['gradient_norm'] = grad.norm()
    report['gradient'] = grad.to_list()
    if args.hessian:
        rows = hessian_spectrum(config.family, config.point, config.rho, lmax=config.lmax, ode=config.solver.ode)
        save_rows_csv(rows, out / 'hessian.csv')
        report['hessian'] = rows
    save_data(report, out / 'energy.json')
    emit(args, {'out': str(out), **{k: v for k, v in report.items() if k != 'gradient'}})
    return EXIT_OK


def handle_reduce(args: argparse.Namespace, config: RunConfig) -> int:
    """Handle the reduce command."""
    out = output_dir(args, config)
    try:
        point = solve_auxiliary(config.family, config.point, config.rho, config.solver)
    except NoConvergence as e:
        if e.best is not None:
            save_data(e.best.to_dict(), out / 'reduced.json')
        print(f"Numerical failure (NoConvergence): {e}; best iterate saved to {out}", file=sys.stderr)
        return EXIT_NUMERICAL
    save_data(point.to_dict(), out / 'reduced.json')
    save_rows_csv([{'iteration': k, 'residual': r} for k, r in enumerate(point.residual_history)],
                  out / 'residuals.csv')
    emit(args, {'out': str(out), 'phi': point.phi, 'aux_residual': point.aux_residual,
                'kernel_coeffs': point.kernel_coeffs.tolist(), 'iterations': point.iterations})
    return EXIT_OK


def handle_find_critical(args: argparse.Namespace, config: RunConfig) -> int:
    """Handle the find-critical command."""
    out = output_dir(args, config)
    try:
        start = config.point if args.point is not None else None
        search = find_critical(config.family, config.solver, config.optimizer, config.jobs, start)
    except WindowCollapse as e:
        if e.incumbent is not None:
            save_data(e.incumbent.to_dict(), out / 'critical.json')
            save_rows_csv(_trail_rows(e.incumbent.trail), out / 'trail.csv')
        logger.warning("window collapse: %s", e)
        print(f"Numerical failure (WindowCollapse): {e}; incumbent saved to {out}", file=sys.stderr)
        return EXIT_NUMERICAL
    save_data(search.to_dict(), out / 'critical.json')
    save_rows_csv(_trail_rows(search.trail), out / 'trail.csv')
    best = search.incumbent
    emit(args, {'out': str(out), 'p': best.p.to_list(), 'rho': best.rho, 'phi': best.phi,
                'critical': search.critical, 'flat': search.flat, 'message': search.message})
    return EXIT_OK


def _trail_rows(trail: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    rows = []
    for entry in trail:
        row = {k: v for k, v in entry.items() if k != 'p'}
        row.update({f'x{i}': c for i, c in enumerate(entry['p'])})
        rows.append(row)
    return rows


def handle_asymptotics(args: argparse.Namespace, config: RunConfig) -> int:
    """Handle the asymptotics command."""
    out = output_dir(args, config)
    wanted = args.quantity
    summary: Dict[str, Any] = {'out': str(out)}
    family, p, solver = config.family, config.point, config.solver

    if wanted in ('all', 'energy'):
        summary['energy'] = {}
        for branch in BRANCHES:
            fit = small_radius_energy_fit(family, p, config.rho_list, solver, config.jobs, branch)
            save_rows_csv(fit.samples, out / f'energy_{branch}.csv')
            save_data(fit.to_dict(), out / f'energy_{branch}.json')
            summary['energy'][branch] = {'exponent': fit.fitted_exponent, 'coefficient': fit.fitted_coefficient,
                                         'target': fit.target_coefficient, 'relative_error': fit.relative_error}
    if wanted in ('all', 'remainder'):
        fit = remainder_bound_fit(family, p, config.eps_list, config.remainder_rho_list, solver, config.jobs)
        save_rows_csv(fit.samples, out / 'remainder.csv')
        save_data(fit.to_dict(), out / 'remainder.json')
        summary['remainder'] = {**fit.metadata['bound'], 'slopes': fit.metadata['slopes']}
    if wanted in ('all', 'profile'):
        summary['profile'] = {}
        for name, coefficient in (('critical', CRITICAL_COEFFICIENT), ('profile', PROFILE_COEFFICIENT)):
            fit = profile_residual_series(family, p, config.profile_rho_list, solver, coefficient)
            save_rows_csv(fit.samples, out / f'profile_{name}.csv')
            summary['profile'][name] = {'slope': fit.fitted_exponent, 'degenerate': fit.degenerate,
                                        'residuals': [s['residual'] for s in fit.samples]}
    if wanted in ('all', 'derivative'):
        fit = rho_derivative_probe(family, p, config.profile_rho_list, solver)
        save_rows_csv(fit.samples, out / 'rho_derivative.csv')
        summary['derivative'] = {'slope': fit.fitted_exponent, 'degenerate': fit.degenerate}
    if wanted in ('all', 'gluing'):
        rows = [{'rho': r, 'distance': gluing_consistency(family, p, r, solver)} for r in config.profile_rho_list]
        save_rows_csv(rows, out / 'gluing.csv')
        summary['gluing'] = max(r['distance'] for r in rows)

    save_data(summary, out / 'asymptotics.json')
    emit(args, summary)
    return EXIT_OK


def handle_classify(args: argparse.Namespace, config: RunConfig) -> int:
    """Handle the classify command."""
    out = output_dir(args, config)
    probes = default_probes(config.family, config.probe_radius, config.probe_count)
    result = classify_family(config.family, eps_probe=probes, floor=config.coefficient_floor,
                             threshold=config.homothety_threshold)
    report = result.to_dict()
    if args.normal_coordinates:
        report['normal_coordinates'] = normal_coordinate_expansion(config.family, config.point,
                                                                   seed=config.seed).to_dict()
    save_data(report, out / 'classification.json')
    emit(args, {'out': str(out), 'case': result.case, 'k0': report['k0'], 'r': result.r,
                'amplitude': result.amplitude, 'residuals': result.residuals})
    return EXIT_OK


def handle_verify(args: argparse.Namespace, config: RunConfig) -> int:
    """Handle the verify command."""
    load_builtin_checks()
    suites = args.suite or list_suites()
    unknown = [s for s in suites if s not in list_suites()]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}, available: {list_suites()}")
    out = output_dir(args, config)
    results = [r for s in suites for r in run_suite(s, config)]
    save_rows_csv([r.to_dict() for r in results], out / 'verify.csv')
    failed = [f"{r.suite}/{r.name}" for r in results if not r.passed]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.suite}/{r.name}  {r.value:.3e} < {r.threshold:.1e}  {r.detail}")
    if failed:
        print(f"{len(failed)} of {len(results)} checks failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def handle_list_suites() -> int:
    """Handle the list-suites command."""
    load_builtin_checks()
    print("Available verification suites:")
    for suite in list_suites():
        print(f"  - {suite}")
        for name in list_checks(suite):
            print(f"      {name}")
    return EXIT_OK


def handle_version() -> int:
    """Handle the version command."""
    print(f"WillmoreLab v{wl.__version__}")
    print(f"Author: {wl.__author__}")
    print(f"License: {wl.__license__}")
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
