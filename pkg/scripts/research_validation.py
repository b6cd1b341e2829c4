#!/usr/bin/env python3
"""
Research validation script for the acex package.

This script checks the simulator against reference values that do not need a full
extrusion run:

- the linear fits of the power-law alloy curves against the published hardening rates;
- the pure-bending springback benchmark against its closed-form residual profile.

With ``--smoke`` it also runs one smoke-preset extrusion and reports its classification.
The hardening-fit and bending figures are written to the ``--plots`` directory.
"""

import argparse
import sys
import os

# Add the parent directory to the path to import the package
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from acex.analysis import plots
from acex.analysis.bending import run_bending_benchmark
from acex.main import run_case
from acex.models.material import fit_alloy_table
from acex.utils.config import config_from_mapping, get_default_config

REFERENCE_HARDENING_MPA = (70.0, 900.0, 1500.0)
HARDENING_TOLERANCE = 0.15
BENDING_TOLERANCE = 0.05


def validate_hardening_fits(plot_dir):
    """Compare the fitted linear hardening rates with the reference values."""
    table = fit_alloy_table()
    plots.plot_hardening_fits(table, os.path.join(plot_dir, 'hardening_fits.svg'))
    results = []
    for (_, row), expected in zip(table.iterrows(), REFERENCE_HARDENING_MPA):
        deviation = abs(row['H_fit_MPa'] - expected) / expected
        results.append(deviation <= HARDENING_TOLERANCE)
        status = "PASS" if deviation <= HARDENING_TOLERANCE else "FAIL"
        print(f"{row['alloy']:30s} H_fit = {row['H_fit_MPa']:8.1f} MPa   reference {expected:7.1f} MPa   "
              f"deviation {deviation:6.1%}   {status}")
    return all(results)


def validate_bending(plot_dir):
    """Run the springback benchmark and compare with the closed form."""
    result = run_bending_benchmark(get_default_config())
    plots.plot_bending(result, os.path.join(plot_dir, 'bending.svg'))
    passed = result.rel_l2 <= BENDING_TOLERANCE
    print(f"Bending benchmark: curvature {result.curvature:.4g} 1/m, relative L2 error {result.rel_l2:.3%}   "
          f"{'PASS' if passed else 'FAIL'}")
    return passed


def validate_smoke_run(out_dir):
    """One smoke-preset extrusion with its residual-stress summary."""
    _, summary = run_case(config_from_mapping({}, preset='smoke'), out_dir)
    print(f"Smoke run: {summary['classification']}, D = {summary['D'] / 1e6:.2f} MPa, "
          f"h = {summary['h'] * 1e3:.2f} mm, h_b/h = {summary['hb_over_h']:.3f}")
    return True


def main():
    """Main validation function."""
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument('--smoke', action='store_true', help='also run a smoke-preset extrusion')
    parser.add_argument('--out', default='validation_smoke', help='run directory of the smoke extrusion')
    parser.add_argument('--plots', default='validation_plots', help='directory of the validation figures')
    args = parser.parse_args()
    os.makedirs(args.plots, exist_ok=True)

    print("acex Research Validation")
    print("=" * 60)
    checks = {'Hardening fits': validate_hardening_fits(args.plots), 'Bending benchmark': validate_bending(args.plots)}
    if args.smoke:
        checks['Smoke run'] = validate_smoke_run(args.out)

    print("\n" + "=" * 60)
    print("RESEARCH VALIDATION RESULTS")
    print("=" * 60)
    for name, passed in checks.items():
        print(f"{name:22s} {'PASS' if passed else 'FAIL'}")
    return 0 if all(checks.values()) else 1


if __name__ == '__main__':
    sys.exit(main())
