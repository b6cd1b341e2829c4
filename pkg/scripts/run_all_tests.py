#!/usr/bin/env python3
"""
Comprehensive test runner for the acex package.

Runs the unit tests, a coverage report, the kernel benchmark and the validation
script, then prints one PASS/FAIL line per stage. Full extrusion runs are part of
the unit tests only with ``--slow`` (or ``ACEX_RUN_SLOW=1``).
"""

import argparse
import os
import subprocess
import sys
import unittest

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
SCRIPTS_DIR = os.path.dirname(os.path.abspath(__file__))

# Add the parent directory to the path
sys.path.insert(0, PROJECT_ROOT)


def banner(title):
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def run_unit_tests(module=None):
    """Discover the test suites (or load one module) and run them."""
    banner("RUNNING UNIT TESTS")
    loader = unittest.TestLoader()
    if module:
        suite = loader.loadTestsFromName(f"tests.{module}")
    else:
        suite = loader.discover(os.path.join(PROJECT_ROOT, 'tests'), pattern='test_*.py',
                                top_level_dir=PROJECT_ROOT)
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    print(f"{result.testsRun} tests, {len(result.failures)} failures, {len(result.errors)} errors, "
          f"{len(result.skipped)} skipped")
    return result.wasSuccessful()


def run_command(cmd, label):
    """Runs ``cmd`` from the project root and echoes its output."""
    try:
        result = subprocess.run(cmd, cwd=PROJECT_ROOT, capture_output=True, text=True)
    except FileNotFoundError:
        print(f"{label}: '{cmd[0]}' not found")
        return False
    print(result.stdout)
    if result.returncode != 0:
        print(f"{label} failed (exit {result.returncode}):\n{result.stderr}")
    return result.returncode == 0


def run_coverage_analysis():
    """Collect coverage of the acex package over the test suites."""
    banner("RUNNING COVERAGE ANALYSIS")
    collected = run_command(['coverage', 'run', '--source=acex', '-m', 'unittest', 'discover',
                             '-s', 'tests', '-p', 'test_*.py'], 'Coverage run')
    if not collected:
        print("Install the coverage tool with: pip install coverage")
        return False
    return run_command(['coverage', 'report', '-m'], 'Coverage report')


def run_script(name, *args):
    banner(f"RUNNING {name.replace('_', ' ').replace('.py', '').upper()}")
    return run_command([sys.executable, os.path.join(SCRIPTS_DIR, name), *args], name)


def main(argv=None):
    """Main test execution function."""
    parser = argparse.ArgumentParser(description="Run the acex test stages.")
    parser.add_argument('--slow', action='store_true', help='include the full extrusion simulations')
    parser.add_argument('--module', help="run a single test module, e.g. 'test_material'")
    parser.add_argument('--no-coverage', action='store_true')
    parser.add_argument('--no-benchmark', action='store_true')
    parser.add_argument('--smoke', action='store_true', help='pass --smoke to the validation script')
    args = parser.parse_args(argv)

    if args.slow:
        os.environ['ACEX_RUN_SLOW'] = '1'

    print("acex - Comprehensive Test Suite")
    stages = {'Unit Tests': run_unit_tests(args.module)}
    if not args.no_coverage:
        stages['Coverage Analysis'] = run_coverage_analysis()
    if not args.no_benchmark:
        stages['Performance Benchmark'] = run_script('performance_benchmark.py')
    stages['Research Validation'] = run_script('research_validation.py', *(['--smoke'] if args.smoke else []))

    banner("TEST EXECUTION SUMMARY")
    for name, passed in stages.items():
        print(f"{name + ':':24s}{'PASS' if passed else 'FAIL'}")
    all_passed = all(stages.values())
    print("=" * 60)
    print(f"{'OVERALL RESULT:':24s}{'PASS' if all_passed else 'FAIL'}")
    print("=" * 60)
    return 0 if all_passed else 1


if __name__ == '__main__':
    sys.exit(main())
