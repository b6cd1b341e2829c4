#!/usr/bin/env python3
"""
Performance benchmarking script for the acex package.

This script measures the cost of the kernels that dominate an extrusion run: the
batched stress update, the global assembly and the sparse factorization of one Newton
iteration on the full-size billet mesh.
"""

import time
import sys
import os
from statistics import mean, median

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

# Add the parent directory to the path to import the package
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from acex.geometry.mesh import BilletSpec, generate_mesh
from acex.models.assembly import IncrementState, assemble
from acex.models.element import ElementFormulation
from acex.models.material import MaterialParams, MaterialPointState, radial_return


def time_call(func, num_runs):
    """Wall-clock timings of ``num_runs`` calls in milliseconds."""
    timings = []
    for _ in range(num_runs):
        start_time = time.perf_counter()
        func()
        timings.append((time.perf_counter() - start_time) * 1000)
    return timings


def report(name, timings):
    """Print and return the statistics of one benchmark."""
    stats = {
        'average': mean(timings),
        'median': median(timings),
        'p95': float(np.percentile(timings, 95)),
        'min': min(timings),
        'max': max(timings),
    }
    print(f"{name:28s} avg {stats['average']:9.2f} ms   median {stats['median']:9.2f} ms   "
          f"p95 {stats['p95']:9.2f} ms")
    return stats


def benchmark_radial_return(params, num_points=200000, num_runs=10):
    """Batched return mapping on a plastic strain increment."""
    rng = np.random.default_rng(42)
    d_eps = rng.normal(scale=2e-3, size=(num_points, 4))
    d_eps[:, 2] = 0.0
    state = MaterialPointState.zeros(num_points)
    return report(f"radial_return ({num_points})", time_call(lambda: radial_return(state, d_eps, params), num_runs))


def benchmark_assembly(mesh, params, formulation, num_runs=5):
    """Global residual and tangent assembly for a small uniform stretch."""
    state = IncrementState.initial(mesh, formulation)
    trial = mesh.node_coords @ np.array([[1e-3, 0.0], [0.0, -5e-4]]).T
    return report(f"assemble ({mesh.n_elements} el.)",
                  time_call(lambda: assemble(mesh, state, trial, params, formulation), num_runs))


def benchmark_factorization(mesh, params, formulation, num_runs=3):
    """Sparse LU of the reduced tangent with the head row fixed."""
    system = assemble(mesh, IncrementState.initial(mesh, formulation), np.zeros((mesh.n_nodes, 2)),
                      params, formulation)
    fixed = np.concatenate([2 * mesh.row(0), 2 * mesh.row(0) + 1])
    free = np.setdiff1d(np.arange(mesh.n_dofs), fixed)
    reduced = sp.csc_matrix(system.tangent[free][:, free])
    return report(f"splu ({len(free)} dofs)", time_call(lambda: splu(reduced), num_runs))


def main():
    """Main benchmarking function."""
    print("acex Performance Benchmark")
    print("=" * 50)
    params = MaterialParams(E=200.0e9, nu=0.3, sigma_y0=400.0e6, H=5.0e6)
    mesh = generate_mesh(BilletSpec(width=0.025 - 2e-6, length=0.55, target_element_size=0.758e-3))
    print(f"Billet mesh: {mesh.nx} x {mesh.ny} elements, {mesh.n_dofs} dofs")

    results = {'radial_return': benchmark_radial_return(params)}
    for name in ('SelectiveReducedBbar', 'SinglePointHourglass'):
        formulation = ElementFormulation(name)
        results[f'assemble_{name}'] = benchmark_assembly(mesh, params, formulation)
    results['splu'] = benchmark_factorization(mesh, params, ElementFormulation('SelectiveReducedBbar'))
    print("=" * 50)
    return results


if __name__ == '__main__':
    main()
