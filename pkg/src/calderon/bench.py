"""Benchmark the numba kernel lane against the batched-numpy fallback.

Synthetic stacks mimic the per-mode companion matrices (small, complex,
spectrum off the imaginary axis); one end-to-end point assembly is also
timed for each lane.
"""

import time

import numpy as np

from . import _kernels
from .grassmann import assemble_point
from .symbols import build_gallery


def _synthetic_stack(n_modes, dim, seed=0):
    rng = np.random.default_rng(seed)
    mats = rng.normal(size=(n_modes, dim, dim)) + 1j * rng.normal(size=(n_modes, dim, dim))
    shift = 2.5 * rng.choice([-1.0, 1.0], size=(n_modes, 1, 1))
    return mats + shift * np.eye(dim)


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_bench(n_modes=4096, dim=4, repeat=3, echo=print):
    """Time every kernel in both lanes; returns rows of timing data."""
    lanes = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    for lane in lanes:
        _kernels.warmup(lane)

    stack = _synthetic_stack(n_modes, dim)
    eigs = _kernels.eigvals_sweep(stack, backend="numpy")
    dims = (eigs.real < 0).sum(axis=1).astype(np.int64)
    proj = _kernels.stable_projector_sweep(stack, backend="numpy")

    cases = [
        ("eigvals_sweep", lambda lane: _kernels.eigvals_sweep(stack, backend=lane)),
        ("stable_projector_sweep", lambda lane: _kernels.stable_projector_sweep(stack, backend=lane)),
        ("svdvals_sweep", lambda lane: _kernels.svdvals_sweep(stack, backend=lane)),
        ("orthonormal_range_sweep", lambda lane: _kernels.orthonormal_range_sweep(proj, dims, backend=lane)),
        ("assemble dirac3 cutoff 48", lambda lane: assemble_point(build_gallery("dirac3", mu=1, v=0.3), 48, backend=lane)),
    ]

    rows = []
    if echo:
        echo(f"kernel bench: {n_modes} modes, dim {dim}, best of {repeat}")
        echo(f"{'kernel':28s} " + " ".join(f"{lane:>12s}" for lane in lanes) + "  speedup")
    for name, fn in cases:
        times = {lane: _time(lambda lane=lane: fn(lane), repeat) for lane in lanes}
        ratio = times["numpy"] / times["numba"] if "numba" in times else float("nan")
        rows.append({"kernel": name, "times": times, "numba_speedup": ratio})
        if echo:
            cells = " ".join(f"{times[lane] * 1e3:10.2f}ms" for lane in lanes)
            echo(f"{name:28s} {cells}  {ratio:6.2f}x")
    return rows
