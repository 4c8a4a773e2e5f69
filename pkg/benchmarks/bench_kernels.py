#!/usr/bin/env python3
"""Benchmark the hot kernels and the full fit on both acceleration paths.

Run without arguments to get a numba-vs-numpy comparison table; the script
re-invokes itself with COAXLINE_DISABLE_NUMBA=1 for the fallback column.
Use ``--inner`` to time only the current mode.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def time_call(fn, repeats, *args, **kwargs):
    fn(*args, **kwargs)  # warm (JIT compile on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args, **kwargs)
    return (time.perf_counter() - t0) / repeats


def run_inner():
    from coaxline import kernels
    from coaxline._accel import NUMBA_ENABLED
    from coaxline.resonance import HangerModelParams, fit_hanger, synthesize_trace

    params = HangerModelParams(
        f0=7.7e9, qi=5.98e6, qc_mag=4.27e6, phi=0.1, amp=0.9, theta0=0.3, tau=40e-9
    )
    span = 5 * params.f0 / params.ql
    freqs = np.linspace(params.f0 - span / 2, params.f0 + span / 2, 401)
    trace = synthesize_trace(params, 401, span, snr_db=60, seed=0)
    z = trace.s21
    p7 = np.array([1.0, np.log(params.ql), np.log(4.27e6), 0.1, np.log(0.9), 0.3, 0.0])
    p3 = np.array([0.3, np.log(params.ql), 1.0])

    results = {
        "mode": "numba" if NUMBA_ENABLED else "numpy",
        "hanger_s21_us": 1e6 * time_call(
            kernels.hanger_s21, 2000, freqs, params.f0, params.ql, 4.27e6, 0.1,
            0.9, 0.3, 40e-9,
        ),
        "hanger_residual_jac_us": 1e6 * time_call(
            kernels.hanger_residual_jac, 2000, freqs, z.real, z.imag, p7, 7.7e9, span
        ),
        "phase_residual_jac_us": 1e6 * time_call(
            kernels.phase_residual_jac, 2000, freqs, np.unwrap(np.angle(z)), p3, 7.7e9
        ),
        "fit_hanger_ms": 1e3 * time_call(fit_hanger, 50, trace),
    }
    print(json.dumps(results))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--inner", action="store_true", help="time the current mode only")
    args = parser.parse_args()
    if args.inner:
        run_inner()
        return

    rows = {}
    for mode, extra_env in (("numba", {"COAXLINE_DISABLE_NUMBA": "0"}),
                            ("numpy", {"COAXLINE_DISABLE_NUMBA": "1"})):
        env = dict(os.environ, **extra_env)
        out = subprocess.run(
            [sys.executable, __file__, "--inner"],
            env=env, capture_output=True, text=True, check=True,
        )
        rows[mode] = json.loads(out.stdout.strip().splitlines()[-1])

    keys = [k for k in rows["numba"] if k != "mode"]
    width = max(len(k) for k in keys)
    print(f"{'benchmark'.ljust(width)}  {'numba':>12}  {'numpy':>12}  {'speedup':>8}")
    for key in keys:
        a, b = rows["numba"][key], rows["numpy"][key]
        print(f"{key.ljust(width)}  {a:12.2f}  {b:12.2f}  {b / a:7.2f}x")


if __name__ == "__main__":
    main()
