"""Benchmark the numba-jitted kernels against the pure-numpy fallback.

Runs the per-kernel microbenchmarks plus a slice of real GAN training under
the current backend, or times both backends via subprocesses:

    python3 benchmarks/bench_backends.py            # compare both backends
    python3 benchmarks/bench_backends.py --single   # current backend only

The backend is chosen at import time by CHANNELGAN_NUMBA, so the two-way
comparison re-invokes this script with the flag set either way.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def bench_kernels(repeats: int = 2000) -> dict:
    from channelgan import _accel

    rng = np.random.default_rng(0)
    x = rng.normal(0, 1, (256, 20))
    w = rng.normal(0, 1, (20, 80))
    b = rng.normal(0, 1, 80)
    g = rng.normal(0, 1, (256, 80))
    pre = rng.normal(0, 1, (256, 32))
    eps = rng.standard_normal((256, 16))
    p = rng.normal(0, 1, 6480)
    grad = rng.normal(0, 1, 6480)
    m, v = np.zeros(6480), np.zeros(6480)

    cases = {
        "affine_forward": lambda: _accel.affine_forward(x, w, b),
        "affine_backward": lambda: _accel.affine_backward(x, w, g),
        "relu_forward": lambda: _accel.relu_forward(g),
        "sigmoid_forward": lambda: _accel.sigmoid_forward(g),
        "sampler_forward": lambda: _accel.sampler_forward_kernel(pre, eps),
        "adam_update": lambda: _accel.adam_update(p, grad, m, v, 3, 1e-4, 0.9, 0.999, 1e-8),
    }
    out = {}
    for name, fn in cases.items():
        fn()  # warm-up / compile
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        out[name] = (time.perf_counter() - t0) / repeats * 1e6  # us/call
    return out


def bench_training(iterations: int = 300) -> float:
    import channelgan as cg

    src = cg.bpsk_source()
    chan = cg.AwgnChannel(1.0)
    cg.train(chan, src, cg.TrainConfig(objective="gan", iterations=5,
                                       batch_size=256, seed=0, n_critic=3))  # warm-up
    cfg = cg.TrainConfig(objective="gan", iterations=iterations,
                         batch_size=256, seed=0, n_critic=3)
    t0 = time.perf_counter()
    cg.train(chan, src, cfg)
    return (time.perf_counter() - t0) / iterations * 1e3  # ms/iteration


def run_single() -> None:
    from channelgan import _accel

    backend = "numba" if _accel.NUMBA_ENABLED else "numpy"
    print(f"backend: {backend}")
    for name, us in bench_kernels().items():
        print(f"  {name:20s} {us:9.2f} us/call")
    ms = bench_training()
    print(f"  {'gan_train_iter':20s} {ms * 1000:9.2f} us/iter  ({ms:.2f} ms)")


def run_both() -> None:
    script = os.path.abspath(__file__)
    for flag, label in (("1", "numba"), ("0", "numpy")):
        env = dict(os.environ, CHANNELGAN_NUMBA=flag)
        print(f"--- {label} ---")
        subprocess.run([sys.executable, script, "--single"], env=env, check=True)


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--single", action="store_true",
                        help="benchmark only the backend selected by CHANNELGAN_NUMBA")
    args = parser.parse_args()
    if args.single:
        run_single()
    else:
        run_both()
