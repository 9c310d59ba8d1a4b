"""Timing comparison of the compiled and NumPy kernel backends.

Measures the three dense kernels on training-shaped operands, then times a
full default-sized training run under each backend.

Usage: python benchmarks/bench_backends.py
"""

import time

import numpy as np

from pacedistill import backend
from pacedistill.curriculum import Ablation, TrainConfig, train
from pacedistill.data import SplitSpec, generate_synthetic, split, standardize
from pacedistill.schedule import LearningRateSchedule, PaceSchedule

# (batch, fan_in, fan_out): mini-batch layers plus the full-set curriculum pass
KERNEL_SHAPES = [(64, 20, 32), (64, 32, 32), (64, 32, 2), (1400, 20, 32), (1400, 32, 32)]


def best_of(fn, repeats=7, inner=20):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_kernels():
    rng = np.random.default_rng(0)
    names = backend.available()
    print(f"{'kernel':<14}{'shape':<18}" + "".join(f"{n:>12}" for n in names) + f"{'ratio':>9}")
    for n, k, m in KERNEL_SHAPES:
        x = rng.standard_normal((n, k))
        w = rng.standard_normal((k, m))
        b = rng.standard_normal(m)
        delta = rng.standard_normal((n, m))
        for label, call in (
            ("affine", lambda mod: mod.affine(x, w, b)),
            ("matmul_at_b", lambda mod: mod.matmul_at_b(x, delta)),
            ("matmul_a_bt", lambda mod: mod.matmul_a_bt(delta, w)),
        ):
            times = {name: best_of(lambda mod=backend.get(name): call(mod)) for name in names}
            if "compiled" in times:
                ratio = f"{times['python'] / times['compiled']:>8.2f}x"
            else:
                ratio = f"{'n/a':>9}"
            row = "".join(f"{times[name] * 1e6:>10.1f}us" for name in names)
            print(f"{label:<14}{f'{n}x{k}x{m}':<18}{row}{ratio}")


def bench_training():
    ds = generate_synthetic(2000, 20, 2, 2.0, 0.2, seed=2024)
    train_ds, _, _ = standardize(*split(ds, SplitSpec(0.7, 0.15, 0.15, seed=0)))
    cfg = TrainConfig(
        epochs=60, batch_size=64, gamma=6.0, seed=0, ablation=Ablation.FULL,
        pcl_schedule=PaceSchedule(1.6, 0.006),
        lr_schedule=LearningRateSchedule(5e-6, 5e-4, 10),
    )
    print(f"\nfull training run ({cfg.epochs} epochs, n={train_ds.n}):")
    original = backend.active_name()
    try:
        for name in backend.available():
            backend.use(name)
            t0 = time.perf_counter()
            train(cfg, train_ds)
            print(f"  {name:<10}{time.perf_counter() - t0:>8.2f}s")
    finally:
        backend.use(original)


if __name__ == "__main__":
    print(f"available backends: {backend.available()} (active: {backend.active_name()})\n")
    bench_kernels()
    bench_training()
