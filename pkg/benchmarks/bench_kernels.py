"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 200] [--batch 256]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from icae.kernels import ELU, RELU, SOFTMAX, numba_kernels, numpy_kernels


def cases(batch, rng):
    m, n2 = 16, 8
    x = rng.normal(size=(batch, m))
    w = rng.normal(size=(m, m))
    b = rng.normal(size=m)
    w_out = rng.normal(size=(n2, m))
    u = rng.normal(size=(batch, n2))
    probs = np.full((batch, m), 1.0 / m)
    targets = rng.integers(0, m, size=batch)
    gz = rng.normal(size=(batch, m))
    p = rng.normal(size=(m, m))
    return {
        "dense_forward elu": lambda k: k.dense_forward(x, w, b, ELU),
        "dense_forward relu": lambda k: k.dense_forward(u, w_out.T.copy(), b, RELU),
        "dense_forward softmax": lambda k: k.dense_forward(x, w, b, SOFTMAX),
        "dense_backward": lambda k: k.dense_backward(x, w, gz),
        "power_normalize": lambda k: k.power_normalize(u, 4),
        "softmax_xent_grad": lambda k: k.softmax_xent_grad(probs, targets),
        "adam_update": lambda k: k.adam_update(p, gz[:m], np.zeros_like(p), np.zeros_like(p),
                                               1e-3, 0.9, 0.999, 1e-8, 1),
        "argmax_rows": lambda k: k.argmax_rows(probs),
    }


TRAIN_SNIPPET = """
import time
from icae import BACKEND
from icae.autoencoder import AeConfig, train_end_to_end
from icae.rng import stream
train_end_to_end(AeConfig(steps=50), rng=stream(0, "warm"))
t = time.perf_counter()
train_end_to_end(AeConfig(steps={steps}, train_alpha=0.5), rng=stream(0, "bench"))
print(BACKEND, (time.perf_counter() - t) / {steps} * 1e3)
"""


def train_step_ms(backend, steps):
    env = dict(os.environ, ICAE_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", TRAIN_SNIPPET.format(steps=steps)],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.split()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--batch", type=int, default=256)
    ap.add_argument("--train-steps", type=int, default=2000,
                    help="end-to-end training steps timed per backend (0 skips)")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    table = cases(args.batch, rng)
    backends = {"numpy": numpy_kernels}
    if numba_kernels is not None:
        backends["numba"] = numba_kernels
        for fn in table.values():
            fn(numba_kernels)  # compile
    print(f"{'kernel':24s}" + "".join(f"{name:>12s}" for name in backends) + "   (us/call)")
    for label, fn in table.items():
        row = []
        for kernels in backends.values():
            t = min(timeit.repeat(lambda: fn(kernels), number=args.repeat, repeat=3)) / args.repeat
            row.append(f"{t * 1e6:12.1f}")
        print(f"{label:24s}" + "".join(row))
    if args.train_steps:
        print()
        for name in backends:
            got, ms = train_step_ms(name, args.train_steps)
            print(f"train step ({got}): {float(ms):.3f} ms")


if __name__ == "__main__":
    main()
