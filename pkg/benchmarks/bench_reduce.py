"""Compiled vs pure-Python reduction: timing and bitwise agreement.

    python benchmarks/bench_reduce.py [--sizes 1000 100000 1000000] [--repeat 20]

The end-to-end section runs one CLI verification under each backend (the
fallback is forced with HREILLY_PURE_PYTHON=1) and compares the JSON bytes.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import tempfile
import timeit
from pathlib import Path

import numpy as np

from hreilly import reduce as R

CONFIG = """\
n: 1
identities: [reilly, c3f-derived]
surface: sphere(0,1)
domain: ball_radial(0,1)
testFunction: exp_cos
quadrature: {baseOrder: 24, levels: 2}
"""


def kernel_table(sizes, repeat):
    if R.BACKEND != "compiled":
        print("compiled kernel not available; only the fallback is timed")
    rng = np.random.default_rng(0)
    print(f"{'size':>10} {'compiled us':>12} {'python us':>12} {'speedup':>8} {'bitwise':>8}")
    for n in sizes:
        w, f = rng.standard_normal(n), rng.standard_normal(n)
        py = min(timeit.repeat(lambda: R._py_weighted_sum(w, f), number=1, repeat=repeat))
        if R.BACKEND == "compiled":
            cc = min(timeit.repeat(lambda: R.weighted_sum(w, f), number=1, repeat=repeat))
            same = R.weighted_sum(w, f) == R._py_weighted_sum(w, f)
            print(f"{n:>10} {cc * 1e6:>12.1f} {py * 1e6:>12.1f} {py / cc:>8.2f} {str(same):>8}")
        else:
            print(f"{n:>10} {'-':>12} {py * 1e6:>12.1f} {'-':>8} {'-':>8}")


def end_to_end():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp, "run.yaml")
        cfg.write_text(CONFIG)
        outputs = {}
        for label, pure in (("compiled", False), ("python", True)):
            env = dict(os.environ)
            env.pop("HREILLY_PURE_PYTHON", None)
            if pure:
                env["HREILLY_PURE_PYTHON"] = "1"
            out = Path(tmp, f"{label}.json")
            cmd = [sys.executable, "-m", "hreilly.cli", "verify", "--config", str(cfg),
                   "--out", str(out)]
            t = min(timeit.repeat(lambda: subprocess.run(cmd, env=env, check=False),
                                  number=1, repeat=3))
            outputs[label] = out.read_bytes()
            print(f"end-to-end {label:>8}: {t:.2f}s")
        print("reports byte-identical:", outputs["compiled"] == outputs["python"])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 100_000, 1_000_000])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args()
    print("backend:", R.BACKEND)
    kernel_table(args.sizes, args.repeat)
    if not args.skip_e2e:
        end_to_end()


if __name__ == "__main__":
    main()
