"""Time the compiled and pure-NumPy kernel backends on identical inputs.

Usage: python3 benchmarks/bench_kernels.py [--n 32768] [--repeat 20]
"""
import argparse
import json
import timeit

import numpy as np

from fdsp.kernels import compiled_available, get_backend


def cases(n, rng):
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    om = rng.normal(size=n)
    mask = (rng.uniform(size=n) > 0.5).astype(float)
    u = rng.normal(size=n)
    m_side = 129
    m = rng.normal(size=(m_side, m_side)) + 0j
    f, g, h = (rng.normal(size=m_side) + 1j * rng.normal(size=m_side) for _ in range(3))
    return {
        "rotate": lambda k: k.rotate(c, om, 1.7, mask),
        "cube_real": lambda k: k.cube_real(u),
        "cube_abs": lambda k: k.cube_abs(c),
        "log_trapezoid_update": lambda k: k.log_trapezoid_update(
            np.zeros(n), np.abs(c) ** 2, c, 1e-3),
        "trilinear_sum(129)": lambda k: k.trilinear_sum(m, f, g, h),
    }


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=32768)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    names = ["python"] + (["compiled"] if compiled_available() else [])
    rng = np.random.default_rng(0)
    out = {}
    for label, fn in cases(args.n, rng).items():
        row = {}
        for b in names:
            k = get_backend(b)
            row[b] = min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat))
        if "compiled" in row:
            row["speedup"] = row["python"] / row["compiled"]
        out[label] = row
        print(f"{label:24s} " + "  ".join(f"{b}={row[b] * 1e6:9.1f}us" for b in names)
              + (f"  speedup={row['speedup']:.2f}x" if "speedup" in row else ""))
    return out


if __name__ == "__main__":
    print(json.dumps(main(), indent=1))
