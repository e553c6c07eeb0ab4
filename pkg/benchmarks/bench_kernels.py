"""Compiled vs numpy kernels, plus end-to-end composition throughput.

    python3 benchmarks/bench_kernels.py [--frames 20] [--repeat 5]

Each backend is timed in-process through ``kernels.load_backend``; the
composition rows switch backends by re-running this script in a child
process with ``REALAUG_KERNELS`` set, since the choice is made at import.
"""
import argparse
import json
import math
import os
import subprocess
import sys
import time

import numpy as np

from realaug import kernels
from realaug.fixture import generate_frames
from realaug.placeability import ground_fit


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_rows(frames, repeat):
    cloud = np.ascontiguousarray(frames[0].cloud)
    mask = ground_fit(cloud)
    c, s = math.cos(0.4), math.sin(0.4)
    rows = []
    for name in ("python", "cython"):
        try:
            mod = kernels.load_backend(name)
        except ImportError:
            print(f"{name}: not built, skipped")
            continue
        rows.append((name, "points_in_box_mask x100",
                     best_of(lambda: [mod.points_in_box_mask(cloud, 12.0, 3.0, -1.0, 4.5, 1.9, 1.7, c, s)
                                      for _ in range(100)], repeat)))
        rows.append((name, "support_query x100",
                     best_of(lambda: [mod.support_query(cloud, mask, 12.0, 3.0, 2.25, 4.5, 1.9, c, s)
                                      for _ in range(100)], repeat)))
        rows.append((name, "fourier_features 30k pts",
                     best_of(lambda: mod.fourier_features(cloud, 10), repeat)))
    return rows


def compose_fps(n_frames, repeat):
    """Frames per second of compose_frame with precomputed masks (child mode)."""
    from realaug.bank import bank_build
    from realaug.composition import compose_frame

    frames, _ = generate_frames(seed=7, n_frames=n_frames)
    masks = [ground_fit(f.cloud) for f in frames]
    bank = bank_build(frames)
    counts = {"car": 4, "pedestrian": 3, "traffic_cone": 2, "truck": 1}

    def run():
        for i, (f, m) in enumerate(zip(frames, masks)):
            compose_frame(f, bank, counts, m, None, np.random.default_rng(i))

    return n_frames / best_of(run, repeat)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--frames", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        print(json.dumps({"backend": kernels.BACKEND, "fps": compose_fps(args.frames, args.repeat)}))
        return

    frames, _ = generate_frames(seed=7, n_frames=1)
    print(f"cloud: {len(frames[0].cloud)} points; best of {args.repeat}")
    print(f"{'backend':8s} {'kernel':28s} {'ms':>9s}")
    rows = kernel_rows(frames, args.repeat)
    for name, what, t in rows:
        print(f"{name:8s} {what:28s} {1000 * t:9.2f}")
    by = {(n, w): t for n, w, t in rows}
    for what in sorted({w for _, w, _ in rows}):
        if ("python", what) in by and ("cython", what) in by:
            print(f"speedup  {what:28s} {by[('python', what)] / by[('cython', what)]:8.1f}x")

    print(f"\ncompose_frame, {args.frames} frames, 10 requested insertions each")
    for name in ("python", "cython"):
        env = dict(os.environ, REALAUG_KERNELS=name)
        res = subprocess.run([sys.executable, __file__, "--child", "--frames", str(args.frames),
                              "--repeat", str(args.repeat)], env=env, capture_output=True, text=True)
        if res.returncode != 0:
            print(f"{name:8s} failed: {res.stderr.strip().splitlines()[-1:]}")
            continue
        out = json.loads(res.stdout)
        print(f"{out['backend']:8s} {out['fps']:8.1f} frames/s")


if __name__ == "__main__":
    main()
