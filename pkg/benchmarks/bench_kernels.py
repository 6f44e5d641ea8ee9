"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Whole-run timings start a fresh interpreter per backend, because the backend
is fixed at import time by PROJGATE_PURE_PYTHON.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from projgate import _kernels

WHOLE_RUN = """
import time
from projgate import ObservationSet, RTConfig, ScenarioSpec, RngStream, generate, select_subsample
data = generate(ScenarioSpec("functional", 100, eps=0.1, case="B"), RngStream(1, "data"))
cfg = RTConfig(threshold_mode="null_quantile", null_reps=10000, seed=1, calibration_seed=2)
t = time.perf_counter()
select_subsample(data, cfg)
print(time.perf_counter() - t)
"""


def kernel_cases(rng):
    y = rng.normal(size=100)
    z = np.ascontiguousarray(rng.standard_normal((2000, 100)))
    x = np.ascontiguousarray(rng.normal(size=(200, 50)))
    return {
        "scan_projection (m=100)": lambda k: k.scan_projection(y),
        "studentized_max_gaps (2000 x 100)": lambda k: k.studentized_max_gaps(z),
        "alpha_radii (n=200, d=50)": lambda k: k.alpha_radii(x, 100),
    }


def whole_run(pure):
    env = dict(os.environ)
    env.pop("PROJGATE_PURE_PYTHON", None)
    if pure:
        env["PROJGATE_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", WHOLE_RUN], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = {name: _kernels.get_backend(name) for name in ("cython", "python") if name in _kernels.BACKENDS}
    if "cython" not in backends:
        print("compiled kernels not built; only the fallback is timed")
    print(f"{'kernel':36s}" + "".join(f"{b:>14s}" for b in backends) + "   speedup")
    for label, fn in kernel_cases(np.random.default_rng(0)).items():
        times = {}
        for name, mod in backends.items():
            timer = timeit.Timer(lambda: fn(mod))
            number, _ = timer.autorange()
            times[name] = min(timer.repeat(args.repeat, number)) / number
        speed = f"{times['python'] / times['cython']:8.1f}x" if "cython" in times else ""
        print(f"{label:36s}" + "".join(f"{t * 1e6:12.1f}us" for t in times.values()) + f"  {speed}")

    runs = {name: min(whole_run(name == "python") for _ in range(args.repeat)) for name in backends}
    speed = f"{runs['python'] / runs['cython']:8.1f}x" if "cython" in runs else ""
    print(f"{'select_subsample, calibrated':36s}" + "".join(f"{t * 1e3:12.1f}ms" for t in runs.values()) + f"  {speed}")


if __name__ == "__main__":
    main()
