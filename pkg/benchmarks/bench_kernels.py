"""Compare the numba and pure-numpy kernel paths.

Times three workloads on each backend and checks that both produce the
same result:

* ``wedge``: product of two dense random forms on ``R^K``;
* ``exp``: top-grade exponential of a mixed 2-/4-form;
* ``partition``: grand canonical partition function of a two-species gas.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--K 14]
"""

import argparse
import time

import numpy as np

from loggas import _accel
from loggas.ensemble import EnsembleSpec, build_omegas, partition_grand
from loggas.exterior import Form, berezin_full, exp_form, increasing_maps, wedge


def random_form(rng, K, grade, density):
    maps = list(increasing_maps(grade, K))
    keep = rng.random(len(maps)) < density
    return Form.from_generators(K, {t: float(rng.normal()) for t, k in zip(maps, keep) if k})


def workloads(K, seed=0):
    rng = np.random.default_rng(seed)
    a = random_form(rng, K, 3, 0.6)
    b = random_form(rng, K, 4, 0.6)
    w = random_form(rng, K, 2, 0.8) + random_form(rng, K, 4, 0.05)
    spec = EnsembleSpec(1, (2, 4), 12)
    omegas = build_omegas(spec)
    return {
        "wedge": lambda: wedge(a, b),
        "exp": lambda: berezin_full(exp_form(w, top_only=True)),
        "partition": lambda: partition_grand(spec, omegas, method="sliced"),
    }


def as_comparable(result):
    if isinstance(result, Form):
        return result
    if hasattr(result, "terms"):
        return dict(result.terms)
    return float(result)


def agree(x, y):
    if isinstance(x, Form):
        return x.allclose(y, rtol=1e-12)
    if isinstance(x, dict):
        return x.keys() == y.keys() and all(np.isclose(x[k], y[k], rtol=1e-12) for k in x)
    return np.isclose(x, y, rtol=1e-12)


def time_call(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--K", type=int, default=14)
    args = parser.parse_args(argv)

    backends = ["numpy"] + (["numba"] if _accel.HAS_NUMBA else [])
    if "numba" in backends:
        prev = _accel.set_backend("numba")
        _accel.warmup()  # compile outside the timed region
        _accel.set_backend(prev)
    jobs = workloads(args.K)
    print(f"{'workload':<10} " + " ".join(f"{b:>12}" for b in backends) + "   speedup  agree")
    ok = True
    for name, fn in jobs.items():
        times, results = {}, {}
        for backend in backends:
            prev = _accel.set_backend(backend)
            try:
                fn()  # warm caches
                times[backend], res = time_call(fn, args.repeat)
                results[backend] = as_comparable(res)
            finally:
                _accel.set_backend(prev)
        same = all(agree(results["numpy"], results[b]) for b in backends)
        ok &= bool(same)
        speed = times["numpy"] / times["numba"] if "numba" in times else float("nan")
        cols = " ".join(f"{times[b] * 1e3:10.2f}ms" for b in backends)
        print(f"{name:<10} {cols}   {speed:7.2f}x  {'yes' if same else 'NO'}")
    if not _accel.HAS_NUMBA:
        print("numba not importable: only the numpy path was timed")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
