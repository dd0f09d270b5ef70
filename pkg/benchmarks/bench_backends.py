"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_backends.py [--sizes 50 200 500] [--repeat 5]

Each kernel runs on a random cover of a generated benchmark graph; the
first numba call (compilation) is excluded. A full search on the bundled
karate club graph is timed under both backends as well.
"""
import argparse
import time

import numpy as np

from coalition import kernels
from coalition.bench_gen import GeneratorConfig, generate
from coalition.graph import karate_club
from coalition.lse import LseConfig, _State, run_lse
from coalition.stability import CommunityStructure
from coalition.weights import compute_weights


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def _state(n, n_c, seed):
    g, _ = generate(GeneratorConfig(N=n, n_c=n_c, p=2, N_o=n // 10, mu=0.2, seed=seed))
    W = np.array(compute_weights(g, "exact").values)
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, n_c, size=n)
    comms = [set(np.flatnonzero(labels == k).tolist()) for k in range(n_c)]
    for v in rng.choice(n, size=n // 10, replace=False).tolist():
        comms[(labels[v] + 1) % n_c].add(v)
    pi = CommunityStructure([c for c in comms if c], n, n_c, 2)
    return _State(W, list(pi.communities), 2, 1e-9)


def kernel_calls(st):
    ks = np.repeat(np.arange(st.K), 4)
    outs = np.full(ks.size, -1)
    ins = np.arange(ks.size) % st.n
    return {
        "single": lambda: kernels.single_move_deltas(st.W, st.cnt, st.M),
        "swap": lambda: kernels.swap_move_deltas(st.W, st.cnt, st.M),
        "relocate": lambda: kernels.relocate_move_deltas(st.W, st.cnt, st.M),
        "deficit": lambda: kernels.deficit_after(st.W, st.T, st.half, st.M,
                                                 ks, outs, ins, st.tol),
    }


def main():
    ap = argparse.ArgumentParser(description="numba vs numpy kernel timings")
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 200, 500])
    ap.add_argument("--nc", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if kernels.HAS_NUMBA else [])
    print(f"{'n':>5} {'kernel':>9} " + " ".join(f"{b:>10}" for b in backends) + "   speedup")
    for n in args.sizes:
        st = _state(n, args.nc, seed=n)
        for name in ("single", "swap", "relocate", "deficit"):
            times = []
            for b in backends:
                kernels.use_backend(b)
                call = kernel_calls(st)[name]
                call()  # warm-up, triggers compilation
                times.append(_best_of(call, args.repeat))
            speed = f"{times[0] / times[-1]:8.1f}x" if len(times) > 1 else ""
            print(f"{n:>5} {name:>9} " + " ".join(f"{t * 1e3:8.2f}ms" for t in times)
                  + f"   {speed}")

    g = karate_club()
    w = compute_weights(g, "exact")
    for b in backends:
        kernels.use_backend(b)
        run_lse(w, g, 3, 2, LseConfig(t_max=1))
        t = time.perf_counter()
        _, value, _ = run_lse(w, g, 3, 2, LseConfig(t_max=10))
        print(f"karate search, {b:>5}: {time.perf_counter() - t:6.2f}s  objective {value:.3f}")


if __name__ == "__main__":
    main()
