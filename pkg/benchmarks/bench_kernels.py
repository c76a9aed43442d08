"""Time the compiled and NumPy kernel backends on the same MWU workload.

    python3 benchmarks/bench_kernels.py [--sizes 5,10,20,40] [--iters 2000]

Both backends must produce bitwise-identical trajectories; the script checks
that before reporting timings.
"""

import argparse
import time

from mwunmf import _backend
from mwunmf.experiments import make_instance
from mwunmf.mwu import MwuConfig, solve


def time_solve(v, r, backend, iters, threads, repeats):
    cfg = MwuConfig(seed=0, max_iters=iters, step_tol=0.0, value_tol=0.0, epsilon_scale=1e3,
                    backend=backend, num_threads=threads)
    best, tr = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        tr = solve(v, r, cfg)
        best = min(best, time.perf_counter() - t0)
    return best, tr


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="5,10,20,40")
    ap.add_argument("--rank", type=int, default=3)
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    names = _backend.available()
    print(f"backends: {', '.join(names)}; {args.iters} iterations, rank {args.rank}")
    print(f"{'n':>4} " + " ".join(f"{name + ' (s)':>13}" for name in names) + f" {'speedup':>8} identical")
    for n in (int(s) for s in args.sizes.split(",")):
        v = make_instance("random-rank-r", n, n, args.rank, 0)
        results = {name: time_solve(v, args.rank, name, args.iters, args.threads, args.repeats) for name in names}
        secs = [results[name][0] for name in names]
        same = len({results[name][1].records.tobytes() for name in names}) == 1
        speedup = secs[-1] / secs[0] if len(names) > 1 else 1.0
        print(f"{n:>4} " + " ".join(f"{s:>13.4f}" for s in secs) + f" {speedup:>7.1f}x {same}")


if __name__ == "__main__":
    main()
