"""Timing of the permutation repair kernels on random type chains.

    python3 -m chaincheck.bench --lengths 4 6 8 --chains 200
"""

import argparse
import random
import time
from typing import Dict, List, Sequence, Tuple

from chaincheck.align import available_kernels


def random_chains(n_chains: int, length: int, seed: int = 0) -> List[Tuple[List[int], List[int]]]:
    rng = random.Random(seed)
    return [
        ([rng.randint(1, 7) for _ in range(length)], [rng.randint(1, 7) for _ in range(length)])
        for _ in range(n_chains)
    ]


def time_kernel(search, chains, repeat: int = 3) -> float:
    """Best-of-``repeat`` wall time in seconds for one pass over ``chains``."""
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for ins, outs in chains:
            search(ins, outs, 0)
        best = min(best, time.perf_counter() - t0)
    return best


def run(lengths: Sequence[int], n_chains: int, seed: int = 0, repeat: int = 3) -> List[Dict[str, object]]:
    kernels = available_kernels()
    rows = []
    for length in lengths:
        chains = random_chains(n_chains, length, seed)
        results = {name: [fn(i, o, 0) for i, o in chains] for name, fn in kernels.items()}
        agree = all(r == results["python"] for r in results.values())
        for name, fn in kernels.items():
            rows.append(
                {"kernel": name, "length": length, "chains": n_chains, "seconds": time_kernel(fn, chains, repeat), "agree": agree}
            )
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="compare repair kernels")
    ap.add_argument("--lengths", type=int, nargs="+", default=[4, 6, 8])
    ap.add_argument("--chains", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rows = run(args.lengths, args.chains, args.seed, args.repeat)
    base = {r["length"]: r["seconds"] for r in rows if r["kernel"] == "python"}
    print(f"{'kernel':<8} {'len':>4} {'chains':>7} {'seconds':>10} {'speedup':>8} agree")
    for r in rows:
        speedup = base[r["length"]] / r["seconds"] if r["seconds"] else float("inf")
        print(f"{r['kernel']:<8} {r['length']:>4} {r['chains']:>7} {r['seconds']:>10.4f} {speedup:>8.1f} {r['agree']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
