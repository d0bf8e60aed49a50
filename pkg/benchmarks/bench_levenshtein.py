"""Compare the compiled and pure-Python edit-distance kernels.

    python3 benchmarks/bench_levenshtein.py [--pairs N] [--repeat R]

Inputs are description-length strings drawn from the synthetic corpus, the
workload candidate-pair featurization actually sees.
"""

import argparse
import random
import timeit

from rvdtools import _pykernels
from rvdtools.synthetic import planted_corpus

try:
    from rvdtools import _speedups
except ImportError:
    _speedups = None


def workload(n_pairs: int, seed: int = 0) -> list[tuple[str, str]]:
    records, _ = planted_corpus(200, 20, seed=7)
    texts = [r["description"] for r in records] + [r["title"] for r in records]
    rng = random.Random(seed)
    return [(rng.choice(texts), rng.choice(texts)) for _ in range(n_pairs)]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    pairs = workload(args.pairs)
    chars = sum(len(a) * len(b) for a, b in pairs)

    backends = {"python": _pykernels.levenshtein}
    if _speedups is not None:
        backends["cython"] = _speedups.levenshtein
        assert all(_speedups.levenshtein(a, b) == _pykernels.levenshtein(a, b) for a, b in pairs)
    else:
        print("compiled extension not built; reporting the Python backend only")

    results = {}
    for name, fn in backends.items():
        best = min(timeit.repeat(lambda: [fn(a, b) for a, b in pairs],
                                 number=1, repeat=args.repeat))
        results[name] = best
        print(f"{name:>7}: {best * 1e3:9.1f} ms for {len(pairs)} pairs "
              f"({chars / best / 1e6:8.1f} M cells/s)")
    if len(results) == 2:
        print(f"speedup: {results['python'] / results['cython']:.0f}x")


if __name__ == "__main__":
    main()
