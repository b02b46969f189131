"""Exhaustive comparison of the type checker with derivation search.

    python3 scripts/checker_vs_oracle.py 7
"""

import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))
sys.setrecursionlimit(20000)

from harness import checker_vs_oracle  # noqa: E402


def main():
    size = int(sys.argv[1]) if len(sys.argv) > 1 else 6
    t0 = time.perf_counter()

    def progress(n, s):
        print("size %d  %6.1fs  terms %d  pairs %d  derivable %d  certified %d  disagreements %d"
              % (n, time.perf_counter() - t0, s.terms, s.pairs, s.derivable, s.certified,
                 len(s.disagreements)), flush=True)

    stats = checker_vs_oracle(size, progress=progress)
    for d in stats.disagreements[:20]:
        print("disagree: %s at %s  checker %s  search %s" % d)
    sys.exit(1 if stats.disagreements else 0)


if __name__ == "__main__":
    main()
