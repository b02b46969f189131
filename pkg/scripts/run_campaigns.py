"""Run every property campaign and print one report each.

    python3 scripts/run_campaigns.py --cases 2000 --seed 5
"""

import argparse
import time

from fmc.propkit import PROPERTIES, GenConfig, run_campaign


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=1000)
    p.add_argument("--size", type=int, default=30)
    p.add_argument("--only", nargs="*", default=None)
    args = p.parse_args()
    names = args.only or sorted(set(PROPERTIES) - {"sn"})
    cfg = GenConfig(seed=args.seed, max_size=args.size)
    for name in names:
        t0 = time.perf_counter()
        rep = run_campaign(name, cfg, args.cases)
        print(rep.text())
        print("time %.1fs\n" % (time.perf_counter() - t0))


if __name__ == "__main__":
    main()
