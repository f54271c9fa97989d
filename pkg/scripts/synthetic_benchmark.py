"""Train a bank on a synthetic corpus and compare against the min-eigenvalue baseline.

Example:
    python scripts/synthetic_benchmark.py --train 20 --eval 10 --size 128 --out results/
"""

import argparse
import logging
import time
from pathlib import Path

from tnle.io import write_bank, write_metrics, write_results
from tnle.model import GdConfig
from tnle.pipeline import METHOD_BASELINE, METHOD_TENSOR, EstimationParams, benchmark, train_bank
from tnle.synthetic import make_corpus, training_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--train", type=int, default=20, help="training images per level")
    ap.add_argument("--eval", type=int, default=10, help="held-out images per kind")
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--sigmas", default="5,10,15,20,25,30")
    ap.add_argument("--kinds", default="flat,textured")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--pooled", action="store_true", help="also fit and evaluate one pooled model")
    ap.add_argument("--out", type=Path, default=None, help="directory for bank and CSV outputs")
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    sigmas = [float(s) for s in args.sigmas.split(",")]
    t0 = time.perf_counter()
    bank = train_bank(training_corpus(args.train, args.size, seed=args.seed), sigmas,
                      cfg=GdConfig(), seed=args.seed, pooled=args.pooled)
    print(f"trained {len(bank.entries)} levels in {time.perf_counter() - t0:.1f}s")
    for e in bank.entries:
        print(f"  sigma_ref={e.sigma_ref:5g}  theta0={e.theta[0]:10.4f}  "
              f"max|theta_j|={abs(e.theta[1:]).max():.2e}")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        write_bank(bank, args.out / "bank.txt")

    modes = ["nearest"] + (["pooled"] if args.pooled else [])
    for k, kind in enumerate(args.kinds.split(",")):
        images = make_corpus(kind, args.eval, args.size, seed=args.seed + 1000 + k)
        for mode in modes:
            res = benchmark(images, sigmas, bank, EstimationParams(mode=mode), seed=args.seed + 7 + k)
            print(f"\n{kind} images, mode={mode}")
            print(f"{'sigma':>6} {'method':>9} {'mean':>9} {'rmse_truth':>11} {'rmse_spread':>12} {'mae':>9}")
            for s in sigmas:
                for method in (METHOD_TENSOR, METHOD_BASELINE):
                    m = res.metrics.get((method, s))
                    if m is None:
                        continue
                    vals = [r.sigma_hat for r in res.rows if r.method == method and r.sigma_true == s]
                    print(f"{s:6g} {method:>9} {sum(vals) / len(vals):9.4f} {m.rmse_truth:11.4g} "
                          f"{m.rmse_spread:12.4g} {m.mae:9.4g}")
            for err in res.errors:
                print("  error:", err)
            if args.out:
                write_results(res.rows, args.out / f"results_{kind}_{mode}.csv")
                write_metrics(res.metrics, args.out / f"metrics_{kind}_{mode}.csv")


if __name__ == "__main__":
    main()
