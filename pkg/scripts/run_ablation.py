#!/usr/bin/env python3
"""Branch-contribution ablation: gated-projection only, Fourier only, full.

Trains the three frozen-encoder variants on identical splits and seeds and
prints per-task AUCs with decoder sizes.

Usage:
    python scripts/run_ablation.py [--epochs 100]
"""

import argparse

from rwfn.data import SyntheticConfig, gen_synthetic
from rwfn.evaluation import run_ablation
from rwfn.training import TrainConfig


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenes", type=int, default=150)
    ap.add_argument("--noise", type=float, default=0.15)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--budget", type=int, default=500)
    ap.add_argument("--b-types", type=int, default=200)
    ap.add_argument("--b-partof", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ds = gen_synthetic(SyntheticConfig(num_scenes=args.scenes, feature_noise=args.noise,
                                       negative_ratio=2.0, seed=3))
    cfg = TrainConfig(epochs=args.epochs, seed=args.seed, instantiation_budget=args.budget)
    rows = run_ablation(ds, cfg, b_types=args.b_types, b_partof=args.b_partof)
    for row in rows:
        print(f"{row['variant']:>5}: T1 AUC {row['auc_types']:.3f}  "
              f"T2 AUC {row['auc_partof']:.3f}  "
              f"decoder {row['decoder_len_types']}/{row['decoder_len_partof']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
