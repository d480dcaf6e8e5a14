#!/usr/bin/env python3
"""Compare attack models trained with the mixing strategy against models
trained only on fully-member (r=1) or disjoint-voice (r=0) shadow rows,
evaluated across a grid of inference mixing ratios."""
import argparse
import csv
import sys
from pathlib import Path

from srsaudit.attack import TrainConfig, build_mixing_dataset, dataset_from_rows, train_ensemble
from srsaudit.pipeline import (
    AuditConfig,
    AuditContext,
    Setting2,
    evaluate_models,
    shadow_feature_rows,
    target_feature_rows,
)
from srsaudit.synth import SynthConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ratios", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75, 1.0])
    parser.add_argument("--num-speakers", type=int, default=1000)
    parser.add_argument("--gamma", type=float, default=0.9)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--out", type=Path, help="optional CSV output path")
    args = parser.parse_args()

    config = AuditConfig(
        synth=SynthConfig(num_speakers=args.num_speakers, voices_per_speaker=(8, 8),
                          seed=args.seed),
        partition_seed=args.seed + 1,
        gamma=args.gamma,
        setting=Setting2(),
        ratios=tuple(args.ratios),
        train=TrainConfig(repeats=args.repeats, seed=args.seed),
    )
    ctx = AuditContext(config)
    r1, r0, non = shadow_feature_rows(ctx)
    models = {
        "mix": train_ensemble(build_mixing_dataset(r1, r0, non), config.train),
        "r1_only": train_ensemble(dataset_from_rows(r1, non), config.train),
        "r0_only": train_ensemble(dataset_from_rows(r0, non), config.train),
    }

    rows = []
    print(f"{'r_m':>5} " + " ".join(f"{name:>10}" for name in models))
    for r_m in args.ratios:
        members, non_members = target_feature_rows(ctx, r_m)
        row = {"r_m": r_m}
        for name, ensemble in models.items():
            row[name] = evaluate_models(ensemble, members, non_members)["auroc"]
        rows.append(row)
        print(f"{r_m:>5.2f} " + " ".join(f"{row[name]:>10.4f}" for name in models))

    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
