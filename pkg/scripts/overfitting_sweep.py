#!/usr/bin/env python3
"""Sweep the SRS memorization level and report attack AUROC and the
train/test EER gap at each point."""
import argparse
import csv
import sys
from pathlib import Path

from srsaudit.attack import TrainConfig
from srsaudit.pipeline import AuditConfig, Setting2, run_audit
from srsaudit.synth import SynthConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--gammas", type=float, nargs="+", default=[0.0, 0.3, 0.6, 0.9])
    parser.add_argument("--num-speakers", type=int, default=1000)
    parser.add_argument("--voices-per-speaker", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=1000)
    parser.add_argument("--out", type=Path, help="optional CSV output path")
    args = parser.parse_args()

    rows = []
    print(f"{'gamma':>6} {'auroc':>8} {'accuracy':>9} {'train_eer':>10} {'test_eer':>9} {'gap':>8}")
    for gamma in args.gammas:
        config = AuditConfig(
            synth=SynthConfig(num_speakers=args.num_speakers,
                              voices_per_speaker=(args.voices_per_speaker,
                                                  args.voices_per_speaker),
                              seed=args.seed),
            partition_seed=args.seed + 1,
            gamma=gamma,
            setting=Setting2(),
            ratios=(0.0,),
            train=TrainConfig(epochs=args.epochs, repeats=1, seed=args.seed),
        )
        results = run_audit(config)
        metrics = results["ratios"][0.0]
        rows.append({
            "gamma": gamma,
            "auroc": metrics["auroc"],
            "accuracy": metrics["accuracy"],
            "train_eer": results["train_eer"],
            "test_eer": results["test_eer"],
            "overfit_gap": results["overfit_gap"],
        })
        print(f"{gamma:>6.2f} {metrics['auroc']:>8.4f} {metrics['accuracy']:>9.4f} "
              f"{results['train_eer']:>10.4f} {results['test_eer']:>9.4f} "
              f"{results['overfit_gap']:>8.4f}")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
