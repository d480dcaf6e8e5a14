#!/usr/bin/env python3
"""Print the query-count table: enrollment/recognition API calls per feature
group under each query-reduction technique, plus the white-box budget."""
import argparse
import sys

from srsaudit.queries import FEATURE_GROUPS, Technique, predict_counts, white_box_count


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=10, help="inference voices per speaker")
    parser.add_argument("--m", type=int, default=20, help="number of imposters")
    parser.add_argument("--k", type=int, default=10, help="voices per imposter")
    args = parser.parse_args()

    techniques = [
        ("baseline", Technique()),
        ("concat", Technique(concat=True)),
        ("group", Technique(group=True)),
        ("group+concat", Technique(concat=True, group=True)),
        ("concat+group+share", Technique(True, True, True)),
    ]
    print(f"N={args.n} M={args.m} K={args.k} (Q={args.m * args.k})")
    print(f"{'group':<18} {'technique':<20} {'enroll':>7} {'recog':>7} {'total':>7}")
    for group in FEATURE_GROUPS + ["all"]:
        for name, technique in techniques:
            try:
                qc = predict_counts(group, args.n, args.m, args.k, technique)
            except Exception:
                continue
            print(f"{group:<18} {name:<20} {qc.enrollment:>7} {qc.recognition:>7} {qc.total:>7}")
    print(f"\nwhite-box embed budget: {white_box_count(args.n, args.m * args.k)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
