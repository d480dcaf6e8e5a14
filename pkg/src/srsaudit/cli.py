"""Command-line entry point.

Each stage of the audit has its own subcommand; `audit` runs the whole
pipeline. Flags mirror the AuditConfig fields; `--config <file>` loads a
JSON document whose keys override the flag defaults.

Exit codes: 0 success, 2 configuration error, 3 stage failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .attack import TrainConfig, build_mixing_dataset, load_models, save_models, train_ensemble
from .core import PartitionLabel
from .errors import AuditError, ConfigError
from .features import FEATURE_NAMES, read_feature_cache, write_feature_cache
from .metrics import accuracy, auroc, roc_curve, tpr_at_fpr, write_roc_csv
from .pipeline import (
    AuditConfig,
    AuditContext,
    Setting2,
    config_hash,
    emit_report,
    run_audit,
    shadow_feature_rows,
    target_feature_rows,
)
from .queries import FEATURE_GROUPS, Technique, predict_counts
from .srs import SrsAccessMode
from .synth import SynthConfig, SyntheticDataset


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON config file; keys override the flags")
    p.add_argument("--num-speakers", type=int, default=50)
    p.add_argument("--voices-per-speaker", type=int, default=8)
    p.add_argument("--synth-seed", type=int, default=0)
    p.add_argument("--partition-seed", type=int, default=1)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--srs-seed", type=int, default=7)
    p.add_argument("--setting", choices=["1", "2"], default="2")
    p.add_argument("--n", type=int, default=10, help="Setting-2 inference voice cap N")
    p.add_argument("--m", type=int, default=20, help="number of imposters M")
    p.add_argument("--k", type=int, default=10, help="voices per imposter K")
    p.add_argument("--no-chunking", action="store_true")
    p.add_argument("--n-infer-voices", type=int, default=4)
    p.add_argument("--ratios", type=float, nargs="*", default=[0.0])
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--train-seed", type=int, default=0)
    p.add_argument("--no-mixing", action="store_true")


def _config_from_args(args) -> AuditConfig:
    overrides = {}
    if getattr(args, "config", None) is not None:
        overrides = json.loads(Path(args.config).read_text())

    def pick(key, default):
        return overrides.get(key, default)

    synth = SynthConfig(
        num_speakers=pick("num_speakers", args.num_speakers),
        voices_per_speaker=tuple(pick(
            "voices_per_speaker", (args.voices_per_speaker, args.voices_per_speaker))),
        seed=pick("synth_seed", args.synth_seed),
    )
    chunking = pick("chunking", not args.no_chunking) and pick("setting", args.setting) == "2"
    setting = Setting2(
        n=pick("n", args.n), m=pick("m", args.m), k=pick("k", args.k), chunking=chunking,
    )
    train = TrainConfig(
        epochs=pick("epochs", args.epochs),
        repeats=pick("repeats", args.repeats),
        seed=pick("train_seed", args.train_seed),
    )
    return AuditConfig(
        synth=synth,
        partition_seed=pick("partition_seed", args.partition_seed),
        gamma=pick("gamma", args.gamma),
        srs_seed=pick("srs_seed", args.srs_seed),
        setting=setting,
        n_infer_voices=pick("n_infer_voices", args.n_infer_voices),
        ratios=tuple(pick("ratios", args.ratios)),
        train=train,
        mixing=pick("mixing", not args.no_mixing),
    )


def cmd_synth(args) -> int:
    config = _config_from_args(args)
    ctx_dataset = SyntheticDataset(config.synth)
    manifest = {
        "config": dataclasses.asdict(config.synth),
        "speakers": {
            sid: ctx_dataset.voice_ids(sid) for sid in ctx_dataset.speaker_ids()
        },
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    if args.dump_pcm > 0:
        dumped = 0
        for sid in ctx_dataset.speaker_ids():
            for vid in ctx_dataset.voice_ids(sid):
                if dumped >= args.dump_pcm:
                    break
                voice = ctx_dataset.voice(vid)
                raw = out / f"{vid}.f32"
                voice.samples.astype("<f4").tofile(raw)
                (out / f"{vid}.f32.json").write_text(json.dumps({
                    "speaker_id": sid, "voice_id": vid,
                    "sample_rate": voice.sample_rate, "num_samples": int(voice.samples.size),
                }))
                dumped += 1
            if dumped >= args.dump_pcm:
                break
    print(f"wrote manifest for {len(manifest['speakers'])} speakers to {out}")
    return 0


def cmd_partition(args) -> int:
    ctx = AuditContext(_config_from_args(args))
    doc = {
        "labels": {sid: label.value for sid, label in ctx.partition.labels.items()},
        "voice_roles": {
            sid: {vid: role.value for vid, role in roles.items()}
            for sid, roles in ctx.partition.voice_roles.items()
        },
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "partition.json").write_text(json.dumps(doc, indent=2))
    counts = {label.value: len(ctx.partition.speakers(label)) for label in PartitionLabel}
    print(json.dumps(counts))
    return 0


def cmd_train_srs(args) -> int:
    ctx = AuditContext(_config_from_args(args))
    srs = ctx.shadow_srs if args.which == "shadow" else ctx.target_srs
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "config": dataclasses.asdict(srs.config),
        "speaker_ids": srs.speaker_ids,
        "centroids": srs.centroids.tolist(),
    }
    (out / f"srs_{args.which}.json").write_text(json.dumps(doc))
    print(f"trained {args.which} SRS on {len(srs.speaker_ids)} speakers")
    return 0


def cmd_extract(args) -> int:
    ctx = AuditContext(_config_from_args(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.stage == "shadow":
        r1, r0, non = shadow_feature_rows(ctx)
        write_feature_cache(out / "shadow_features.jsonl", r1 + r0 + non)
        print(f"wrote {len(r1) + len(r0) + len(non)} shadow rows")
    else:
        for r_m in ctx.config.ratios:
            members, non = target_feature_rows(ctx, r_m)
            write_feature_cache(out / f"target_features_r{r_m}.jsonl", members + non)
            print(f"wrote {len(members) + len(non)} target rows at r_m={r_m}")
    return 0


def cmd_train_attack(args) -> int:
    config = _config_from_args(args)
    rows = read_feature_cache(args.features)
    r1 = [r for r in rows if r.label == 1 and r.r == 1.0]
    r0 = [r for r in rows if r.label == 1 and r.r == 0.0]
    non = [r for r in rows if r.label == 0]
    if config.mixing:
        dataset = build_mixing_dataset(r1, r0, non)
    else:
        from .attack import dataset_from_rows
        dataset = dataset_from_rows(r1, non)
    models = train_ensemble(dataset, config.train)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_models(out / "models.json", {f"repeat{i}": m for i, m in enumerate(models)})
    print(f"trained {len(models)} classifier(s) on {dataset.x.shape[0]} rows")
    return 0


def cmd_bound_n(args) -> int:
    from .attack import bound_voice_count
    from .features import compute_features

    ctx = AuditContext(_config_from_args(args))
    feature_index = FEATURE_NAMES.index(args.feature)
    speakers = ctx.partition.speakers(PartitionLabel.SHADOW_TRAIN)[: args.speakers]

    def sampler(n):
        from .errors import EmptyInputError

        if n < 2:
            raise EmptyInputError("features need at least 2 voices")
        values = []
        for sid in speakers:
            voices = ctx.dataset.voices(sid)
            if len(voices) < n:
                continue  # this speaker cannot supply n voices
            values.append(compute_features(voices[:n], ctx.bank, ctx.shadow_access)[feature_index])
        if len(values) < 2:
            raise EmptyInputError(f"fewer than 2 speakers have {n} voices")
        return np.array(values)

    bound = bound_voice_count({(args.feature, "shadow"): sampler},
                              step=args.step, alpha=args.alpha)
    print(f"N' = {bound}")
    return 0


def cmd_infer(args) -> int:
    models = load_models(args.models)
    model = models[args.model_name] if args.model_name else next(iter(models.values()))
    rows = read_feature_cache(args.features)
    for row in rows:
        p, decision = model.predict(row.features)
        print(f"{row.speaker_id}\t{p:.6f}\t{'member' if decision else 'non-member'}")
    return 0


def cmd_evaluate(args) -> int:
    models = load_models(args.models)
    model = models[args.model_name] if args.model_name else next(iter(models.values()))
    rows = read_feature_cache(args.features)
    pos = np.array([model.predict(r.features)[0] for r in rows if r.label == 1])
    neg = np.array([model.predict(r.features)[0] for r in rows if r.label == 0])
    curve = roc_curve(pos, neg)
    decisions = np.concatenate([pos > 0.5, neg > 0.5]).astype(int)
    labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))]).astype(int)
    print(f"auroc\t{auroc(pos, neg):.6f}")
    print(f"accuracy\t{accuracy(decisions, labels):.6f}")
    print(f"tpr_at_1pct_fpr\t{tpr_at_fpr(curve, 0.01):.6f}")
    if args.roc_out:
        write_roc_csv(args.roc_out, curve)
    return 0


def cmd_plan_queries(args) -> int:
    print("group,technique,enrollment,recognition,total")
    techniques = [
        ("baseline", Technique()),
        ("concat", Technique(concat=True)),
        ("group", Technique(group=True)),
        ("group+concat", Technique(concat=True, group=True)),
        ("concat+group+share", Technique(True, True, True)),
    ]
    for group in FEATURE_GROUPS + ["all"]:
        for name, technique in techniques:
            try:
                qc = predict_counts(group, args.n, args.m, args.k, technique)
            except AuditError:
                continue
            print(f"{group},{name},{qc.enrollment},{qc.recognition},{qc.total}")
    return 0


def cmd_audit(args, report_only: bool = False) -> int:
    config = _config_from_args(args)
    out = Path(args.out)
    results = run_audit(config, outdir=out, cache_dir=out / "cache")
    print(f"config hash {results['config_hash']}")
    for r_m, metrics in sorted(results["ratios"].items()):
        print(f"r_m={r_m}: auroc={metrics['auroc']:.4f} accuracy={metrics['accuracy']:.4f}")
    print(f"overfit gap: {results['overfit_gap']:.4f} "
          f"(train_eer={results['train_eer']:.4f}, test_eer={results['test_eer']:.4f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srsaudit",
                                     description="speaker-level membership-inference auditing")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic dataset manifest")
    _add_config_flags(p)
    p.add_argument("--out", default="out", type=Path)
    p.add_argument("--dump-pcm", type=int, default=0, help="also write this many raw voices")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("partition", help="five-way speaker partition and voice roles")
    _add_config_flags(p)
    p.add_argument("--out", default="out", type=Path)
    p.set_defaults(fn=cmd_partition)

    p = sub.add_parser("train-srs", help="train the shadow or target synthetic SRS")
    _add_config_flags(p)
    p.add_argument("--which", choices=["shadow", "target"], default="shadow")
    p.add_argument("--out", default="out", type=Path)
    p.set_defaults(fn=cmd_train_srs)

    p = sub.add_parser("extract", help="extract feature rows for one pipeline stage")
    _add_config_flags(p)
    p.add_argument("--stage", choices=["shadow", "target"], default="shadow")
    p.add_argument("--out", default="out", type=Path)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("train-attack", help="train attack classifiers from cached features")
    _add_config_flags(p)
    p.add_argument("--features", required=True, type=Path)
    p.add_argument("--out", default="out", type=Path)
    p.set_defaults(fn=cmd_train_attack)

    p = sub.add_parser("bound-n", help="t-test bound on the useful inference voice count")
    _add_config_flags(p)
    p.add_argument("--feature", default=FEATURE_NAMES[0])
    p.add_argument("--speakers", type=int, default=10)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(fn=cmd_bound_n)

    p = sub.add_parser("infer", help="membership decisions for cached feature rows")
    p.add_argument("--models", required=True, type=Path)
    p.add_argument("--model-name")
    p.add_argument("--features", required=True, type=Path)
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("evaluate", help="attack metrics over labeled feature rows")
    p.add_argument("--models", required=True, type=Path)
    p.add_argument("--model-name")
    p.add_argument("--features", required=True, type=Path)
    p.add_argument("--roc-out", type=Path)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("plan-queries", help="per-group query count table (CSV)")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(fn=cmd_plan_queries)

    p = sub.add_parser("report", help="run the audit and write the report bundle")
    _add_config_flags(p)
    p.add_argument("--out", default="out", type=Path)
    p.set_defaults(fn=lambda a: cmd_audit(a, report_only=True))

    p = sub.add_parser("audit", help="run the full pipeline end to end")
    _add_config_flags(p)
    p.add_argument("--out", default="out", type=Path)
    p.set_defaults(fn=cmd_audit)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except AuditError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
