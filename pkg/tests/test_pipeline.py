import numpy as np
import pytest

from srsaudit.attack import TrainConfig
from srsaudit.core import PartitionLabel, VoiceRole
from srsaudit.errors import ConfigError
from srsaudit.pipeline import (
    AuditConfig,
    AuditContext,
    Setting2,
    config_hash,
    permutation_importance,
    run_audit,
    shadow_feature_rows,
    target_feature_rows,
)
from srsaudit.synth import SynthConfig


def small_config(**overrides):
    defaults = dict(
        synth=SynthConfig(num_speakers=25, voices_per_speaker=(5, 6), seed=0),
        gamma=0.8,
        setting=Setting2(n=4, m=3, k=2, chunking=False),
        n_infer_voices=3,
        ratios=(0.0,),
        train=TrainConfig(epochs=100, repeats=1),
    )
    defaults.update(overrides)
    return AuditConfig(**defaults)


@pytest.fixture(scope="module")
def ctx():
    return AuditContext(small_config())


def test_config_hash_deterministic_and_sensitive():
    a = config_hash(small_config())
    b = config_hash(small_config())
    c = config_hash(small_config(gamma=0.5))
    assert a == b
    assert a != c
    assert len(a) == 16


def test_config_validation():
    with pytest.raises(ConfigError):
        small_config(ratios=(1.5,))
    with pytest.raises(ConfigError):
        small_config(setting=Setting2(n=1, m=3, k=2))


def test_shadow_row_counts(ctx):
    r1, r0, non = shadow_feature_rows(ctx)
    n_train = len(ctx.partition.speakers(PartitionLabel.SHADOW_TRAIN))
    n_nontrain = len(ctx.partition.speakers(PartitionLabel.SHADOW_NONTRAIN))
    assert len(r1) == len(r0) == n_train
    assert len(non) == n_nontrain
    assert all(row.label == 1 and row.r == 1.0 for row in r1)
    assert all(row.label == 1 and row.r == 0.0 for row in r0)
    assert all(row.label == 0 for row in non)


def test_shadow_rows_never_touch_target_speakers(ctx):
    r1, r0, non = shadow_feature_rows(ctx)
    shadow_sids = {row.speaker_id for row in r1 + r0 + non}
    target_sids = set(ctx.partition.speakers(PartitionLabel.TARGET_TRAIN))
    target_sids |= set(ctx.partition.speakers(PartitionLabel.TARGET_NONTRAIN))
    assert shadow_sids.isdisjoint(target_sids)


def test_target_rows_are_balanced(ctx):
    members, non = target_feature_rows(ctx, 0.0)
    assert len(members) == len(non) > 0


def test_inference_voices_respect_ratio(ctx):
    sid = ctx.partition.speakers(PartitionLabel.TARGET_TRAIN)[0]
    roles = ctx.partition.voice_roles[sid]
    all_train = {v for v, role in roles.items() if role is VoiceRole.TRAIN}
    chosen_r1 = {v.voice_id for v in ctx.sample_inference_voices(sid, 1.0, "t")}
    chosen_r0 = {v.voice_id for v in ctx.sample_inference_voices(sid, 0.0, "t")}
    assert chosen_r1 <= all_train
    assert chosen_r0.isdisjoint(all_train)


def test_inference_voice_sampling_deterministic(ctx):
    sid = ctx.partition.speakers(PartitionLabel.TARGET_TRAIN)[0]
    a = [v.voice_id for v in ctx.sample_inference_voices(sid, 0.5, "t")]
    b = [v.voice_id for v in ctx.sample_inference_voices(sid, 0.5, "t")]
    assert a == b


def test_run_audit_reports_metrics():
    results = run_audit(small_config())
    assert set(results["ratios"]) == {0.0}
    metrics = results["ratios"][0.0]
    assert 0.0 <= metrics["auroc"] <= 1.0
    assert 0.0 <= metrics["accuracy"] <= 1.0
    assert results["train_eer"] <= results["test_eer"] + 0.2


def test_run_audit_empty_ratios():
    results = run_audit(small_config(ratios=()))
    assert results["ratios"] == {}
    assert "overfit_gap" in results


def test_cache_does_not_change_results(tmp_path):
    config = small_config()
    fresh = run_audit(config)
    first = run_audit(config, cache_dir=tmp_path)
    cached = run_audit(config, cache_dir=tmp_path)
    assert (tmp_path / config_hash(config) / "shadow.jsonl").exists()
    assert (tmp_path / config_hash(config) / "target_r0.0.jsonl").exists()
    for key in ("auroc", "accuracy", "tpr_at_1pct_fpr"):
        assert fresh["ratios"][0.0][key] == pytest.approx(first["ratios"][0.0][key], abs=1e-12)
        assert first["ratios"][0.0][key] == cached["ratios"][0.0][key]


def test_report_files_and_rerun_byte_identical(tmp_path):
    config = small_config()
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_audit(config, outdir=out1)
    run_audit(config, outdir=out2)
    for name in ("metrics.csv", "roc_r0.0.csv", "query_counts.csv",
                 "features.jsonl", "summary.txt"):
        assert (out1 / name).exists(), name
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    assert (out1 / "models" / "classifier.json").exists()


def test_query_counts_csv_covers_groups(tmp_path):
    run_audit(small_config(), outdir=tmp_path)
    lines = (tmp_path / "query_counts.csv").read_text().strip().splitlines()
    assert lines[0] == "group,technique,enrollment,recognition,total"
    groups = {line.split(",")[0] for line in lines[1:]}
    assert "voice_centroid" in groups and "all" in groups
    for line in lines[1:]:
        _, _, enr, rec, total = line.split(",")
        assert int(enr) + int(rec) == int(total)


def test_permutation_importance_shape(ctx):
    from srsaudit.attack import train_classifier, build_mixing_dataset

    r1, r0, non = shadow_feature_rows(ctx)
    dataset = build_mixing_dataset(r1, r0, non)
    model = train_classifier(dataset, TrainConfig(epochs=100, repeats=1))
    members, non_members = target_feature_rows(ctx, 0.0)
    deltas = permutation_importance(model, members, non_members, n_permutations=2)
    assert deltas.shape == (103,)
    assert np.all(np.isfinite(deltas))
