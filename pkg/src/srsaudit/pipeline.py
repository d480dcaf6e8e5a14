"""End-to-end audit orchestration: synthesis, partitioning, shadow/target SRS,
feature extraction, attack training, inference, and reporting."""
from __future__ import annotations

import dataclasses
import json
import os
import tempfile
from itertools import zip_longest
from dataclasses import dataclass, field
from hashlib import sha256
from pathlib import Path

import numpy as np

from .attack import (
    ClassifierModel,
    MixingDataset,
    TrainConfig,
    build_mixing_dataset,
    dataset_from_rows,
    train_ensemble,
)
from .chunking import ChunkConfig, split
from .core import PartitionLabel, Voice, VoiceRole, partition_dataset, stable_seed
from .errors import ConfigError
from .features import (
    FeatureRow,
    ImposterBank,
    WhiteBoxAccess,
    apply_chunking,
    compute_features,
    read_feature_cache,
    write_feature_cache,
)
from .metrics import accuracy, auroc, overfit_gap, roc_curve, tpr_at_fpr, write_metrics_csv, write_roc_csv
from .srs import SyntheticSrs, SyntheticSrsConfig, synthetic_train
from .synth import SynthConfig, SyntheticDataset


@dataclass(frozen=True)
class Setting2:
    n: int = 10
    m: int = 20
    k: int = 10
    chunking: bool = True


@dataclass(frozen=True)
class AuditConfig:
    synth: SynthConfig = SynthConfig()
    partition_seed: int = 1
    gamma: float = 0.9
    srs_seed: int = 7
    setting: Setting2 = Setting2()
    n_infer_voices: int = 4
    ratios: tuple[float, ...] = (0.0,)
    train: TrainConfig = TrainConfig(repeats=1)
    mixing: bool = True

    def __post_init__(self):
        if any(not 0.0 <= r <= 1.0 for r in self.ratios):
            raise ConfigError("evaluation ratios must lie in [0, 1]")
        if self.setting.n < 2:
            raise ConfigError("Setting-2 requires N >= 2")


def config_hash(config: AuditConfig) -> str:
    canonical = json.dumps(dataclasses.asdict(config), sort_keys=True)
    return sha256(canonical.encode()).hexdigest()[:16]


def _srs_config(config: AuditConfig, gamma: float | None = None) -> SyntheticSrsConfig:
    return SyntheticSrsConfig(
        frame_rate=config.synth.frame_rate,
        frame_noise_sigma=config.synth.frame_noise_sigma,
        gamma=config.gamma if gamma is None else gamma,
        seed=config.srs_seed,
    )


class AuditContext:
    """Shared state of one audit: dataset, partition, SRSs, imposter bank."""

    def __init__(self, config: AuditConfig):
        self.config = config
        self.dataset = SyntheticDataset(config.synth)
        self.partition = partition_dataset(self.dataset.voices_by_speaker(), config.partition_seed)
        self.shadow_srs = self._train_srs(PartitionLabel.SHADOW_TRAIN)
        self.target_srs = self._train_srs(PartitionLabel.TARGET_TRAIN)
        self.shadow_access = WhiteBoxAccess(self.shadow_srs)
        self.target_access = WhiteBoxAccess(self.target_srs)
        self.bank = self._imposter_bank()

    def _train_srs(self, label: PartitionLabel) -> SyntheticSrs:
        training = {}
        for sid in self.partition.speakers(label):
            roles = self.partition.voice_roles[sid]
            train_ids = sorted(v for v, role in roles.items() if role is VoiceRole.TRAIN)
            training[sid] = [self.dataset.voice(v) for v in train_ids]
        return synthetic_train(_srs_config(self.config), training)

    def _imposter_bank(self) -> ImposterBank:
        setting = self.config.setting
        imposters = self.partition.speakers(PartitionLabel.IMPOSTER)
        rng = np.random.default_rng(stable_seed(self.config.partition_seed, "bank"))
        chosen = [imposters[i] for i in rng.choice(len(imposters), size=min(setting.m, len(imposters)), replace=False)]
        groups = [self.dataset.voices(sid) for sid in sorted(chosen)]
        bank = ImposterBank(groups)
        if setting.chunking:
            _, bank = apply_chunking([], bank, ChunkConfig(), max_imposter_voices=setting.k)
        else:
            bank = ImposterBank([g[: setting.k] for g in bank.voices])
        return bank

    def sample_inference_voices(self, speaker_id: str, r_m: float, tag: str) -> list[Voice]:
        """Pick the speaker's inference voices; members mix train and held-out
        voices in the requested ratio r_m."""
        n = self.config.n_infer_voices
        roles = self.partition.voice_roles.get(speaker_id)
        rng = np.random.default_rng(stable_seed(self.config.partition_seed, tag, speaker_id, r_m))
        if roles is None:
            ids = self.dataset.voice_ids(speaker_id)
            chosen = [ids[i] for i in rng.choice(len(ids), size=min(n, len(ids)), replace=False)]
        else:
            train_ids = sorted(v for v, role in roles.items() if role is VoiceRole.TRAIN)
            held_ids = sorted(v for v, role in roles.items() if role is VoiceRole.HELD_OUT)
            want = min(n, len(train_ids) + len(held_ids))
            n_train = min(int(np.ceil(want * r_m)), len(train_ids))
            n_held = min(want - n_train, len(held_ids))
            chosen = [train_ids[i] for i in rng.choice(len(train_ids), size=n_train, replace=False)]
            chosen += [held_ids[i] for i in rng.choice(len(held_ids), size=n_held, replace=False)]
        return [self.dataset.voice(v) for v in sorted(chosen)]

    def features_for(self, speaker_id: str, voices: list[Voice], access, r: float | None,
                     label: int | None) -> FeatureRow:
        setting = self.config.setting
        # the bank is chunked once up front; only the target voices need it here
        if setting.chunking:
            # interleave chunks round-robin so the cap keeps every source
            # voice represented instead of exhausting the first voices
            per_voice = [split(v, ChunkConfig()) for v in voices]
            voices = [c for tier in zip_longest(*per_voice) for c in tier if c is not None]
            voices = voices[: setting.n]
        else:
            voices = voices[: setting.n]
        bank = self.bank
        vec = compute_features(voices, bank, access, chunk_config=None)
        return FeatureRow(speaker_id=speaker_id, features=vec, label=label, r=r,
                          n=len(voices), m=bank.m, q=bank.q, chunked=setting.chunking)


def shadow_feature_rows(ctx: AuditContext):
    """(r=1 rows, r=0 rows, non-member rows) against the shadow SRS."""
    r1, r0, non = [], [], []
    for sid in ctx.partition.speakers(PartitionLabel.SHADOW_TRAIN):
        voices = ctx.sample_inference_voices(sid, 1.0, "shadow")
        r1.append(ctx.features_for(sid, voices, ctx.shadow_access, r=1.0, label=1))
        voices = ctx.sample_inference_voices(sid, 0.0, "shadow")
        r0.append(ctx.features_for(sid, voices, ctx.shadow_access, r=0.0, label=1))
    for sid in ctx.partition.speakers(PartitionLabel.SHADOW_NONTRAIN):
        voices = ctx.sample_inference_voices(sid, 0.0, "shadow")
        non.append(ctx.features_for(sid, voices, ctx.shadow_access, r=0.0, label=0))
    return r1, r0, non


def target_feature_rows(ctx: AuditContext, r_m: float):
    """(member rows, non-member rows) against the target SRS at ratio r_m."""
    members, non = [], []
    for sid in ctx.partition.speakers(PartitionLabel.TARGET_TRAIN):
        voices = ctx.sample_inference_voices(sid, r_m, "target")
        members.append(ctx.features_for(sid, voices, ctx.target_access, r=r_m, label=1))
    for sid in ctx.partition.speakers(PartitionLabel.TARGET_NONTRAIN):
        voices = ctx.sample_inference_voices(sid, 0.0, "target")
        non.append(ctx.features_for(sid, voices, ctx.target_access, r=None, label=0))
    n = min(len(members), len(non))
    return members[:n], non[:n]


def evaluate_models(models: list[ClassifierModel], members: list[FeatureRow],
                    non_members: list[FeatureRow]) -> dict:
    """Metrics averaged over an ensemble of independently trained models."""
    per_model = []
    for model in models:
        pos = model.predict_proba(np.stack([r.features for r in members]))
        neg = model.predict_proba(np.stack([r.features for r in non_members]))
        curve = roc_curve(pos, neg)
        decisions = np.concatenate([pos > 0.5, neg > 0.5]).astype(int)
        labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))]).astype(int)
        per_model.append({
            "auroc": auroc(pos, neg),
            "accuracy": accuracy(decisions, labels),
            "tpr_at_1pct_fpr": tpr_at_fpr(curve, 0.01),
        })
    return {key: float(np.mean([m[key] for m in per_model])) for key in per_model[0]}


def eer_trials(ctx: AuditContext, speakers: list[str], role: VoiceRole | None,
               n_trials: int, seed: int):
    """(genuine, imposter) cosine scores for EER estimation on the target SRS."""
    rng = np.random.default_rng(seed)
    pool: dict[str, list[str]] = {}
    for sid in speakers:
        roles = ctx.partition.voice_roles.get(sid)
        if role is None or roles is None:
            ids = ctx.dataset.voice_ids(sid)
        else:
            ids = sorted(v for v, rl in roles.items() if rl is role)
        if len(ids) >= 2:
            pool[sid] = ids
    sids = sorted(pool)
    emb = ctx.target_access
    genuine, imposter = [], []
    for _ in range(n_trials // 2):
        sid = sids[rng.integers(len(sids))]
        a, b = rng.choice(len(pool[sid]), size=2, replace=False)
        ea = emb.embedding(ctx.dataset.voice(pool[sid][a])).values
        eb = emb.embedding(ctx.dataset.voice(pool[sid][b])).values
        genuine.append(float(ea @ eb / (np.linalg.norm(ea) * np.linalg.norm(eb))))
        s1, s2 = rng.choice(len(sids), size=2, replace=False)
        va = pool[sids[s1]][rng.integers(len(pool[sids[s1]]))]
        vb = pool[sids[s2]][rng.integers(len(pool[sids[s2]]))]
        ea = emb.embedding(ctx.dataset.voice(va)).values
        eb = emb.embedding(ctx.dataset.voice(vb)).values
        imposter.append(float(ea @ eb / (np.linalg.norm(ea) * np.linalg.norm(eb))))
    return np.array(genuine), np.array(imposter)


def compute_overfit_gap(ctx: AuditContext, n_trials: int = 4000):
    train_spk = ctx.partition.speakers(PartitionLabel.TARGET_TRAIN)
    test_spk = ctx.partition.speakers(PartitionLabel.TARGET_NONTRAIN)
    seed = stable_seed(ctx.config.partition_seed, "eer")
    tg, ti = eer_trials(ctx, train_spk, VoiceRole.TRAIN, n_trials, seed)
    sg, si = eer_trials(ctx, test_spk, None, n_trials, seed + 1)
    return overfit_gap(tg, ti, sg, si)


def run_audit(config: AuditConfig, outdir: str | Path | None = None,
              cache_dir: str | Path | None = None) -> dict:
    """Full pipeline; returns the report dict and optionally writes files."""
    ctx = AuditContext(config)
    chash = config_hash(config)

    r1, r0, non = _cached_rows(cache_dir, chash, "shadow", lambda: shadow_feature_rows(ctx))
    if config.mixing:
        dataset = build_mixing_dataset(r1, r0, non)
    else:
        dataset = dataset_from_rows(r1, non)
    models = train_ensemble(dataset, config.train)

    results = {"config_hash": chash, "ratios": {}}
    curves = {}
    for r_m in config.ratios:
        members, non_members = _cached_rows2(
            cache_dir, chash, f"target_r{r_m}", lambda: target_feature_rows(ctx, r_m))
        results["ratios"][r_m] = evaluate_models(models, members, non_members)
        pos = models[0].predict_proba(np.stack([r.features for r in members]))
        neg = models[0].predict_proba(np.stack([r.features for r in non_members]))
        curves[r_m] = roc_curve(pos, neg)
        results["ratios"][r_m]["n_members"] = len(members)
        results["ratios"][r_m]["n_nonmembers"] = len(non_members)

    train_eer, test_eer, gap = compute_overfit_gap(ctx)
    results["train_eer"] = train_eer
    results["test_eer"] = test_eer
    results["overfit_gap"] = gap

    if outdir is not None:
        emit_report(Path(outdir), config, results, curves, models, (r1, r0, non))
    return results


def _atomic_write(path: Path, writer):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _cached_rows(cache_dir, chash, stage, compute):
    if cache_dir is None:
        return compute()
    path = Path(cache_dir) / chash / f"{stage}.jsonl"
    if path.exists():
        rows = read_feature_cache(path)
        split_at = {}
        for row in rows:
            split_at.setdefault((row.label, row.r), []).append(row)
        return split_at.get((1, 1.0), []), split_at.get((1, 0.0), []), split_at.get((0, 0.0), [])
    result = compute()
    _atomic_write(path, lambda tmp: write_feature_cache(tmp, [r for part in result for r in part]))
    return result


def _cached_rows2(cache_dir, chash, stage, compute):
    if cache_dir is None:
        return compute()
    path = Path(cache_dir) / chash / f"{stage}.jsonl"
    if path.exists():
        rows = read_feature_cache(path)
        return [r for r in rows if r.label == 1], [r for r in rows if r.label == 0]
    members, non = compute()
    _atomic_write(path, lambda tmp: write_feature_cache(tmp, members + non))
    return members, non


def permutation_importance(model: ClassifierModel, members: list[FeatureRow],
                           non_members: list[FeatureRow], n_permutations: int = 10,
                           seed: int = 0) -> np.ndarray:
    """Mean AUROC drop when each feature is shuffled across evaluation rows."""
    from .features import NUM_FEATURES

    x_pos = np.stack([r.features for r in members])
    x_neg = np.stack([r.features for r in non_members])
    base = auroc(model.predict_proba(x_pos), model.predict_proba(x_neg))
    rng = np.random.default_rng(seed)
    x_all = np.concatenate([x_pos, x_neg])
    n_pos = x_pos.shape[0]
    deltas = np.zeros(NUM_FEATURES)
    for f in range(NUM_FEATURES):
        drop = 0.0
        for _ in range(n_permutations):
            shuffled = x_all.copy()
            shuffled[:, f] = rng.permutation(shuffled[:, f])
            drop += base - auroc(model.predict_proba(shuffled[:n_pos]),
                                 model.predict_proba(shuffled[n_pos:]))
        deltas[f] = drop / n_permutations
    return deltas


def emit_report(outdir: Path, config: AuditConfig, results: dict, curves: dict,
                models, shadow_rows, importance: np.ndarray | None = None):
    """Write metrics.csv, roc.csv, query_counts.csv, features.jsonl, models, summary."""
    from .features import FEATURE_NAMES
    from .queries import FEATURE_GROUPS, Technique, predict_counts
    from .attack import save_models

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    chash = results["config_hash"]

    flat = {}
    for r_m, metrics in results["ratios"].items():
        for key, value in metrics.items():
            if key.startswith("n_"):
                continue
            flat[f"{key}@r={r_m}"] = value
    flat["train_eer"] = results["train_eer"]
    flat["test_eer"] = results["test_eer"]
    flat["overfit_gap"] = results["overfit_gap"]
    some_ratio = next(iter(results["ratios"].values()), {})
    write_metrics_csv(outdir / "metrics.csv", flat,
                      some_ratio.get("n_members", 0), some_ratio.get("n_nonmembers", 0), chash)

    for r_m, curve in curves.items():
        write_roc_csv(outdir / f"roc_r{r_m}.csv", curve)

    setting = config.setting
    with open(outdir / "query_counts.csv", "w") as fh:
        fh.write("group,technique,enrollment,recognition,total\n")
        for group in FEATURE_GROUPS + ["all"]:
            for tech_name, tech in [
                ("baseline", Technique()),
                ("concat", Technique(concat=True)),
                ("group", Technique(group=True)),
                ("group+concat", Technique(concat=True, group=True)),
                ("concat+group+share", Technique(True, True, True)),
            ]:
                try:
                    qc = predict_counts(group, setting.n, setting.m, setting.k, tech)
                except Exception:
                    continue
                fh.write(f"{group},{tech_name},{qc.enrollment},{qc.recognition},{qc.total}\n")

    write_feature_cache(outdir / "features.jsonl", [r for part in shadow_rows for r in part])

    models_dir = outdir / "models"
    models_dir.mkdir(exist_ok=True)
    save_models(models_dir / "classifier.json", {f"repeat{i}": m for i, m in enumerate(models)})

    lines = [f"audit {chash}", ""]
    lines.append("metric value vs mixing ratio r_m:")
    for r_m, metrics in sorted(results["ratios"].items()):
        lines.append(
            f"  r_m={r_m}: auroc={metrics['auroc']:.4f} accuracy={metrics['accuracy']:.4f} "
            f"tpr@1%fpr={metrics['tpr_at_1pct_fpr']:.4f}"
        )
    lines.append("")
    lines.append(f"srs gamma={config.gamma}: train_eer={results['train_eer']:.4f} "
                 f"test_eer={results['test_eer']:.4f} gap={results['overfit_gap']:.4f}")
    if importance is not None:
        lines.append("")
        lines.append("permutation importance (mean auroc drop, top 15):")
        top = np.argsort(importance)[::-1][:15]
        for f in top:
            lines.append(f"  {FEATURE_NAMES[f]}: {importance[f]:+.4f}")
    (outdir / "summary.txt").write_text("\n".join(lines) + "\n")
