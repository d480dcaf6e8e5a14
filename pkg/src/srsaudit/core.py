"""Domain types, vector math, and the five-way dataset partition."""
from __future__ import annotations

import enum
import hashlib
import json
import math
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, EmptyInputError, PartitionError, ZeroNormError


@dataclass(frozen=True)
class Voice:
    """One utterance: PCM samples plus speaker/voice identity."""

    speaker_id: str
    voice_id: str
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise EmptyInputError(f"voice {self.voice_id!r} has no samples")
        if self.sample_rate <= 0:
            raise EmptyInputError(f"voice {self.voice_id!r} has sample_rate <= 0")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def duration_ms(self) -> float:
        return 1000.0 * self.samples.size / self.sample_rate


@dataclass(frozen=True)
class Embedding:
    """Fixed-dimension real vector representation of a voice."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise EmptyInputError("embedding must be a non-empty 1-d vector")
        if not np.all(np.isfinite(values)):
            raise ZeroNormError("embedding has non-finite entries")
        if float(np.dot(values, values)) == 0.0:
            raise ZeroNormError("zero-norm embedding rejected")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.size


class PartitionLabel(enum.Enum):
    IMPOSTER = "imposter"
    SHADOW_TRAIN = "shadow_train"
    SHADOW_NONTRAIN = "shadow_nontrain"
    TARGET_TRAIN = "target_train"
    TARGET_NONTRAIN = "target_nontrain"


class VoiceRole(enum.Enum):
    TRAIN = "train"
    HELD_OUT = "held_out"


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    """Cosine of the angle between two embeddings, in [-1, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dim {a.dim} vs {b.dim}")
    av, bv = a.values, b.values
    denom = float(np.linalg.norm(av)) * float(np.linalg.norm(bv))
    return float(np.dot(av, bv)) / denom


def centroid(embeddings: list[Embedding]) -> Embedding:
    """Component-wise mean of a non-empty list of same-dimension embeddings.

    Duplicate multiplicities are reduced by their gcd first, so the centroid
    of k copies of a list is bit-identical to the centroid of the list.
    """
    if not embeddings:
        raise EmptyInputError("centroid of empty list")
    dim = embeddings[0].dim
    for e in embeddings[1:]:
        if e.dim != dim:
            raise DimensionMismatchError(f"dim {e.dim} vs {dim}")
    counts: dict[bytes, int] = {}
    unique: dict[bytes, np.ndarray] = {}
    for e in embeddings:
        key = e.values.tobytes()
        counts[key] = counts.get(key, 0) + 1
        unique[key] = e.values
    g = math.gcd(*counts.values())
    reduced = [v for key, v in unique.items() for _ in range(counts[key] // g)]
    return Embedding(np.mean(reduced, axis=0))


_LABEL_ORDER = [
    PartitionLabel.IMPOSTER,
    PartitionLabel.SHADOW_TRAIN,
    PartitionLabel.SHADOW_NONTRAIN,
    PartitionLabel.TARGET_TRAIN,
    PartitionLabel.TARGET_NONTRAIN,
]


def partition_speakers(speakers: list[str], seed: int) -> dict[str, PartitionLabel]:
    """Assign each speaker to one of five near-equal disjoint parts.

    Speaker ids are canonically sorted before the seeded shuffle, so the
    assignment is independent of input order.
    """
    if len(set(speakers)) != len(speakers):
        raise PartitionError("duplicate speaker ids")
    if len(speakers) < 5:
        raise PartitionError("need at least 5 speakers for a five-way partition")
    ordered = sorted(speakers)
    rng = np.random.default_rng(seed)
    shuffled = [ordered[i] for i in rng.permutation(len(ordered))]
    n = len(shuffled)
    base, extra = divmod(n, 5)
    labels: dict[str, PartitionLabel] = {}
    start = 0
    for part, label in enumerate(_LABEL_ORDER):
        size = base + (1 if part < extra else 0)
        for sid in shuffled[start : start + size]:
            labels[sid] = label
        start += size
    return labels


def split_member_voices(voice_ids: list[str], seed: int) -> tuple[set[str], set[str]]:
    """Split one training speaker's voices into near-equal train/held-out halves."""
    if len(set(voice_ids)) != len(voice_ids):
        raise PartitionError("duplicate voice ids")
    if len(voice_ids) < 2:
        raise PartitionError("need at least 2 voices to split into train/held-out")
    ordered = sorted(voice_ids)
    rng = np.random.default_rng(seed)
    shuffled = [ordered[i] for i in rng.permutation(len(ordered))]
    cut = (len(shuffled) + 1) // 2
    return set(shuffled[:cut]), set(shuffled[cut:])


def stable_seed(*parts) -> int:
    """Platform-independent 31-bit seed derived from the given parts."""
    key = ":".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2s(key).digest()[:4], "little") & 0x7FFFFFFF


_TRAIN_TO_NONTRAIN = {
    PartitionLabel.SHADOW_TRAIN: PartitionLabel.SHADOW_NONTRAIN,
    PartitionLabel.TARGET_TRAIN: PartitionLabel.TARGET_NONTRAIN,
}


@dataclass
class Partition:
    """Speaker labels plus per-training-speaker voice roles."""

    labels: dict[str, PartitionLabel]
    voice_roles: dict[str, dict[str, VoiceRole]] = field(default_factory=dict)

    def speakers(self, label: PartitionLabel) -> list[str]:
        return sorted(s for s, l in self.labels.items() if l is label)


def partition_dataset(voices_by_speaker: dict[str, list[str]], seed: int) -> Partition:
    """Partition speakers and split each training speaker's voices by role.

    Speakers with fewer than 2 voices cannot serve both the r=1 and r=0
    rows, so they are moved from the train parts to the matching non-train
    pools after the five-way assignment.
    """
    labels = partition_speakers(sorted(voices_by_speaker), seed)
    for sid, label in labels.items():
        if label in _TRAIN_TO_NONTRAIN and len(voices_by_speaker[sid]) < 2:
            labels[sid] = _TRAIN_TO_NONTRAIN[label]
    roles: dict[str, dict[str, VoiceRole]] = {}
    for sid, label in labels.items():
        if label not in _TRAIN_TO_NONTRAIN:
            continue
        train, held = split_member_voices(list(voices_by_speaker[sid]), seed=stable_seed(seed, sid))
        roles[sid] = {v: VoiceRole.TRAIN for v in train}
        roles[sid].update({v: VoiceRole.HELD_OUT for v in held})
    return Partition(labels=labels, voice_roles=roles)


def load_wav_voice(path: str | Path, speaker_id: str, voice_id: str) -> Voice:
    """Read a mono 16-bit little-endian PCM WAV file into a Voice."""
    path = Path(path)
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1:
            raise EmptyInputError(f"{path}: only mono WAV supported")
        if w.getsampwidth() != 2:
            raise EmptyInputError(f"{path}: only 16-bit PCM supported")
        rate = w.getframerate()
        raw = w.readframes(w.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return Voice(speaker_id=speaker_id, voice_id=voice_id, samples=samples, sample_rate=rate)


def load_raw_voice(path: str | Path) -> Voice:
    """Read raw little-endian f32 samples with a <path>.json sidecar descriptor."""
    path = Path(path)
    sidecar = path.with_suffix(path.suffix + ".json")
    meta = json.loads(sidecar.read_text())
    samples = np.fromfile(path, dtype="<f4").astype(np.float64)
    if samples.size != meta["num_samples"]:
        raise EmptyInputError(
            f"{path}: descriptor says {meta['num_samples']} samples, file has {samples.size}"
        )
    return Voice(
        speaker_id=meta["speaker_id"],
        voice_id=meta["voice_id"],
        samples=samples,
        sample_rate=meta["sample_rate"],
    )
