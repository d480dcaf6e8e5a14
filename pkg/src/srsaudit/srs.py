"""SRS access contract and a deterministic synthetic SRS with tunable memorization.

The synthetic model mean-pools frame vectors, projects them through a fixed
semi-orthogonal map, and (for memorization gamma > 0) warps the result toward
the anchor of the nearest training-speaker centroid before normalizing.
"""
from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field

import numpy as np

from .core import Embedding, Voice
from .errors import EmptyInputError, ModeError, TemplateError
from .portable import random_semi_orthogonal

# Frame featurizer contract shared with dataset synthesis and out-of-process
# backends: each frame of round(sample_rate / frame_rate) samples carries its
# FRAME_DIM-vector in the first FRAME_DIM samples, scaled by FRAME_SCALE.
FRAME_DIM = 16
FRAME_SCALE = 0.25


class SrsAccessMode(enum.Enum):
    WHITE_BOX = "white_box"
    BLACK_BOX_VERIFICATION = "black_box_verification"
    BLACK_BOX_IDENTIFICATION = "black_box_identification"


@dataclass(frozen=True)
class SyntheticSrsConfig:
    dim: int = 32
    frame_rate: int = 100
    frame_noise_sigma: float = 0.3
    gamma: float = 0.0
    beta: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise EmptyInputError("gamma must lie in [0, 1]")
        if self.beta <= 0:
            raise EmptyInputError("beta must be positive")
        if self.dim < FRAME_DIM:
            raise EmptyInputError(f"dim must be >= {FRAME_DIM}")


@dataclass
class QueryLedger:
    """Exact API-call counts; one increment per call regardless of payload."""

    enroll_count: int = 0
    recognize_count: int = 0
    embed_count: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def bump_enroll(self):
        with self._lock:
            self.enroll_count += 1

    def bump_recognize(self):
        with self._lock:
            self.recognize_count += 1

    def bump_embed(self):
        with self._lock:
            self.embed_count += 1

    def counts(self) -> tuple[int, int, int]:
        return (self.enroll_count, self.recognize_count, self.embed_count)


def frame_matrix(voice: Voice, frame_rate: int) -> np.ndarray:
    """(n_frames, FRAME_DIM) frame vectors of a voice; errors if shorter than one frame."""
    frame_len = round(voice.sample_rate / frame_rate)
    n = voice.samples.size // frame_len
    if n == 0:
        raise EmptyInputError(f"voice {voice.voice_id!r} shorter than one frame")
    window = voice.samples[: n * frame_len].reshape(n, frame_len)
    return window[:, :FRAME_DIM] / FRAME_SCALE


class SyntheticSrs:
    """Deterministic stand-in for a trained speaker-embedding model.

    Immutable after construction; safe to share across workers.
    """

    def __init__(self, config: SyntheticSrsConfig, centroids: np.ndarray, speaker_ids: list[str]):
        self.config = config
        self.projection = random_semi_orthogonal(config.dim, FRAME_DIM, config.seed)
        self.centroids = centroids  # (n_speakers, FRAME_DIM) frame-space centroids
        self.speaker_ids = list(speaker_ids)
        anchors = centroids @ self.projection.T
        anchors /= np.linalg.norm(anchors, axis=1, keepdims=True)
        self.anchors = anchors

    def embed(self, voice: Voice, ledger: QueryLedger | None = None) -> Embedding:
        m = frame_matrix(voice, self.config.frame_rate).mean(axis=0)
        raw = self.projection @ m
        gamma = self.config.gamma
        if gamma > 0.0 and len(self.speaker_ids) > 0:
            d2 = np.sum((self.centroids - m) ** 2, axis=1)
            j = int(np.argmin(d2))
            k = float(np.exp(-d2[j] / self.config.beta))
            raw = raw + gamma * k * (self.anchors[j] - raw)
        if ledger is not None:
            ledger.bump_embed()
        return Embedding(raw / np.linalg.norm(raw))


def synthetic_train(config: SyntheticSrsConfig, training_voices: dict[str, list[Voice]]) -> SyntheticSrs:
    """Fit the synthetic SRS: one frame-space centroid per training speaker."""
    if not training_voices or all(not vs for vs in training_voices.values()):
        raise EmptyInputError("empty training set")
    speaker_ids = sorted(training_voices)
    centroids = np.empty((len(speaker_ids), FRAME_DIM))
    for row, sid in enumerate(speaker_ids):
        voices = training_voices[sid]
        if not voices:
            raise EmptyInputError(f"training speaker {sid!r} has no voices")
        frames = np.concatenate([frame_matrix(v, config.frame_rate) for v in voices], axis=0)
        centroids[row] = frames.mean(axis=0)
    return SyntheticSrs(config, centroids, speaker_ids)


class _Template:
    """Running mean of the embeddings of the voices added so far."""

    def __init__(self, dim: int):
        self.total = np.zeros(dim)
        self.count = 0

    def add(self, embedding: Embedding):
        self.total = self.total + embedding.values
        self.count += 1

    @property
    def embedding(self) -> Embedding:
        if self.count == 0:
            raise TemplateError("template has no enrolled voices")
        return Embedding(self.total / self.count)


class BlackBoxSession:
    """Enroll/recognize access to an SRS, with exact query metering.

    Verification mode scores one template per recognition call; identification
    mode scores any number of templates in a single metered call.
    """

    def __init__(self, srs, mode: SrsAccessMode, ledger: QueryLedger | None = None):
        if mode is SrsAccessMode.WHITE_BOX:
            raise ModeError("white-box access exposes embed only, not enroll/recognize")
        self.srs = srs
        self.mode = mode
        self.ledger = ledger if ledger is not None else QueryLedger()
        self._templates: dict[int, _Template] = {}
        self._next_id = 0
        self._lock = threading.Lock()

    def enroll_create(self) -> int:
        with self._lock:
            template_id = self._next_id
            self._next_id += 1
            self._templates[template_id] = _Template(self.srs.config.dim)
        return template_id

    def enroll_add(self, template_id: int, voice: Voice):
        tpl = self._templates.get(template_id)
        if tpl is None:
            raise TemplateError(f"unknown template id {template_id}")
        tpl.add(self.srs.embed(voice))
        self.ledger.bump_enroll()

    def recognize(self, voice: Voice, template_ids: list[int]) -> list[float]:
        if not template_ids:
            raise TemplateError("recognize needs at least one template")
        if self.mode is SrsAccessMode.BLACK_BOX_VERIFICATION and len(template_ids) != 1:
            raise ModeError("verification mode scores exactly one template per query")
        for tid in template_ids:
            if tid not in self._templates:
                raise TemplateError(f"unknown template id {tid}")
        probe = self.srs.embed(voice).values
        probe = probe / np.linalg.norm(probe)
        scores = []
        for tid in template_ids:
            tpl = self._templates[tid].embedding.values
            scores.append(float(probe @ tpl / np.linalg.norm(tpl)))
        self.ledger.bump_recognize()
        return scores
