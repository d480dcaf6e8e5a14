"""Deterministic synthetic voice dataset.

Each speaker has a latent identity on the unit sphere of the frame space.
Each voice perturbs the identity with a per-voice offset (orthogonal to the
identity, so voice-to-voice norm stays stable) and per-frame gaussian noise,
then renders the frames into PCM through the fixed frame layout understood
by the synthetic SRS featurizer.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Voice, stable_seed
from .errors import ConfigError
from .srs import FRAME_DIM, FRAME_SCALE


@dataclass(frozen=True)
class SynthConfig:
    num_speakers: int = 50
    voices_per_speaker: tuple[int, int] = (8, 8)
    duration_s: tuple[float, float] = (6.4, 8.0)
    identity_dim: int = FRAME_DIM
    identity_bias: float = 2.5
    voice_sigma: float = 0.15
    frame_noise_sigma: float = 0.3
    sample_rate: int = 16000
    frame_rate: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.num_speakers < 10:
            raise ConfigError("need at least 10 speakers")
        lo, hi = self.voices_per_speaker
        if not (1 <= lo <= hi):
            raise ConfigError("invalid voices_per_speaker range")
        dlo, dhi = self.duration_s
        if not (0 < dlo <= dhi):
            raise ConfigError("invalid duration range")
        if self.identity_dim != FRAME_DIM:
            raise ConfigError(f"identity_dim must equal the frame dim ({FRAME_DIM})")
        if self.identity_bias < 0:
            raise ConfigError("identity_bias must be non-negative")


class SyntheticDataset:
    """Lazily materialized voices; every voice is reproducible in isolation."""

    def __init__(self, config: SynthConfig):
        self.config = config
        self._identities: dict[int, np.ndarray] = {}
        self._voice_counts = [
            int(np.random.default_rng(stable_seed(config.seed, "nv", i)).integers(
                config.voices_per_speaker[0], config.voices_per_speaker[1] + 1))
            for i in range(config.num_speakers)
        ]

    def speaker_ids(self) -> list[str]:
        return [f"spk{i:05d}" for i in range(self.config.num_speakers)]

    def voice_ids(self, speaker_id: str) -> list[str]:
        i = int(speaker_id[3:])
        return [f"{speaker_id}_v{k:03d}" for k in range(self._voice_counts[i])]

    def voices_by_speaker(self) -> dict[str, list[str]]:
        return {sid: self.voice_ids(sid) for sid in self.speaker_ids()}

    def _population_mean(self) -> np.ndarray:
        rng = np.random.default_rng(stable_seed(self.config.seed, "mu"))
        mu = rng.standard_normal(FRAME_DIM)
        return mu / np.linalg.norm(mu)

    def identity(self, speaker_index: int) -> np.ndarray:
        """Unit identity vector; the shared bias pulls speakers together so
        same/different-speaker scores overlap like they do for real voices."""
        cached = self._identities.get(speaker_index)
        if cached is not None:
            return cached
        rng = np.random.default_rng(stable_seed(self.config.seed, "id", speaker_index))
        ident = self.config.identity_bias * self._population_mean() + rng.standard_normal(FRAME_DIM)
        ident /= np.linalg.norm(ident)
        self._identities[speaker_index] = ident
        return ident

    def voice(self, voice_id: str) -> Voice:
        speaker_id, vtag = voice_id.rsplit("_v", 1)
        i, k = int(speaker_id[3:]), int(vtag)
        cfg = self.config
        rng = np.random.default_rng(stable_seed(cfg.seed, "voice", i, k))
        ident = self.identity(i)

        offset = cfg.voice_sigma * rng.standard_normal(FRAME_DIM)
        offset -= (offset @ ident) * ident
        latent = ident + offset

        duration = rng.uniform(*cfg.duration_s)
        n_frames = max(1, round(duration * cfg.frame_rate))
        frames = latent + cfg.frame_noise_sigma * rng.standard_normal((n_frames, FRAME_DIM))

        frame_len = round(cfg.sample_rate / cfg.frame_rate)
        samples = np.zeros((n_frames, frame_len))
        samples[:, :FRAME_DIM] = frames * FRAME_SCALE
        return Voice(
            speaker_id=speaker_id,
            voice_id=voice_id,
            samples=samples.reshape(-1),
            sample_rate=cfg.sample_rate,
        )

    def voices(self, speaker_id: str) -> list[Voice]:
        return [self.voice(v) for v in self.voice_ids(speaker_id)]
