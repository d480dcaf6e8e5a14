"""Sliding-window voice chunk splitting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Voice
from .errors import ConfigError, EmptyInputError


@dataclass(frozen=True)
class ChunkConfig:
    window_ms: float = 3200.0
    step_ms: float | None = None  # defaults to window_ms / 2
    min_fill: float = 0.7

    def __post_init__(self):
        step = self.step_ms if self.step_ms is not None else self.window_ms / 2
        if not 0 < step <= self.window_ms:
            raise ConfigError("need 0 < step_ms <= window_ms")
        if not 0 < self.min_fill <= 1:
            raise ConfigError("need 0 < min_fill <= 1")
        object.__setattr__(self, "step_ms", step)


def split(voice: Voice, config: ChunkConfig = ChunkConfig()) -> list[Voice]:
    """Split a voice into fixed-size overlapping chunks.

    Windows start at multiples of the step. A trailing window covering at
    least min_fill of the window size is zero-padded to full size; shorter
    remainders are dropped. A voice shorter than min_fill * window yields [].
    """
    if voice.samples.size == 0:
        raise EmptyInputError("cannot split an empty voice")
    window = round(config.window_ms * voice.sample_rate / 1000.0)
    step = round(config.step_ms * voice.sample_rate / 1000.0)
    min_len = config.min_fill * window
    total = voice.samples.size
    chunks: list[Voice] = []
    start = 0
    index = 0
    while start < total:
        covered = min(window, total - start)
        if covered < min_len:
            break
        samples = voice.samples[start : start + covered]
        if covered < window:
            samples = np.concatenate([samples, np.zeros(window - covered)])
        chunks.append(
            Voice(
                speaker_id=voice.speaker_id,
                voice_id=f"{voice.voice_id}#c{index:03d}",
                samples=samples,
                sample_rate=voice.sample_rate,
            )
        )
        start += step
        index += 1
    return chunks
