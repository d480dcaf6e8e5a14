import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srsaudit.core import (
    Embedding,
    PartitionLabel,
    Voice,
    VoiceRole,
    centroid,
    cosine_similarity,
    load_raw_voice,
    load_wav_voice,
    partition_dataset,
    partition_speakers,
    split_member_voices,
    stable_seed,
)
from srsaudit.errors import (
    DimensionMismatchError,
    EmptyInputError,
    PartitionError,
    ZeroNormError,
)


def emb(*values):
    return Embedding(np.array(values, dtype=np.float64))


def test_voice_rejects_empty_samples():
    with pytest.raises(EmptyInputError):
        Voice("s", "v", np.array([]), 16000)


def test_voice_rejects_bad_rate():
    with pytest.raises(EmptyInputError):
        Voice("s", "v", np.array([0.1]), 0)


def test_voice_duration():
    v = Voice("s", "v", np.zeros(8000), 16000)
    assert v.duration_ms == 500.0


def test_voice_samples_read_only():
    v = Voice("s", "v", np.zeros(10), 16000)
    with pytest.raises(ValueError):
        v.samples[0] = 1.0


def test_embedding_rejects_zero_norm():
    with pytest.raises(ZeroNormError):
        Embedding(np.zeros(4))


def test_embedding_rejects_nan():
    with pytest.raises(ZeroNormError):
        Embedding(np.array([1.0, np.nan]))


def test_cosine_identity():
    assert cosine_similarity(emb(3.0, 4.0), emb(3.0, 4.0)) == pytest.approx(1.0)


def test_cosine_orthogonal():
    assert cosine_similarity(emb(1.0, 0.0), emb(0.0, 1.0)) == 0.0


def test_cosine_antipodal():
    assert cosine_similarity(emb(1.0, 0.0), emb(-1.0, 0.0)) == -1.0


def test_cosine_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        cosine_similarity(emb(1.0, 0.0), emb(1.0, 0.0, 0.0))


@given(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3),
       st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3))
def test_cosine_bounds(a, b):
    try:
        value = cosine_similarity(emb(*a), emb(*b))
    except ZeroNormError:
        return
    assert -1.0 - 1e-12 <= value <= 1.0 + 1e-12


def test_centroid_singleton():
    assert np.array_equal(centroid([emb(1.0, 0.0)]).values, [1.0, 0.0])


def test_centroid_symmetry():
    c = centroid([emb(1.0, 0.0), emb(0.0, 1.0)])
    assert np.allclose(c.values, [0.5, 0.5])


def test_centroid_hand_mean():
    c = centroid([emb(2.0, 0.0), emb(0.0, 2.0), emb(1.0, 1.0)])
    assert np.allclose(c.values, [1.0, 1.0])


def test_centroid_empty():
    with pytest.raises(EmptyInputError):
        centroid([])


def test_centroid_of_copies_exact():
    base = [emb(0.3, -0.7, 1.1), emb(2.0, 0.1, -0.4)]
    assert np.array_equal(centroid(base * 3).values, centroid(base).values)


def test_partition_ten_speakers_equal_parts():
    labels = partition_speakers([f"s{i}" for i in range(10)], seed=0)
    sizes = sorted(
        sum(1 for l in labels.values() if l is part) for part in PartitionLabel
    )
    assert sizes == [2, 2, 2, 2, 2]


def test_partition_large_near_equal():
    labels = partition_speakers([f"s{i}" for i in range(6112)], seed=3)
    sizes = [sum(1 for l in labels.values() if l is part) for part in PartitionLabel]
    assert sum(sizes) == 6112
    assert max(sizes) - min(sizes) <= 1


def test_partition_seven_speakers_pigeonhole():
    labels = partition_speakers([f"s{i}" for i in range(7)], seed=1)
    sizes = sorted(
        sum(1 for l in labels.values() if l is part) for part in PartitionLabel
    )
    assert sizes == [1, 1, 1, 2, 2]


def test_partition_too_few():
    with pytest.raises(PartitionError):
        partition_speakers(["a", "b", "c"], seed=0)


def test_partition_duplicate_ids():
    with pytest.raises(PartitionError):
        partition_speakers(["a", "a", "b", "c", "d"], seed=0)


@given(st.integers(0, 2**31 - 1), st.integers(5, 40))
@settings(max_examples=30)
def test_partition_deterministic_and_order_independent(seed, n):
    speakers = [f"spk{i}" for i in range(n)]
    first = partition_speakers(speakers, seed)
    second = partition_speakers(list(reversed(speakers)), seed)
    assert first == second


def test_split_member_voices_sizes():
    train, held = split_member_voices([f"v{i}" for i in range(10)], seed=0)
    assert len(train) == 5 and len(held) == 5
    assert train | held == {f"v{i}" for i in range(10)}
    assert not train & held


def test_split_member_voices_odd():
    train, held = split_member_voices([f"v{i}" for i in range(9)], seed=0)
    assert sorted([len(train), len(held)]) == [4, 5]


def test_split_member_voices_minimum():
    train, held = split_member_voices(["a", "b"], seed=0)
    assert len(train) == 1 and len(held) == 1


def test_split_member_voices_too_few():
    with pytest.raises(PartitionError):
        split_member_voices(["only"], seed=0)


def test_stable_seed_deterministic():
    assert stable_seed(1, "x") == stable_seed(1, "x")
    assert stable_seed(1, "x") != stable_seed(1, "y")
    assert 0 <= stable_seed("anything") < 2**31


def test_partition_dataset_moves_small_speakers():
    voices = {f"s{i}": [f"s{i}_v{j}" for j in range(4)] for i in range(20)}
    # make a few speakers single-voice so they cannot be training members
    for sid in ("s0", "s7", "s13"):
        voices[sid] = [f"{sid}_v0"]
    part = partition_dataset(voices, seed=5)
    for sid in ("s0", "s7", "s13"):
        assert part.labels[sid] not in (
            PartitionLabel.SHADOW_TRAIN, PartitionLabel.TARGET_TRAIN)
        assert sid not in part.voice_roles
    for sid in part.speakers(PartitionLabel.SHADOW_TRAIN):
        roles = part.voice_roles[sid]
        counts = [sum(1 for r in roles.values() if r is role) for role in VoiceRole]
        assert abs(counts[0] - counts[1]) <= 1


def test_load_wav_roundtrip(tmp_path):
    import wave

    samples = (np.sin(np.linspace(0, 10, 1600)) * 0.5 * 32767).astype("<i2")
    path = tmp_path / "a.wav"
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(16000)
        w.writeframes(samples.tobytes())
    voice = load_wav_voice(path, "spk", "v0")
    assert voice.sample_rate == 16000
    assert voice.samples.size == 1600
    assert np.allclose(voice.samples, samples / 32768.0)


def test_load_raw_roundtrip(tmp_path):
    samples = np.linspace(-0.5, 0.5, 320).astype("<f4")
    path = tmp_path / "b.f32"
    samples.tofile(path)
    (tmp_path / "b.f32.json").write_text(json.dumps({
        "speaker_id": "spk", "voice_id": "v1",
        "sample_rate": 8000, "num_samples": 320,
    }))
    voice = load_raw_voice(path)
    assert voice.speaker_id == "spk"
    assert voice.sample_rate == 8000
    assert np.allclose(voice.samples, samples.astype(np.float64))


def test_load_raw_size_mismatch(tmp_path):
    np.zeros(10, dtype="<f4").tofile(tmp_path / "c.f32")
    (tmp_path / "c.f32.json").write_text(json.dumps({
        "speaker_id": "s", "voice_id": "v", "sample_rate": 8000, "num_samples": 11,
    }))
    with pytest.raises(EmptyInputError):
        load_raw_voice(tmp_path / "c.f32")
