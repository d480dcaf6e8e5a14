"""The 103 intra/inter membership features over similarity statistics.

All features are statistics (average, negative population standard deviation,
maximum, minimum) of similarity or distance sets built from a target
speaker's voices and an imposter bank. White-box and black-box access differ
only in how the underlying similarities are obtained.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .chunking import ChunkConfig, split
from .core import Embedding, Voice, centroid, cosine_similarity
from .errors import EmptyInputError, FeatureError, ModeError


class StatKind(enum.Enum):
    AVG = "avg"
    NEG_STD = "nstd"
    MAX = "max"
    MIN = "min"


def stat(values, kind: StatKind) -> float:
    """One summary statistic of a non-empty multiset of reals."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInputError("statistic of an empty set")
    if kind is StatKind.AVG:
        return float(arr.mean())
    if kind is StatKind.NEG_STD:
        return -float(arr.std())  # population std: defined (0) for singletons
    if kind is StatKind.MAX:
        return float(arr.max())
    return float(arr.min())


STATS = [StatKind.AVG, StatKind.NEG_STD, StatKind.MAX, StatKind.MIN]

# Set naming: i indexes target voices, j imposters, k individual imposter
# voices. "c" is a centroid side, "v" a single-voice side; a trailing
# i/j/k marks the per-element refinement axis.
INTRA_SETS = ["c", "p", "pi_avg", "pi_nstd", "pi_max", "pi_min"]
INTER_SETS = (
    ["cc", "cv"]
    + [f"cvj_{s.value}" for s in STATS]
    + ["vc"]
    + [f"vci_{s.value}" for s in STATS]
    + [f"vcj_{s.value}" for s in STATS]
    + ["vv"]
    + [f"vvi_{s.value}" for s in STATS]
    + [f"vvk_{s.value}" for s in STATS]
)

# Equivalent features dropped from the canonical list; the retained
# representative is the earlier one in canonical order.
_INTRA_DUPES = {"pi_avg_avg", "pi_max_max", "pi_min_min"}
_INTER_DUPES = {
    "cvj_max_max", "cvj_min_min",
    "vci_avg_avg", "vcj_avg_avg",
    "vci_max_max", "vcj_max_max",
    "vci_min_min", "vcj_min_min",
    "vvi_avg_avg", "vvk_avg_avg",
    "vvi_max_max", "vvk_max_max",
    "vvi_min_min", "vvk_min_min",
}


def _names() -> list[str]:
    names = []
    for set_name in INTRA_SETS:
        for s in STATS:
            if f"{set_name}_{s.value}" not in _INTRA_DUPES:
                names.append(f"intra_{set_name}_{s.value}")
    for set_name in INTER_SETS:
        for s in STATS:
            if f"{set_name}_{s.value}" not in _INTER_DUPES:
                names.append(f"inter_{set_name}_{s.value}")
    return names


FEATURE_NAMES: list[str] = _names()
NUM_FEATURES = len(FEATURE_NAMES)  # 21 intra + 82 inter = 103


@dataclass
class ImposterBank:
    """Voices of M adversary-controlled imposters, K_j voices each."""

    voices: list[list[Voice]]

    def __post_init__(self):
        if not self.voices or any(not group for group in self.voices):
            raise EmptyInputError("imposter bank needs M >= 1 imposters with >= 1 voice each")

    @property
    def m(self) -> int:
        return len(self.voices)

    @property
    def q(self) -> int:
        return sum(len(g) for g in self.voices)

    def group_sizes(self) -> list[int]:
        return [len(g) for g in self.voices]

    def flat(self) -> list[Voice]:
        return [v for group in self.voices for v in group]


@dataclass
class SimilarityTables:
    """Raw similarities every feature derives from.

    pairwise has NaN on the diagonal; vc and vv are (N, M) and (N, Q).
    """

    intra_centroid: np.ndarray  # (N,)   omega<v_i | v_1..v_N>
    pairwise: np.ndarray        # (N, N) omega<v_j | v_i>, symmetric
    cc: np.ndarray              # (M,)   omega<imposter_j voices | v_1..v_N>
    cv: np.ndarray              # (Q,)   omega<imposter voice | v_1..v_N>
    vc: np.ndarray              # (N, M) omega<v_i | imposter_j voices>
    vv: np.ndarray              # (N, Q) omega<v_i | imposter voice>
    group_sizes: list[int]


def omega(test_voices: list[Voice], enroll_voices: list[Voice], access) -> float:
    """Similarity between the centroid embeddings of two voice sets."""
    if not test_voices or not enroll_voices:
        raise EmptyInputError("omega needs non-empty voice sets")
    return access.omega(test_voices, enroll_voices)


class WhiteBoxAccess:
    """Computes omega from embeddings; caches one embedding per voice."""

    def __init__(self, srs, ledger=None):
        self.srs = srs
        self.ledger = ledger
        self._cache: dict[str, Embedding] = {}

    def embedding(self, voice: Voice) -> Embedding:
        cached = self._cache.get(voice.voice_id)
        if cached is None:
            cached = self.srs.embed(voice, ledger=self.ledger)
            self._cache[voice.voice_id] = cached
        return cached

    def omega(self, test_voices: list[Voice], enroll_voices: list[Voice]) -> float:
        test = centroid([self.embedding(v) for v in test_voices])
        enroll = centroid([self.embedding(v) for v in enroll_voices])
        return cosine_similarity(test, enroll)

    def tables(self, voices: list[Voice], bank: ImposterBank) -> SimilarityTables:
        # centroids average the raw embeddings (matching black-box templates);
        # normalization happens only when taking cosines
        raw = np.stack([self.embedding(v).values for v in voices])
        raw_imp = np.stack([self.embedding(v).values for v in bank.flat()])
        emb = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        imp = raw_imp / np.linalg.norm(raw_imp, axis=1, keepdims=True)
        n = len(voices)

        target_centroid = raw.mean(axis=0)
        target_centroid /= np.linalg.norm(target_centroid)
        intra_centroid = emb @ target_centroid

        pairwise = emb @ emb.T
        np.fill_diagonal(pairwise, np.nan)

        sizes = bank.group_sizes()
        starts = np.cumsum([0] + sizes)
        cc = np.empty(bank.m)
        vc = np.empty((n, bank.m))
        for j in range(bank.m):
            imp_centroid = raw_imp[starts[j] : starts[j + 1]].mean(axis=0)
            imp_centroid /= np.linalg.norm(imp_centroid)
            cc[j] = float(imp_centroid @ target_centroid)
            vc[:, j] = emb @ imp_centroid

        cv = imp @ target_centroid
        vv = emb @ imp.T
        return SimilarityTables(intra_centroid, pairwise, cc, cv, vc, vv, sizes)


class BlackBoxAccess:
    """Computes omega through enroll/recognize queries only.

    The technique flags control concatenation / group enrollment / template
    sharing; the default uses every technique the session mode allows.
    """

    def __init__(self, session, technique=None):
        from .queries import Technique
        from .srs import SrsAccessMode

        if technique is None:
            identification = session.mode is SrsAccessMode.BLACK_BOX_IDENTIFICATION
            technique = Technique(concat=True, group=identification, share=identification)
        self.session = session
        self.technique = technique

    def omega(self, test_voices: list[Voice], enroll_voices: list[Voice]) -> float:
        if len(test_voices) != 1:
            raise ModeError("black-box omega accepts exactly one test voice")
        tpl = self.session.enroll_create()
        for v in enroll_voices:
            self.session.enroll_add(tpl, v)
        return self.session.recognize(test_voices[0], [tpl])[0]

    def tables(self, voices: list[Voice], bank: ImposterBank) -> SimilarityTables:
        from .queries import FEATURE_GROUPS, build_plan, execute_plan, tables_from_scores

        n, m, k_list = len(voices), bank.m, bank.group_sizes()
        t = self.technique
        if t.concat and t.group and t.share:
            plan = build_plan("all", n, m, k_list, t, self.session.mode)
            return execute_plan(plan, self.session, voices, bank)
        scores: dict = {}
        for group in FEATURE_GROUPS:
            plan = build_plan(group, n, m, k_list, t, self.session.mode)
            scores.update(execute_plan(plan, self.session, voices, bank))
        return tables_from_scores(scores, n, m, k_list)


def intra_sets(tables: SimilarityTables) -> dict[str, np.ndarray]:
    """The six intra similarity sets; requires N >= 2."""
    n = tables.intra_centroid.size
    if n < 2:
        raise FeatureError("intra features require N >= 2 voices")
    pair_rows = [np.delete(tables.pairwise[i], i) for i in range(n)]
    iu = np.triu_indices(n, k=1)
    sets = {
        "c": tables.intra_centroid,
        "p": tables.pairwise[iu],
    }
    for s in STATS:
        sets[f"pi_{s.value}"] = np.array([stat(row, s) for row in pair_rows])
    return sets


def inter_sets(tables: SimilarityTables) -> dict[str, np.ndarray]:
    """The 24 inter distance sets (distances are negated similarities)."""
    sizes = tables.group_sizes
    starts = np.cumsum([0] + list(sizes))
    cv = -tables.cv
    vc = -tables.vc
    vv = -tables.vv
    sets = {"cc": -tables.cc, "cv": cv, "vc": vc.reshape(-1), "vv": vv.reshape(-1)}
    cv_groups = [cv[starts[j] : starts[j + 1]] for j in range(len(sizes))]
    for s in STATS:
        sets[f"cvj_{s.value}"] = np.array([stat(g, s) for g in cv_groups])
        sets[f"vci_{s.value}"] = np.array([stat(row, s) for row in vc])
        sets[f"vcj_{s.value}"] = np.array([stat(col, s) for col in vc.T])
        sets[f"vvi_{s.value}"] = np.array([stat(row, s) for row in vv])
        sets[f"vvk_{s.value}"] = np.array([stat(col, s) for col in vv.T])
    return sets


def features_from_tables(tables: SimilarityTables) -> np.ndarray:
    """All 103 features in canonical order."""
    sets = dict(intra_sets(tables))
    inter = inter_sets(tables)
    values = []
    for name in FEATURE_NAMES:
        prefix, rest = name.split("_", 1)
        set_name, stat_name = rest.rsplit("_", 1)
        source = sets if prefix == "intra" else inter
        values.append(stat(source[set_name], StatKind(stat_name)))
    out = np.array(values)
    if not np.all(np.isfinite(out)):
        raise FeatureError("non-finite feature value")
    return out


def apply_chunking(voices: list[Voice], bank: ImposterBank, chunk_config: ChunkConfig,
                   max_voices: int | None = None, max_imposter_voices: int | None = None):
    """Replace voices with their sliding-window chunks on both sides."""
    chunked = [c for v in voices for c in split(v, chunk_config)]
    if max_voices is not None:
        chunked = chunked[:max_voices]
    groups = []
    for group in bank.voices:
        g = [c for v in group for c in split(v, chunk_config)]
        if max_imposter_voices is not None:
            g = g[:max_imposter_voices]
        groups.append(g)
    return chunked, ImposterBank(groups)


def compute_features(voices: list[Voice], bank: ImposterBank, access,
                     chunk_config: ChunkConfig | None = None) -> np.ndarray:
    """Full 103-entry feature vector for one target speaker."""
    if chunk_config is not None:
        voices, bank = apply_chunking(voices, bank, chunk_config)
    if len(voices) < 2:
        raise FeatureError("need N >= 2 voices (after optional chunking)")
    return features_from_tables(access.tables(voices, bank))


class BaselineMode(enum.Enum):
    SORTED_PAIRWISE = "sorted_pairwise"
    RAW_CENTROID_SCORES = "raw_centroid_scores"
    CENTROID_PLUS_IMPOSTER_SCORES = "centroid_plus_imposter_scores"


def baseline_features(voices: list[Voice], bank: ImposterBank, access,
                      mode: BaselineMode) -> np.ndarray:
    """Raw-similarity-vector feature modes used by prior attacks."""
    tables = access.tables(voices, bank)
    n = tables.intra_centroid.size
    if mode is BaselineMode.SORTED_PAIRWISE:
        iu = np.triu_indices(n, k=1)
        return np.sort(tables.pairwise[iu])
    if mode is BaselineMode.RAW_CENTROID_SCORES:
        return np.array(tables.intra_centroid)
    return np.concatenate([tables.intra_centroid, (-tables.vc).reshape(-1)])


@dataclass
class FeatureRow:
    """One cached feature vector plus its provenance."""

    speaker_id: str
    features: np.ndarray
    label: int | None = None
    r: float | None = None
    n: int = 0
    m: int = 0
    q: int = 0
    chunked: bool = False
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "speaker_id": self.speaker_id,
            "label": self.label,
            "r": self.r,
            "N": self.n,
            "M": self.m,
            "Q": self.q,
            "chunked": self.chunked,
            "features": [float(x) for x in self.features],
        })

    @classmethod
    def from_json(cls, line: str) -> "FeatureRow":
        d = json.loads(line)
        return cls(
            speaker_id=d["speaker_id"],
            features=np.array(d["features"]),
            label=d.get("label"),
            r=d.get("r"),
            n=d.get("N", 0),
            m=d.get("M", 0),
            q=d.get("Q", 0),
            chunked=d.get("chunked", False),
        )


def write_feature_cache(path, rows: list[FeatureRow]):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(row.to_json() + "\n")


def read_feature_cache(path) -> list[FeatureRow]:
    with open(path) as fh:
        return [FeatureRow.from_json(line) for line in fh if line.strip()]
