"""Black-box query planning: concatenation, group enrollment, template sharing.

Plans carry closed-form predicted query counts; executing a plan against an
SRS session yields a ledger equal to the prediction and every similarity
needed for the requested feature group.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Voice
from .errors import DimensionMismatchError, EmptyInputError, PlanError
from .features import ImposterBank, SimilarityTables
from .srs import SrsAccessMode

FEATURE_GROUPS = [
    "centroid_based", "pairwise",
    "centroid_centroid", "centroid_voice", "voice_centroid", "voice_voice",
]


@dataclass(frozen=True)
class Technique:
    concat: bool = False
    group: bool = False
    share: bool = False


@dataclass(frozen=True)
class QueryCount:
    enrollment: int
    recognition: int

    @property
    def total(self) -> int:
        return self.enrollment + self.recognition


def concat_voices(voices: list[Voice]) -> Voice:
    """Sample-wise concatenation in ascending voice_id order."""
    if not voices:
        raise EmptyInputError("cannot concatenate zero voices")
    rates = {v.sample_rate for v in voices}
    if len(rates) > 1:
        raise DimensionMismatchError(f"mixed sample rates {sorted(rates)}")
    ordered = sorted(voices, key=lambda v: v.voice_id)
    if len(ordered) == 1:
        return ordered[0]
    return Voice(
        speaker_id=ordered[0].speaker_id,
        voice_id="+".join(v.voice_id for v in ordered),
        samples=np.concatenate([v.samples for v in ordered]),
        sample_rate=ordered[0].sample_rate,
    )


def predict_counts(group: str, n: int, m: int, k, technique: Technique = Technique()) -> QueryCount:
    """Closed-form enrollment/recognition query counts for one feature group.

    Technique flags that do not apply to a group are no-ops, so enabling a
    flag never increases a count. The combined "all" schedule exists only
    with concatenation, group enrollment, and template sharing together.
    """
    k_list = [k] * m if isinstance(k, int) else list(k)
    if n < 1 or m < 1 or len(k_list) != m or any(kj < 1 for kj in k_list):
        raise PlanError("need N >= 1, M >= 1, and K_j >= 1 per imposter")
    q = sum(k_list)
    if group == "centroid_based":
        return QueryCount(1 if technique.concat else n, n)
    if group == "pairwise":
        return QueryCount(n - 1, n * (n - 1) // 2)
    if group == "centroid_centroid":
        return QueryCount(1 if technique.concat else n, m)
    if group == "centroid_voice":
        return QueryCount(1 if technique.concat else n, q)
    if group == "voice_centroid":
        return QueryCount(m if technique.concat else q, n if technique.group else n * m)
    if group == "voice_voice":
        return QueryCount(n, q if technique.group else q * n)
    if group == "all":
        if not (technique.concat and technique.group and technique.share):
            raise PlanError("the combined schedule requires concat+group+share")
        return QueryCount(1 + n, n + m + q)
    raise PlanError(f"unknown feature group {group!r}")


def white_box_count(n: int, q: int) -> int:
    """Embed queries needed to compute every feature white-box."""
    if n < 1 or q < 1:
        raise PlanError("need N >= 1 and Q >= 1")
    return n + q


# Voice references used in plan steps:
#   ("t", i) target voice, ("tc",) target concat,
#   ("im", j, k) imposter voice, ("imc", j) imposter concat.
@dataclass(frozen=True)
class Recognition:
    voice: tuple
    templates: tuple[str, ...]
    outputs: tuple  # one score key (or None) per template


@dataclass
class QueryPlan:
    group: str
    n: int
    m: int
    k_list: list[int]
    technique: Technique
    mode: SrsAccessMode
    enrollments: list[tuple[str, tuple]] = field(default_factory=list)  # (template key, voice ref)
    recognitions: list[Recognition] = field(default_factory=list)
    predicted: QueryCount | None = None


def _target_centroid_template(plan: QueryPlan):
    if plan.technique.concat:
        plan.enrollments.append(("TGT", ("tc",)))
    else:
        for i in range(plan.n):
            plan.enrollments.append(("TGT", ("t", i)))


def build_plan(group: str, n: int, m: int, k, technique: Technique,
               mode: SrsAccessMode) -> QueryPlan:
    """Ordered enroll/recognize schedule realizing the predicted counts."""
    if mode is SrsAccessMode.WHITE_BOX:
        raise PlanError("query plans apply to black-box modes only")
    if technique.group and mode is not SrsAccessMode.BLACK_BOX_IDENTIFICATION:
        raise PlanError("group enrollment requires identification mode")
    k_list = [k] * m if isinstance(k, int) else list(k)
    plan = QueryPlan(group, n, m, k_list, technique, mode,
                     predicted=predict_counts(group, n, m, k_list, technique))
    q_index = [(j, kk) for j in range(m) for kk in range(k_list[j])]

    if group == "centroid_based":
        _target_centroid_template(plan)
        for i in range(n):
            plan.recognitions.append(Recognition(("t", i), ("TGT",), (("c", i),)))
    elif group == "pairwise":
        for i in range(n - 1):
            plan.enrollments.append((f"TV{i}", ("t", i)))
        for i in range(n - 1):
            for j in range(i + 1, n):
                plan.recognitions.append(Recognition(("t", j), (f"TV{i}",), (("p", i, j),)))
    elif group == "centroid_centroid":
        _target_centroid_template(plan)
        for j in range(m):
            plan.recognitions.append(Recognition(("imc", j), ("TGT",), (("cc", j),)))
    elif group == "centroid_voice":
        _target_centroid_template(plan)
        for flat, (j, kk) in enumerate(q_index):
            plan.recognitions.append(Recognition(("im", j, kk), ("TGT",), (("cv", flat),)))
    elif group == "voice_centroid":
        for j in range(m):
            if technique.concat:
                plan.enrollments.append((f"IMP{j}", ("imc", j)))
            else:
                for kk in range(k_list[j]):
                    plan.enrollments.append((f"IMP{j}", ("im", j, kk)))
        imp_templates = tuple(f"IMP{j}" for j in range(m))
        for i in range(n):
            if technique.group:
                outputs = tuple(("vc", i, j) for j in range(m))
                plan.recognitions.append(Recognition(("t", i), imp_templates, outputs))
            else:
                for j in range(m):
                    plan.recognitions.append(Recognition(("t", i), (f"IMP{j}",), (("vc", i, j),)))
    elif group == "voice_voice":
        for i in range(n):
            plan.enrollments.append((f"TV{i}", ("t", i)))
        tv_templates = tuple(f"TV{i}" for i in range(n))
        for flat, (j, kk) in enumerate(q_index):
            if technique.group:
                outputs = tuple(("vv", i, flat) for i in range(n))
                plan.recognitions.append(Recognition(("im", j, kk), tv_templates, outputs))
            else:
                for i in range(n):
                    plan.recognitions.append(Recognition(("im", j, kk), (f"TV{i}",), (("vv", i, flat),)))
    elif group == "all":
        plan.enrollments.append(("TGT", ("tc",)))
        for i in range(n):
            plan.enrollments.append((f"TV{i}", ("t", i)))
        all_templates = ("TGT",) + tuple(f"TV{i}" for i in range(n))
        for i in range(n):
            outputs = (("c", i),) + tuple(
                ("p", min(i, j), max(i, j)) if j != i else None for j in range(n)
            )
            plan.recognitions.append(Recognition(("t", i), all_templates, outputs))
        for flat, (j, kk) in enumerate(q_index):
            outputs = (("cv", flat),) + tuple(("vv", i, flat) for i in range(n))
            plan.recognitions.append(Recognition(("im", j, kk), all_templates, outputs))
        for j in range(m):
            outputs = (("cc", j),) + tuple(("vc", i, j) for i in range(n))
            plan.recognitions.append(Recognition(("imc", j), all_templates, outputs))
    else:
        raise PlanError(f"unknown feature group {group!r}")
    return plan


def _resolve(ref: tuple, voices: list[Voice], bank: ImposterBank, cache: dict) -> Voice:
    if ref in cache:
        return cache[ref]
    if ref[0] == "t":
        voice = voices[ref[1]]
    elif ref[0] == "tc":
        voice = concat_voices(voices)
    elif ref[0] == "im":
        voice = bank.voices[ref[1]][ref[2]]
    else:
        voice = concat_voices(bank.voices[ref[1]])
    cache[ref] = voice
    return voice


def execute_plan(plan: QueryPlan, session, voices: list[Voice], bank: ImposterBank):
    """Run a plan against a session; returns scores keyed by (tag, indices).

    The session ledger advances by exactly the plan's predicted counts. For
    the combined "all" plan the result is assembled into SimilarityTables.
    """
    if session.mode is not plan.mode:
        raise PlanError(f"plan built for {plan.mode}, session is {session.mode}")
    if len(voices) != plan.n or bank.group_sizes() != plan.k_list:
        raise PlanError("plan shape does not match the provided voices")
    cache: dict = {}
    templates: dict[str, int] = {}
    for key, ref in plan.enrollments:
        if key not in templates:
            templates[key] = session.enroll_create()
        session.enroll_add(templates[key], _resolve(ref, voices, bank, cache))
    scores: dict[tuple, float] = {}
    for rec in plan.recognitions:
        probe = _resolve(rec.voice, voices, bank, cache)
        values = session.recognize(probe, [templates[t] for t in rec.templates])
        for out, value in zip(rec.outputs, values):
            if out is not None:
                scores[out] = value
    if plan.group == "all":
        return tables_from_scores(scores, plan.n, plan.m, plan.k_list)
    return scores


def tables_from_scores(scores: dict[tuple, float], n: int, m: int,
                       k_list: list[int]) -> SimilarityTables:
    """Assemble the similarity tables features are computed from."""
    q = sum(k_list)
    intra_centroid = np.array([scores[("c", i)] for i in range(n)])
    pairwise = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(i + 1, n):
            pairwise[i, j] = pairwise[j, i] = scores[("p", i, j)]
    cc = np.array([scores[("cc", j)] for j in range(m)])
    cv = np.array([scores[("cv", k)] for k in range(q)])
    vc = np.array([[scores[("vc", i, j)] for j in range(m)] for i in range(n)])
    vv = np.array([[scores[("vv", i, k)] for k in range(q)] for i in range(n)])
    return SimilarityTables(intra_centroid, pairwise, cc, cv, vc, vv, list(k_list))
