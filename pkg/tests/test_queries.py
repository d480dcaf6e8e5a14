import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srsaudit.core import Voice
from srsaudit.errors import DimensionMismatchError, EmptyInputError, PlanError
from srsaudit.features import FEATURE_NAMES, ImposterBank, compute_features, BlackBoxAccess, WhiteBoxAccess
from srsaudit.queries import (
    FEATURE_GROUPS,
    QueryCount,
    Technique,
    build_plan,
    concat_voices,
    execute_plan,
    predict_counts,
    white_box_count,
)
from srsaudit.srs import (
    FRAME_DIM,
    BlackBoxSession,
    QueryLedger,
    SrsAccessMode,
    SyntheticSrsConfig,
    synthetic_train,
)

from test_srs import make_voice

ALL_TECHNIQUES = [
    Technique(),
    Technique(concat=True),
    Technique(group=True),
    Technique(concat=True, group=True),
    Technique(concat=True, group=True, share=True),
]


def test_concat_singleton_passthrough():
    v = Voice("s", "v", np.array([0.1, 0.2]), 16000)
    assert concat_voices([v]) is v


def test_concat_two_voices():
    v1 = Voice("s", "a", np.full(16000, 0.1), 16000)
    v2 = Voice("s", "b", np.full(16000, 0.2), 16000)
    out = concat_voices([v1, v2])
    assert out.duration_ms == 2000
    assert np.array_equal(out.samples, np.concatenate([v1.samples, v2.samples]))


def test_concat_orders_by_voice_id():
    v1 = Voice("s", "b", np.array([1.0]), 16000)
    v2 = Voice("s", "a", np.array([2.0]), 16000)
    out = concat_voices([v1, v2])
    assert np.array_equal(out.samples, [2.0, 1.0])


def test_concat_mixed_rates():
    v1 = Voice("s", "a", np.array([1.0]), 16000)
    v2 = Voice("s", "b", np.array([2.0]), 8000)
    with pytest.raises(DimensionMismatchError):
        concat_voices([v1, v2])


def test_concat_empty():
    with pytest.raises(EmptyInputError):
        concat_voices([])


def test_headline_counts():
    baseline = predict_counts("voice_centroid", 10, 20, 10)
    assert (baseline.enrollment, baseline.recognition, baseline.total) == (200, 200, 400)
    reduced = predict_counts("voice_centroid", 10, 20, 10, Technique(concat=True, group=True))
    assert (reduced.enrollment, reduced.recognition, reduced.total) == (20, 10, 30)
    combined = predict_counts("all", 10, 20, 10, Technique(True, True, True))
    assert combined.total == 2 * 10 + 20 + 200 + 1 == 241


def test_pairwise_minimum():
    assert predict_counts("pairwise", 2, 1, 1) == QueryCount(1, 1)


def test_table_closed_forms():
    n, m, k = 7, 3, 4
    q = m * k
    cases = {
        ("centroid_based", Technique()): (n, n),
        ("centroid_based", Technique(concat=True)): (1, n),
        ("pairwise", Technique()): (n - 1, n * (n - 1) // 2),
        ("centroid_centroid", Technique()): (n, m),
        ("centroid_centroid", Technique(concat=True)): (1, m),
        ("centroid_voice", Technique()): (n, q),
        ("centroid_voice", Technique(concat=True)): (1, q),
        ("voice_centroid", Technique()): (q, n * m),
        ("voice_centroid", Technique(group=True)): (q, n),
        ("voice_centroid", Technique(concat=True)): (m, n * m),
        ("voice_centroid", Technique(concat=True, group=True)): (m, n),
        ("voice_voice", Technique()): (n, q * n),
        ("voice_voice", Technique(group=True)): (n, q),
    }
    for (group, technique), (enr, rec) in cases.items():
        assert predict_counts(group, n, m, k, technique) == QueryCount(enr, rec), group


def test_all_requires_all_techniques():
    with pytest.raises(PlanError):
        predict_counts("all", 5, 2, 2, Technique(concat=True, group=True))


def test_unknown_group():
    with pytest.raises(PlanError):
        predict_counts("nope", 2, 1, 1)


def test_invalid_shapes():
    with pytest.raises(PlanError):
        predict_counts("pairwise", 0, 1, 1)
    with pytest.raises(PlanError):
        predict_counts("pairwise", 2, 1, [1, 1])


@given(st.integers(2, 30), st.integers(1, 10),
       st.lists(st.integers(1, 8), min_size=1, max_size=10))
@settings(max_examples=200, deadline=None)
def test_counts_total_and_technique_monotonicity(n, m, k_list):
    k_list = (k_list * m)[:m]
    for group in FEATURE_GROUPS:
        base = predict_counts(group, n, m, k_list)
        assert base.total == base.enrollment + base.recognition
        for technique in ALL_TECHNIQUES:
            qc = predict_counts(group, n, m, k_list, technique)
            assert qc.enrollment <= base.enrollment
            assert qc.recognition <= base.recognition


def test_white_box_count():
    assert white_box_count(10, 200) == 210
    assert white_box_count(1, 1) == 2
    with pytest.raises(PlanError):
        white_box_count(0, 1)


def test_build_plan_rejects_white_box():
    with pytest.raises(PlanError):
        build_plan("pairwise", 3, 1, 1, Technique(), SrsAccessMode.WHITE_BOX)


def test_group_requires_identification():
    with pytest.raises(PlanError):
        build_plan("voice_centroid", 3, 2, 2, Technique(group=True),
                   SrsAccessMode.BLACK_BOX_VERIFICATION)


def black_box_setup(n=4, m=3, k=2, gamma=0.2, seed=0):
    rng = np.random.default_rng(seed)
    voices = [make_voice(rng.standard_normal((20, FRAME_DIM)),
                         speaker="tgt", voice=f"t{i:02d}") for i in range(n)]
    groups = [[make_voice(rng.standard_normal((20, FRAME_DIM)),
                          speaker=f"imp{j}", voice=f"i{j:02d}_{kk:02d}")
               for kk in range(k)] for j in range(m)]
    train = {f"trn{t}": [make_voice(rng.standard_normal((20, FRAME_DIM)),
                                    voice=f"trn{t}_v")] for t in range(3)}
    srs = synthetic_train(SyntheticSrsConfig(gamma=gamma, seed=seed), train)
    return srs, voices, ImposterBank(groups)


@pytest.mark.parametrize("group", FEATURE_GROUPS)
@pytest.mark.parametrize("technique", ALL_TECHNIQUES)
def test_executed_ledger_matches_prediction(group, technique):
    if technique.share and group != "all":
        technique = Technique(technique.concat, technique.group, False)
    mode = (SrsAccessMode.BLACK_BOX_IDENTIFICATION if technique.group
            else SrsAccessMode.BLACK_BOX_VERIFICATION)
    srs, voices, bank = black_box_setup()
    plan = build_plan(group, len(voices), bank.m, bank.group_sizes(), technique, mode)
    session = BlackBoxSession(srs, mode)
    execute_plan(plan, session, voices, bank)
    enrolls, recognizes, _ = session.ledger.counts()
    assert QueryCount(enrolls, recognizes) == plan.predicted


def test_all_plan_ledger():
    srs, voices, bank = black_box_setup(n=5, m=2, k=3)
    plan = build_plan("all", 5, 2, [3, 3], Technique(True, True, True),
                      SrsAccessMode.BLACK_BOX_IDENTIFICATION)
    session = BlackBoxSession(srs, SrsAccessMode.BLACK_BOX_IDENTIFICATION)
    tables = execute_plan(plan, session, voices, bank)
    enrolls, recognizes, _ = session.ledger.counts()
    assert (enrolls, recognizes) == (1 + 5, 5 + 2 + 6)
    assert tables.intra_centroid.shape == (5,)
    assert tables.vv.shape == (5, 6)


def test_group_on_off_scores_bit_identical():
    srs, voices, bank = black_box_setup()
    results = {}
    for group_on in (False, True):
        technique = Technique(group=group_on)
        session = BlackBoxSession(srs, SrsAccessMode.BLACK_BOX_IDENTIFICATION)
        plan = build_plan("voice_centroid", len(voices), bank.m, bank.group_sizes(),
                          technique, SrsAccessMode.BLACK_BOX_IDENTIFICATION)
        results[group_on] = execute_plan(plan, session, voices, bank)
    assert results[False] == results[True]


def test_group_on_off_feature_vector_bit_identical():
    srs, voices, bank = black_box_setup()
    vectors = {}
    for group_on in (False, True):
        session = BlackBoxSession(srs, SrsAccessMode.BLACK_BOX_IDENTIFICATION)
        access = BlackBoxAccess(session, Technique(group=group_on))
        vectors[group_on] = compute_features(voices, bank, access)
    assert np.array_equal(vectors[False], vectors[True])


def test_share_enrolls_target_template_once():
    # centroid-based + centroid-centroid + centroid-voice share one TGT
    # template under the combined schedule: 1 concat enrollment total
    srs, voices, bank = black_box_setup(n=3, m=2, k=2)
    plan = build_plan("all", 3, 2, [2, 2], Technique(True, True, True),
                      SrsAccessMode.BLACK_BOX_IDENTIFICATION)
    tgt_enrollments = [key for key, ref in plan.enrollments if key == "TGT"]
    assert len(tgt_enrollments) == 1


def test_execute_plan_mode_mismatch():
    srs, voices, bank = black_box_setup()
    plan = build_plan("pairwise", len(voices), bank.m, bank.group_sizes(),
                      Technique(), SrsAccessMode.BLACK_BOX_VERIFICATION)
    session = BlackBoxSession(srs, SrsAccessMode.BLACK_BOX_IDENTIFICATION)
    with pytest.raises(PlanError):
        execute_plan(plan, session, voices, bank)


def test_execute_plan_shape_mismatch():
    srs, voices, bank = black_box_setup()
    plan = build_plan("pairwise", 3, bank.m, bank.group_sizes(),
                      Technique(), SrsAccessMode.BLACK_BOX_VERIFICATION)
    session = BlackBoxSession(srs, SrsAccessMode.BLACK_BOX_VERIFICATION)
    with pytest.raises(PlanError):
        execute_plan(plan, session, voices, bank)


def test_white_box_ledger_matches_count():
    srs, voices, bank = black_box_setup()
    ledger = QueryLedger()
    access = WhiteBoxAccess(srs, ledger)
    compute_features(voices, bank, access)
    assert ledger.counts() == (0, 0, white_box_count(len(voices), bank.q))
