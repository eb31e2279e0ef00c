import math

import numpy as np
import pytest

from streamscreen.engine import (
    METHODS,
    ScoreVector,
    Screener,
    ScreenerConfig,
    UniversalWeightMap,
    canonical_method,
    rank,
    select_top_k,
)
from streamscreen.exceptions import ConfigurationError, DegenerateScoreError, InvalidInputError

from conftest import feed, feed_sparse, make_dataset, max_rel_err


def test_method_aliases():
    assert canonical_method("MI") == "mutual_info"
    assert canonical_method("chi2") == "chi_square"
    assert canonical_method("t-score") == "t_score"
    with pytest.raises(ConfigurationError):
        canonical_method("relief")


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ScreenerConfig(epsilon=0)
    with pytest.raises(ConfigurationError):
        ScreenerConfig(k_bins=1)
    with pytest.raises(ConfigurationError):
        ScreenerConfig(alpha=1.5)
    with pytest.raises(ConfigurationError):
        ScreenerConfig(minibatch=0)
    assert ScreenerConfig(alpha=0.81, fading_period=2).decay == pytest.approx(0.9)
    assert ScreenerConfig().decay is None


def test_rank_orders():
    assert (rank(ScoreVector(np.array([0.1, 0.9, 0.5]), "mutual_info", True)).order + 1).tolist() == [2, 3, 1]
    assert (rank(ScoreVector(np.array([0.1, 0.9, 0.5]), "gini", False)).order + 1).tolist() == [1, 3, 2]
    assert rank(ScoreVector(np.ones(4), "chi_square", True)).order.tolist() == [0, 1, 2, 3]


def test_rank_puts_nan_last():
    r = rank(ScoreVector(np.array([np.nan, 0.2, 0.4]), "mutual_info", True))
    assert r.order.tolist() == [2, 1, 0]
    assert r.nan_features.tolist() == [0]
    assert r.rank_of.tolist() == [3, 2, 1]


def test_select_top_k():
    r = rank(ScoreVector(np.array([0.3, 0.1, 0.2]), "fisher", True))
    assert select_top_k(r, 1).tolist() == [0]
    assert sorted(select_top_k(r, 3).tolist()) == [0, 1, 2]
    with pytest.raises(InvalidInputError):
        select_top_k(r, 4)
    top = select_top_k(rank(ScoreVector(np.arange(25.0), "fisher", True)), math.ceil(0.1 * 25))
    assert top.tolist() == [24, 23, 22]


def test_universal_weight_map_recovery():
    m = UniversalWeightMap(0.5)
    m.update(0)
    snap, anchor = m.totals.copy(), m.t
    m.update(1)
    m.update(0)
    # Class 0 weight arriving after the anchor: only the newest sample.
    np.testing.assert_allclose(m.recovered(snap, anchor), [1.0, 0.5])


def test_fresh_engine_has_no_scores():
    with pytest.raises(DegenerateScoreError):
        Screener(method="mi").scores()


def test_single_class_is_degenerate():
    eng = Screener(method="fisher")
    eng.observe([1.0, 2.0], "a")
    with pytest.raises(DegenerateScoreError, match="two"):
        eng.scores()


def test_dense_sample_reaches_every_feature():
    eng = Screener(method="t_score", feature_count=3)
    eng.observe([1.0, 2.0, 3.0], 1)
    n, _, _ = eng._stats.moments()
    assert n.tolist() == [1.0]
    eng = Screener(method="mi", feature_count=3)
    eng.observe([1.0, 2.0, 3.0], 1)
    assert [sk.points_seen for sk in eng._sketches[0]] == [1, 1, 1]


def test_sparse_sample_touches_only_explicit_features():
    eng = Screener(method="mi", sparse=True, feature_count=5)
    eng.observe([(2, 0.5)], 1)
    assert [sk.points_seen for sk in eng._sketches[0]] == [0, 0, 1, 0, 0]
    assert eng._zero_weight(0, 0) == 1.0
    assert eng._zero_weight(2, 0) == 0.0


def test_separated_stream_gives_log2():
    eng = Screener(method="mi", k_bins=2, epsilon=0.001, feature_count=1)
    for v in range(1, 101):
        eng.observe([float(v)], 0 if v <= 50 else 1)
    assert eng.scores().scores[0] == pytest.approx(math.log(2))


def test_scores_are_repeatable():
    rng = np.random.default_rng(0)
    X, y = make_dataset(rng, 400, 6)
    for method in ("mi", "fisher"):
        eng = feed(Screener(method=method), X, y)
        a = eng.scores().scores.copy()
        b = eng.scores().scores
        assert a.tolist() == b.tolist()


def test_scoring_does_not_disturb_stream():
    rng = np.random.default_rng(1)
    X, y = make_dataset(rng, 600, 4)
    a = feed(Screener(method="gini", epsilon=0.01, alpha=0.99), X, y)
    b = Screener(method="gini", epsilon=0.01, alpha=0.99)
    feed(b, X[:300], y[:300])
    b.scores()
    feed(b, X[300:], y[300:])
    assert a.scores().scores.tolist() == b.scores().scores.tolist()


def test_other_method_of_same_family():
    rng = np.random.default_rng(2)
    X, y = make_dataset(rng, 300, 4)
    eng = feed(Screener(method="mi"), X, y)
    assert eng.scores("gini").method == "gini"
    with pytest.raises(ConfigurationError):
        eng.scores("fisher")


def test_t_score_rejects_third_label():
    eng = Screener(method="t_score")
    eng.observe([1.0], "a")
    eng.observe([2.0], "b")
    with pytest.raises(InvalidInputError):
        eng.observe([3.0], "c")


def test_batch_capacity():
    eng = Screener(method="fisher", minibatch=2)
    with pytest.raises(InvalidInputError):
        eng.observe_batch([([1.0], 0)] * 3)


def test_batch_of_one_equals_observe():
    rng = np.random.default_rng(3)
    X, y = make_dataset(rng, 200, 3)
    a = Screener(method="chi2", epsilon=0.01)
    b = Screener(method="chi2", epsilon=0.01)
    for x, c in zip(X, y.tolist()):
        a.observe(x, c)
        b.observe_batch([(x, c)])
    assert a.scores().scores.tolist() == b.scores().scores.tolist()


def test_batch_sizes_agree():
    rng = np.random.default_rng(4)
    X, y = make_dataset(rng, 1500, 5, rounding=1)
    ref = None
    for batch in (7, 250):
        eng = feed(Screener(method="mi", epsilon=0.01, minibatch=batch), X, y)
        s = eng.scores().scores
        ref = s if ref is None else ref
        assert s.tolist() == ref.tolist()


def test_dimension_checks():
    eng = Screener(method="fisher", feature_count=2)
    with pytest.raises(InvalidInputError):
        eng.observe([1.0, 2.0, 3.0], 0)
    with pytest.raises(InvalidInputError):
        eng.observe([1.0, float("nan")], 0)
    sp = Screener(method="mi", sparse=True, feature_count=2)
    with pytest.raises(InvalidInputError):
        sp.observe([(5, 1.0)], 0)
    with pytest.raises(InvalidInputError):
        sp.observe([(1, 1.0), (0, 2.0)], 0)


def test_sparse_feature_space_grows():
    eng = Screener(method="mi", sparse=True)
    eng.observe([(0, 1.0)], 0)
    eng.observe([(4, 2.0)], 1)
    eng.observe([(1, 3.0)], 0)
    assert eng.n_features == 5
    assert len(eng.scores()) == 5


@pytest.mark.parametrize("alpha", [None, 0.97])
@pytest.mark.parametrize("method", METHODS)
def test_sparse_matches_dense_replay(method, alpha):
    rng = np.random.default_rng(5)
    X, y = make_dataset(rng, 800, 6, zero_rate=0.6, rounding=2)
    dense = feed(Screener(method=method, alpha=alpha), X, y)
    sparse = feed_sparse(Screener(method=method, alpha=alpha, sparse=True), X, y)
    assert max_rel_err(dense.scores().scores, sparse.scores().scores) <= 1e-9


def test_snapshot_round_trip():
    rng = np.random.default_rng(6)
    X, y = make_dataset(rng, 500, 4)
    eng = feed(Screener(method="mi", epsilon=0.01, alpha=0.9), X[:250], y[:250])
    eng.scores()
    blob = eng.to_bytes()
    assert blob.startswith(b"STSCREEN")
    restored = Screener.from_bytes(blob)
    feed(eng, X[250:], y[250:])
    feed(restored, X[250:], y[250:])
    assert eng.scores().scores.tolist() == restored.scores().scores.tolist()
    for row_a, row_b in zip(eng._sketches, restored._sketches):
        assert [sk.dump() for sk in row_a] == [sk.dump() for sk in row_b]


def test_snapshot_rejects_garbage():
    with pytest.raises(InvalidInputError):
        Screener.from_bytes(b"nonsense")
    blob = bytearray(Screener(method="mi").to_bytes())
    blob[8] = 99
    with pytest.raises(InvalidInputError):
        Screener.from_bytes(bytes(blob))


def test_multiclass_fisher_and_bins():
    rng = np.random.default_rng(7)
    X, y = make_dataset(rng, 900, 5, n_classes=3)
    assert feed(Screener(method="fisher"), X, y).n_classes == 3
    tables = feed(Screener(method="mi"), X, y).bin_tables()
    assert tables.shape == (5, 5, 3)
    np.testing.assert_allclose(tables.sum(axis=(1, 2)), 900)
