import numpy as np
import pytest

from citegrowth.cluster import (Dendrogram, ClusterAssignment, ward_linkage,
                                inconsistency, cut_by_inconsistency,
                                cut_by_count)

from naive_ward import naive_ward


def test_two_points_merge_at_distance():
    x = np.array([[0.0, 0.0], [3.0, 0.0]])
    d = ward_linkage(x)
    left, right, h, size = d.merges[0]
    assert (left, right, size) == (0.0, 1.0, 2.0)
    assert h == pytest.approx(3.0, abs=1e-12)


def test_three_collinear_points():
    # {0, 1, 10}: first merge 0-1 at distance 1; then the pair joins 10
    # at sqrt(2 * (2*1/3) * 9.5^2) = 9.5 * sqrt(4/3)
    x = np.array([[0.0], [1.0], [10.0]])
    d = ward_linkage(x)
    assert d.children(0) == (0, 1)
    assert d.merges[0, 2] == pytest.approx(1.0, abs=1e-12)
    assert d.merges[1, 2] == pytest.approx(9.5 * np.sqrt(4.0 / 3.0), abs=1e-12)
    assert d.merges[1, 3] == 3


def test_matches_naive_oracle():
    gen = np.random.default_rng(0)
    for trial in range(20):
        n = int(gen.integers(3, 41))
        dim = int(gen.integers(1, 6))
        x = gen.normal(size=(n, dim))
        d = ward_linkage(x)
        ref = naive_ward(x)
        np.testing.assert_allclose(d.merges[:, 2], ref[:, 2], atol=1e-9, rtol=0)
        np.testing.assert_array_equal(d.merges[:, :2], ref[:, :2])
        np.testing.assert_array_equal(d.merges[:, 3], ref[:, 3])


def test_heights_monotone():
    gen = np.random.default_rng(1)
    for trial in range(10):
        x = gen.normal(size=(30, 4))
        h = ward_linkage(x).merges[:, 2]
        assert np.all(np.diff(h) >= -1e-12)


def test_deterministic_tie_break():
    # unit square: both diagonal pairings tie; lowest ids must win
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    d1 = ward_linkage(x)
    d2 = ward_linkage(x)
    np.testing.assert_array_equal(d1.merges, d2.merges)
    assert d1.children(0) == (0, 1)


def test_normalize_flag():
    x = np.array([[1.0, 0.0], [10.0, 0.0], [0.0, 1.0]])
    d = ward_linkage(x, normalize=True)
    # after normalization the two x-axis points coincide
    assert d.children(0) == (0, 1)
    assert d.merges[0, 2] == pytest.approx(0.0, abs=1e-12)


def test_leaves_under():
    x = np.array([[0.0], [0.1], [5.0], [5.1]])
    d = ward_linkage(x)
    root = 2 * 4 - 2
    assert d.leaves_under(root) == [0, 1, 2, 3]
    assert d.leaves_under(1) == [1]


def test_dendrogram_round_trip(tmp_path):
    x = np.random.default_rng(2).normal(size=(12, 3))
    d = ward_linkage(x)
    path = tmp_path / "dend.txt"
    d.save(path)
    d2 = Dendrogram.load(path)
    np.testing.assert_allclose(d2.merges, d.merges, rtol=0, atol=1e-15)
    assert d2.n_leaves == 12


# --- inconsistency ---------------------------------------------------------


def _chain_dendrogram(heights):
    """Caterpillar tree: leaf i+1 joins the cluster of 0..i at heights[i]."""
    n = len(heights) + 1
    merges = []
    cur = 0
    for i, h in enumerate(heights):
        merges.append([cur, i + 1, h, i + 2])
        cur = n + i
    return Dendrogram(np.array(merges, dtype=np.float64), n_leaves=n)


def test_inconsistency_two_link_window():
    # window = {own height, single child height}: the standardized score
    # of the larger of two values is always 1/sqrt(2)
    d = _chain_dendrogram([1.0, 2.0])
    inc = inconsistency(d, depth=2)
    assert inc[0] == 0.0  # both children are leaves
    assert inc[1] == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-12)


def test_inconsistency_depth_three_window():
    d = _chain_dendrogram([1.0, 2.0, 6.0])
    inc = inconsistency(d, depth=3)
    w = np.array([6.0, 2.0, 1.0])
    expected = (6.0 - w.mean()) / w.std(ddof=1)
    assert inc[2] == pytest.approx(expected, abs=1e-12)
    # depth 2 ignores the grandchild
    inc2 = inconsistency(d, depth=2)
    w2 = np.array([6.0, 2.0])
    assert inc2[2] == pytest.approx((6.0 - w2.mean()) / w2.std(ddof=1), abs=1e-12)


def test_inconsistency_equal_heights_zero():
    d = _chain_dendrogram([2.0, 2.0, 2.0])
    assert np.all(inconsistency(d, depth=2) == 0.0)


def test_inconsistency_depth_validation():
    d = _chain_dendrogram([1.0, 2.0])
    with pytest.raises(ValueError):
        inconsistency(d, depth=0)


def test_six_leaf_fixture_enumeration():
    # two tight triples far apart; the bridge merge is the only
    # inconsistent one, so a low threshold recovers the two triples
    x = np.array([[0.0], [0.1], [0.2], [50.0], [50.1], [50.2]])
    d = ward_linkage(x)
    inc = inconsistency(d, depth=3)
    assert np.argmax(inc) == 4  # the final bridge merge
    a = cut_by_inconsistency(d, 0.5, depth=3)
    assert a.k == 2
    assert len(set(a.labels[:3])) == 1 and len(set(a.labels[3:])) == 1


def test_cut_fraction_one_single_cluster():
    x = np.random.default_rng(3).normal(size=(15, 2))
    d = ward_linkage(x)
    a = cut_by_inconsistency(d, 1.0)
    assert a.k == 1


def test_cut_nesting_property():
    gen = np.random.default_rng(4)
    for trial in range(5):
        x = gen.normal(size=(25, 3))
        d = ward_linkage(x)
        ks = [cut_by_inconsistency(d, f, depth=3).k
              for f in (0.2, 0.4, 0.6, 0.8, 1.0)]
        assert all(a >= b for a, b in zip(ks, ks[1:]))


def test_cut_by_count():
    x = np.array([[0.0], [0.1], [5.0], [5.1], [20.0]])
    d = ward_linkage(x)
    a = cut_by_count(d, 3)
    assert a.k == 3
    assert a.labels[0] == a.labels[1]
    assert a.labels[2] == a.labels[3]
    assert a.labels[4] not in (a.labels[0], a.labels[2])
    assert cut_by_count(d, 1).k == 1
    assert cut_by_count(d, 5).k == 5
    with pytest.raises(ValueError):
        cut_by_count(d, 6)


def test_assignment_contiguous_validation():
    with pytest.raises(ValueError):
        ClusterAssignment(np.array([0, 2]), k=2)
    a = ClusterAssignment(np.array([1, 0, 1]), k=2)
    assert a.k == 2


def test_assignment_save(tmp_path):
    a = ClusterAssignment(np.array([0, 1, 0]), k=2)
    path = tmp_path / "assign.csv"
    a.save(path, node_labels=["x", "y", "z"])
    text = path.read_text().splitlines()
    assert text[0] == "label,cluster"
    assert text[1] == "x,0"
