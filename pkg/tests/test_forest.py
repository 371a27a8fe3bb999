import numpy as np
import pytest

import oracles
from preambledet.channel_sim import ScenarioConfig
from preambledet.dataset import build_dataset
from preambledet.forest import (
    TIE_TOL,
    ForestModel,
    Tree,
    _Tables,
    best_split,
    entropy,
    forest_votes,
    grow_tree,
    information_gain,
    load_forest,
    predict_forest,
    save_forest,
    train_forest,
)
from preambledet.kernels import BACKENDS, DEFAULT_BACKEND, get_best_split

backends = pytest.mark.parametrize("backend", sorted(BACKENDS))
needs_ext = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")


def test_entropy_examples():
    assert entropy([8, 8]) == 1.0
    assert entropy([16, 0]) == 0.0
    assert entropy([3, 5, 7, 9]) == pytest.approx(1.8955734405551428, rel=1e-12)
    with pytest.raises(ValueError):
        entropy([0, 0])


def test_entropy_against_reference():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        c = rng.integers(0, 50, size=int(rng.integers(2, 7)))
        if c.sum() == 0:
            c[0] = 1
        assert entropy(c) == pytest.approx(oracles.entropy_bits(c), abs=1e-12)


def test_information_gain_examples():
    assert information_gain([8, 8], [8, 0], [0, 8]) == 1.0
    assert information_gain([8, 8], [4, 4], [4, 4]) == 0.0
    with pytest.raises(ValueError):
        information_gain([8, 8], [8, 8], [0, 0])
    with pytest.raises(ValueError):
        information_gain([8, 8], [3, 0], [4, 8])


def test_information_gain_bounds():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        left = rng.integers(0, 20, 4)
        right = rng.integers(0, 20, 4)
        if left.sum() == 0 or right.sum() == 0:
            continue
        parent = left + right
        ig = information_gain(parent, left, right)
        assert -1e-12 <= ig <= entropy(parent) + 1e-12
        y = np.repeat(np.arange(4), parent)
        yl = np.repeat(np.arange(4), left)
        yr = np.repeat(np.arange(4), right)
        assert ig == pytest.approx(oracles.gain_from_labels(y, yl, yr, 4), abs=1e-12)


@backends
def test_simple_split(backend):
    X = np.array([[0.0], [1.0]])
    assert best_split(X, [0, 1], [0, 1], [0], 2, backend=backend) == (0, 0.5, 1.0)


@backends
def test_identical_features_give_no_split(backend):
    X = np.ones((6, 3))
    assert best_split(X, [0, 1, 0, 1, 0, 1], np.arange(6), [0, 1, 2], 2, backend=backend) is None


@backends
def test_split_matches_enumeration(backend):
    rng = np.random.default_rng(2)
    for _ in range(200):
        X = rng.normal(size=(20, 5))
        y = rng.integers(0, 3, 20)
        feats = np.sort(rng.choice(5, 3, replace=False))
        got = best_split(X, y, np.arange(20), feats, 3, backend=backend)
        want = oracles.best_split(X, y, feats, 3)
        assert got[:2] == want[:2]
        assert got[2] == pytest.approx(want[2], abs=1e-12)


@backends
def test_split_respects_index_subset(backend):
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 4))
    y = rng.integers(0, 2, 40)
    idx = np.sort(rng.choice(40, 15, replace=False))
    got = best_split(X, y, idx, [0, 1, 2, 3], 2, backend=backend)
    want = oracles.best_split(X[idx], y[idx], [0, 1, 2, 3], 2)
    assert got[:2] == want[:2]


@backends
def test_single_tree_matches_recursive_reference(backend):
    rng = np.random.default_rng(4)
    for trial in range(30):
        X = np.round(rng.normal(size=(30, 17)), 1)
        y = rng.integers(0, 3, 30)
        tree = grow_tree(X, y, 3, np.random.default_rng(trial), features_per_split=17, backend=backend)
        assert tree.to_dict(range(3)) == oracles.grow_tree(X, y, 3, 0.01)


def _weak_split_data():
    # best available gain is about 0.00855 bits
    X = np.zeros((12, 3))
    X[3:, 0] = 1.0
    y = np.array([0, 1, 1] + [0, 0] + [1] * 7)
    return X, y


def test_gain_below_threshold_makes_leaf():
    X, y = _weak_split_data()
    assert best_split(X, y, np.arange(12), [0, 1, 2], 2)[2] == pytest.approx(0.008550786064045246, rel=1e-9)
    tree = grow_tree(X, y, 2, np.random.default_rng(0), features_per_split=3)
    assert tree.node_count == 1 and tree.label[0] == 1
    tree = grow_tree(X, y, 2, np.random.default_rng(0), features_per_split=3, min_ig=0.008)
    assert tree.node_count == 3


def test_pure_node_is_leaf():
    X = np.random.default_rng(0).normal(size=(10, 17))
    tree = grow_tree(X, np.ones(10, int), 2, np.random.default_rng(0))
    assert tree.node_count == 1 and tree.label[0] == 1


@needs_ext
def test_backends_agree_bit_for_bit():
    ds = build_dataset(ScenarioConfig("interference", 3, seed=8), "interf4", 1500)
    py = get_best_split("python")
    cy = get_best_split("cython")
    rng = np.random.default_rng(5)
    tables = _Tables(len(ds))
    for _ in range(100):
        idx = np.sort(rng.choice(len(ds), int(rng.integers(2, len(ds))), replace=False)).astype(np.intp)
        feats = np.sort(rng.choice(17, 4, replace=False)).astype(np.intp)
        args = (ds.X, ds.y.astype(np.intp), idx, feats, 4, tables.clogc, tables.log2n, TIE_TOL)
        assert py(*args) == cy(*args)
    a = train_forest(ds, seed=3, n_trees=3, backend="python")
    b = train_forest(ds, seed=3, n_trees=3, backend="cython")
    for ta, tb in zip(a.trees, b.trees):
        assert ta.to_dict(a.labels) == tb.to_dict(b.labels)


@needs_ext
def test_backends_agree_on_heavily_tied_values():
    rng = np.random.default_rng(6)
    for n in (2, 17, 40, 500, 3000):
        X = rng.integers(-2, 3, size=(n, 5)).astype(float)
        y = rng.integers(0, 3, n).astype(np.intp)
        idx = np.arange(n, dtype=np.intp)
        feats = np.arange(5, dtype=np.intp)
        t = _Tables(n)
        args = (X, y, idx, feats, 3, t.clogc, t.log2n, TIE_TOL)
        assert get_best_split("python")(*args) == get_best_split("cython")(*args)
        want = oracles.best_split(X, y, range(5), 3) if n <= 500 else None
        if want is not None:
            assert best_split(X, y, idx, feats, 3, backend="cython")[:2] == want[:2]


def test_default_backend_prefers_extension():
    assert DEFAULT_BACKEND == ("cython" if "cython" in BACKENDS else "python")
    with pytest.raises(ValueError):
        get_best_split("fortran")


def _leaf(label):
    return Tree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), np.array([label]))


def test_vote_rules():
    x = np.zeros(17)
    m = ForestModel([_leaf(0)] * 60 + [_leaf(1)] * 40, ("np", "p"))
    assert predict_forest(m, x) == 0
    m = ForestModel([_leaf(0)] * 50 + [_leaf(1)] * 50, ("np", "p"))
    assert predict_forest(m, x) == 0
    m = ForestModel([_leaf(1)] * 100, ("np", "p"))
    assert predict_forest(m, x) == 1
    assert forest_votes(m, np.zeros((3, 17))).tolist() == [[0, 100]] * 3


@pytest.fixture(scope="module")
def small_forest():
    ds = build_dataset(ScenarioConfig("awgn", 3, seed=6), "awgn6", 1000)
    return ds, train_forest(ds, seed=11, n_trees=10)


def test_every_sample_reaches_a_leaf(small_forest):
    ds, model = small_forest
    for tree in model.trees:
        leaves = tree.apply(ds.X)
        assert np.all(tree.feature[leaves] == -1)


def test_accepted_splits_have_valid_gain(small_forest):
    ds, model = small_forest
    rng_rows = [np.random.default_rng([11, t]).integers(0, len(ds), len(ds)) for t in range(len(model.trees))]
    for tree, rows in zip(model.trees, rng_rows):
        X, y = ds.X[rows], ds.y[rows]
        stack = [(0, np.arange(len(y)))]
        while stack:
            node, idx = stack.pop()
            if tree.feature[node] < 0:
                continue
            m = X[idx, tree.feature[node]] <= tree.threshold[node]
            parent = np.bincount(y[idx], minlength=6)
            ig = information_gain(parent, np.bincount(y[idx[m]], minlength=6), np.bincount(y[idx[~m]], minlength=6))
            assert 0.01 <= ig <= entropy(parent) + 1e-12
            stack += [(tree.left[node], idx[m]), (tree.right[node], idx[~m])]


def test_routing_changes_only_at_nodes_testing_the_feature(small_forest):
    ds, model = small_forest
    rng = np.random.default_rng(7)
    for tree in model.trees:
        for _ in range(50):
            x = ds.X[rng.integers(len(ds))].copy()
            f = int(rng.integers(17))
            x2 = x.copy()
            x2[f] += abs(rng.normal()) * 3
            a = b = 0
            while tree.feature[a] >= 0 and a == b:
                fa = tree.feature[a]
                na = tree.left[a] if x[fa] <= tree.threshold[a] else tree.right[a]
                nb = tree.left[b] if x2[fa] <= tree.threshold[b] else tree.right[b]
                if na != nb:
                    assert fa == f
                    # larger value can only move right
                    assert nb == tree.right[b]
                a, b = na, nb


def test_forest_determinism_and_size():
    ds = build_dataset(ScenarioConfig("awgn", 0, seed=6), "binary", 400)
    a = train_forest(ds, seed=2)
    b = train_forest(ds, seed=2)
    assert len(a.trees) == 100
    assert [t.to_dict(a.labels) for t in a.trees] == [t.to_dict(b.labels) for t in b.trees]


def test_forest_round_trip(small_forest, tmp_path):
    ds, model = small_forest
    save_forest(model, tmp_path / "f.json")
    back = load_forest(tmp_path / "f.json")
    assert back.labels == model.labels
    np.testing.assert_array_equal(forest_votes(back, ds.X), forest_votes(model, ds.X))
    assert [t.depth() for t in back.trees] == [s["depth"] for s in model.stats()]
