import numpy as np
import pytest

from mlgcn.graph import MultiLabelGraph, one_hot_features, validate_graph
from mlgcn.matrices import SparseMatrix


def make_graph(a, b, n=None, m=None):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = n if n is not None else a.shape[0]
    m = m if m is not None else b.shape[1]
    d = n + m
    return MultiLabelGraph(
        node_count=n, label_count=m,
        adjacency=SparseMatrix.from_dense(a),
        label_assignments=SparseMatrix.from_dense(b),
        node_features=one_hot_features(n, d, 0),
        label_features=one_hot_features(m, d, n),
        node_ids=tuple(str(i) for i in range(n)),
        label_ids=tuple(f"L{r}" for r in range(m)))


class TestOneHotFeatures:
    def test_identity_slice(self):
        f = one_hot_features(3, 5, 0)
        assert np.array_equal(f, [[1, 0, 0, 0, 0], [0, 1, 0, 0, 0], [0, 0, 1, 0, 0]])

    def test_shifted_slice(self):
        f = one_hot_features(2, 5, 3)
        assert np.array_equal(f, [[0, 0, 0, 1, 0], [0, 0, 0, 0, 1]])

    def test_overflow(self):
        with pytest.raises(ValueError, match="feature offset out of range"):
            one_hot_features(4, 3, 0)

    def test_each_row_single_one(self):
        f = one_hot_features(7, 10, 2)
        assert np.array_equal(f.sum(axis=1), np.ones(7))
        assert set(np.unique(f)) <= {0.0, 1.0}


class TestValidateGraph:
    def test_minimal_valid_graph(self):
        g = make_graph([[0, 1], [1, 0]], [[1, 0], [0, 1]])
        assert validate_graph(g) == []

    def test_asymmetric_edge(self):
        a = SparseMatrix.from_coo(2, 2, [0], [1], [1.0])
        g = MultiLabelGraph(2, 2, a,
                            SparseMatrix.from_dense(np.eye(2)),
                            one_hot_features(2, 4, 0), one_hot_features(2, 4, 2),
                            ("0", "1"), ("L0", "L1"))
        report = validate_graph(g)
        assert any("asymmetric edge (0,1)" in v for v in report)

    def test_orphan_label(self):
        g = make_graph([[0, 1], [1, 0]], [[1, 1, 0], [0, 1, 0]])
        report = validate_graph(g)
        assert any("orphan label 2" in v for v in report)

    def test_self_loop_detected(self):
        g = make_graph([[1.0, 0], [0, 0]], [[1, 0], [0, 1]])
        assert any("self-loop at node 0" in v for v in validate_graph(g))

    def test_nonpositive_weight_detected(self):
        a = SparseMatrix.from_coo(2, 2, [0, 1], [1, 0], [-1.0, -1.0])
        g = MultiLabelGraph(2, 1, a,
                            SparseMatrix.from_dense(np.ones((2, 1))),
                            one_hot_features(2, 3, 0), one_hot_features(1, 3, 2),
                            ("0", "1"), ("L0",))
        assert any("nonpositive weight" in v for v in validate_graph(g))

    def test_non_binary_label_entries(self):
        b = SparseMatrix.from_coo(2, 2, [0, 1], [0, 1], [1.0, 0.5])
        g = MultiLabelGraph(2, 2, SparseMatrix.from_dense(np.array([[0., 1.], [1., 0.]])),
                            b, one_hot_features(2, 4, 0), one_hot_features(2, 4, 2),
                            ("0", "1"), ("L0", "L1"))
        assert any("non-binary label entry (1, 1)" in v for v in validate_graph(g))

    def test_feature_dim_mismatch(self):
        g = MultiLabelGraph(2, 2,
                            SparseMatrix.from_dense(np.array([[0., 1.], [1., 0.]])),
                            SparseMatrix.from_dense(np.eye(2)),
                            one_hot_features(2, 4, 0), one_hot_features(2, 5, 2),
                            ("0", "1"), ("L0", "L1"))
        assert any("feature dimension mismatch" in v for v in validate_graph(g))
