from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from redraw.metrics import (
    ConfusionCounts,
    algebraic_connectivity,
    confusion,
    evaluate,
    is_weakly_connected,
    jacobi_eigenvalues,
    laplacian,
    report,
)
from redraw.model import InfluenceMatrix, NetworkSpec, ValidationError
from redraw.topologies import chain, from_edges


def _confusion_oracle(truth, inferred):
    n = len(truth)
    tp = fp = tn = fn = 0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, r = truth[i][j] > 0, inferred[i][j] > 0
            tp += a and r
            fp += r and not a
            tn += not a and not r
            fn += a and not r
    return tp, fp, tn, fn


@st.composite
def supports(draw, min_n=2, max_n=8):
    n = draw(st.integers(min_n, max_n))
    s = draw(arrays(np.bool_, (n, n)))
    np.fill_diagonal(s, False)
    return s.astype(np.float64)


def test_perfect_recovery():
    spec = chain(4)
    c = confusion(spec, InfluenceMatrix(spec.weights / 2))
    assert c.fp == c.fn == 0
    rep = report(c)
    assert rep.values() == (100.0, 100.0, 100.0, 0.0)


def test_null_predictor():
    spec = chain(5)
    c = confusion(spec, np.zeros((5, 5)))
    assert c.fn == spec.edge_count and c.tn == 20 - spec.edge_count
    rep = report(c)
    assert rep.ppv is None and "ppv" in rep.missing
    assert rep.tpr == 0.0


def test_confusion_matches_entry_scan(rng):
    for _ in range(100):
        t = (rng.random((5, 5)) < 0.4) * rng.uniform(0.1, 2, (5, 5))
        np.fill_diagonal(t, 0)
        r = (rng.random((5, 5)) < 0.4) * rng.uniform(0.01, 1, (5, 5))
        np.fill_diagonal(r, 0)
        c = confusion(NetworkSpec(t), InfluenceMatrix(r))
        assert (c.tp, c.fp, c.tn, c.fn) == _confusion_oracle(t, r)


def test_confusion_dimension_mismatch():
    with pytest.raises(ValidationError, match="dimension mismatch"):
        confusion(chain(4), np.zeros((3, 3)))


def test_hand_computed_report():
    rep = report(ConfusionCounts(tp=2, fp=2, tn=8, fn=0, n=4))
    assert rep.ppv == 50.0
    assert rep.acc == pytest.approx(100 * 10 / 12)
    assert rep.tpr == 100.0
    assert rep.fpr == 20.0


def test_counts_must_partition_pairs():
    with pytest.raises(ValidationError):
        ConfusionCounts(tp=1, fp=1, tn=1, fn=1, n=4)


# Reference score rows, rebuilt from confusion counts consistent with them.

def test_geometric_hub_row():
    # 17 nodes, 32 true links.  These counts are the only ones matching the
    # published PPV, ACC and TPR; they give FPR = 1/240, i.e. 0.42 %.
    rep = report(ConfusionCounts(tp=31, fp=1, tn=239, fn=1, n=17))
    assert round(rep.ppv, 1) == 96.9
    assert round(rep.acc, 1) == 99.3
    assert round(rep.tpr, 1) == 96.9
    assert round(rep.fpr, 2) == 0.42


def test_ravasz_barabasi_row():
    rep = report(ConfusionCounts(tp=38, fp=6, tn=226, fn=2, n=17))
    assert (round(rep.ppv, 1), round(rep.acc, 1), round(rep.tpr, 1), round(rep.fpr, 1)) == (86.4, 97.1, 95.0, 2.6)


def test_regular_ring_row():
    rep = report(ConfusionCounts(tp=39, fp=0, tn=340, fn=1, n=20))
    assert (rep.ppv, round(rep.acc, 1), rep.tpr, rep.fpr) == (100.0, 99.7, 97.5, 0.0)


def test_rewired_ring_row():
    rep = report(ConfusionCounts(tp=30, fp=15, tn=320, fn=15, n=20))
    assert round(rep.acc, 1) == 92.1
    assert rep.fpr == pytest.approx(4.5, abs=0.05)


def test_complete_truth_has_absent_fpr():
    w = np.ones((3, 3)) - np.eye(3)
    rep = evaluate(NetworkSpec(w), InfluenceMatrix(w * 0.5))
    assert rep.fpr is None and rep.missing["fpr"]


@given(supports(), supports())
def test_counts_partition_total(t, r):
    if t.shape != r.shape:
        return
    c = confusion(NetworkSpec(t), r)
    assert c.tp + c.fp + c.tn + c.fn == t.shape[0] * (t.shape[0] - 1)


@given(supports(min_n=3), st.randoms(use_true_random=False), st.integers(0, 2**32 - 1))
def test_report_is_permutation_invariant(t, rnd, seed):
    n = t.shape[0]
    r = np.random.default_rng(seed).random((n, n)) < 0.3
    np.fill_diagonal(r, False)
    perm = list(range(n))
    rnd.shuffle(perm)
    p = np.ix_(perm, perm)
    a = evaluate(NetworkSpec(t), r.astype(float))
    b = evaluate(NetworkSpec(t[p]), r[p].astype(float))
    assert a == b


# -- spectral connectivity --------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_complete_graph_connectivity(n):
    w = np.triu(np.ones((n, n)), 1)  # one direction suffices
    assert algebraic_connectivity(NetworkSpec(w)) == pytest.approx(n, abs=1e-9)


def test_disconnected_graph_connectivity():
    spec = from_edges(4, [(1, 2, 1.0), (3, 4, 1.0)])
    assert algebraic_connectivity(spec) == 0.0
    assert not is_weakly_connected(spec)


def test_path_connectivity():
    assert algebraic_connectivity(chain(4)) == pytest.approx(2 - math.sqrt(2), abs=1e-9)
    assert algebraic_connectivity(chain(4)) == pytest.approx(2 * (1 - math.cos(math.pi / 4)), abs=1e-9)


def test_weak_connectivity_examples():
    assert is_weakly_connected(chain(3))
    assert not is_weakly_connected(NetworkSpec(np.zeros((2, 2))))


def test_jacobi_matches_closed_form_spectra():
    # path P_n: 2 - 2cos(k pi / n); cycle C_n: 2 - 2cos(2 pi k / n)
    for n in (3, 6, 9):
        want = sorted(2 - 2 * math.cos(k * math.pi / n) for k in range(n))
        np.testing.assert_allclose(jacobi_eigenvalues(laplacian(chain(n))), want, atol=1e-9)
        ring = from_edges(n, [(i, i % n + 1, 1.0) for i in range(1, n + 1)])
        want = sorted(2 - 2 * math.cos(2 * math.pi * k / n) for k in range(n))
        np.testing.assert_allclose(jacobi_eigenvalues(laplacian(ring)), want, atol=1e-9)


def test_jacobi_random_symmetric_trace_and_determinant(rng):
    for _ in range(20):
        m = rng.normal(size=(6, 6))
        s = (m + m.T) / 2
        lam = jacobi_eigenvalues(s)
        assert np.all(np.diff(lam) >= 0)
        assert lam.sum() == pytest.approx(np.trace(s), abs=1e-9)
        assert np.sum(lam ** 2) == pytest.approx(np.sum(s ** 2), abs=1e-9)
        assert np.prod(lam) == pytest.approx(np.linalg.det(s), rel=1e-8, abs=1e-9)


@given(supports(max_n=7))
def test_weak_connectivity_matches_spectrum(w):
    spec = NetworkSpec(w)
    assert is_weakly_connected(spec) == (algebraic_connectivity(spec) > 1e-8)


def test_undirected_version_ignores_direction():
    a = algebraic_connectivity(chain(5))
    b = algebraic_connectivity(chain(5, reverse=True))
    assert a == pytest.approx(b, abs=1e-12)


def test_all_pairs_covered_by_oracle():
    t = np.ones((3, 3)) - np.eye(3)
    assert _confusion_oracle(t, np.zeros((3, 3))) == (0, 0, 0, 6)
    assert len(list(itertools.permutations(range(3), 2))) == 6
