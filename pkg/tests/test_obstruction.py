import itertools
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from braidflow.braids import NestingOrder, WindingMatrix
from braidflow.errors import SizeError
from braidflow.obstruction import autonomous_consistency, find_obstruction, verify_certificate
from oracles import brute_force_certificate

B_NA = WindingMatrix.from_pairs(("s", "p1", "p2", "m"), {
    ("p1", "s"): 2, ("p2", "s"): 1, ("p2", "p1"): 1, ("m", "s"): 1, ("m", "p1"): 1, ("m", "p2"): 3,
})
THREE = WindingMatrix.from_pairs("123", {("1", "2"): 1, ("1", "3"): 2, ("2", "3"): 3})


def random_matrix(rng, k, zero_prob):
    v = rng.integers(-3, 4, size=(k, k))
    v[rng.random((k, k)) < zero_prob] = 0
    v = np.triu(v, 1)
    return WindingMatrix(tuple(f"x{i}" for i in range(k)), v + v.T)


def corpus():
    rng = np.random.default_rng(20)
    out = []
    for k in range(1, 9):
        for zp in (0.0, 0.2, 0.5, 0.8):
            out += [random_matrix(rng, k, zp) for _ in range(12)]
    # single-rotation shaped matrices: nested strands all see the outer turn count
    for k in range(3, 9):
        turns = sorted(rng.integers(1, 4, size=k))[::-1]
        v = np.zeros((k, k), dtype=int)
        for i, j in itertools.combinations(range(k), 2):
            v[i, j] = v[j, i] = turns[min(i, j)]
        out.append(WindingMatrix(tuple(f"r{i}" for i in range(k)), v))
    return out


CORPUS = corpus()


def test_paper_braid_certified():
    cert = find_obstruction(B_NA)
    assert cert is not None and set(cert.labels) == {"s", "p1", "p2", "m"}
    assert verify_certificate(B_NA, cert.labels)
    for lab, ((a, wa), (b, wb)) in cert.witnesses.items():
        assert wa != wb and B_NA[lab, a] == wa and B_NA[lab, b] == wb


def test_three_strand_example_certified():
    cert = find_obstruction(THREE)
    assert cert is not None and cert.labels == ("1", "2", "3")


def test_hand_evaluated_verification():
    assert verify_certificate(B_NA, ["s", "p1", "p2", "m"])
    assert not verify_certificate(B_NA, ["s", "p1", "p2"])  # p2's row over {s, p1} is (1, 1)
    assert not verify_certificate(B_NA, ["s", "p1"])
    assert not verify_certificate(B_NA, ["s", "p1", "p1"])
    assert not verify_certificate(B_NA, ["s", "p1", "nope"])
    Z = WindingMatrix.from_pairs("abc", {("a", "b"): 1, ("a", "c"): 2})
    assert not verify_certificate(Z, "abc")


@pytest.mark.parametrize("W", CORPUS, ids=lambda W: f"k{len(W.labels)}")
def test_matches_brute_force(W):
    cert = find_obstruction(W)
    want = brute_force_certificate(W.values, W.labels)
    assert (cert.labels if cert else None) == want
    if cert:
        assert verify_certificate(W, cert.labels)


def test_single_rotation_matrices_never_certified():
    for W in CORPUS:
        if W.labels[0] == "r0":
            assert find_obstruction(W) is None


@settings(max_examples=80, deadline=None)
@given(st.integers(3, 7), st.integers(0, 2**32 - 1))
def test_adding_strands_keeps_certificate(k, seed):
    rng = np.random.default_rng(seed)
    W = random_matrix(rng, k + 2, 0.3)
    sub = W.submatrix(W.labels[:k])
    cert = find_obstruction(sub)
    if cert is not None:
        big = find_obstruction(W)
        assert big is not None and len(big.labels) <= len(cert.labels)


@settings(max_examples=80, deadline=None)
@given(st.permutations(range(6)), st.integers(0, 2**32 - 1))
def test_existence_invariant_under_relabeling(perm, seed):
    W = random_matrix(np.random.default_rng(seed), 6, 0.3)
    labels = [W.labels[i] for i in perm]
    P = W.submatrix(labels)
    a, b = find_obstruction(W), find_obstruction(P)
    assert (a is None) == (b is None)
    if a:
        assert len(a.labels) == len(b.labels)


def test_size_limit():
    W = WindingMatrix(tuple(f"x{i}" for i in range(21)), np.zeros((21, 21), dtype=int))
    with pytest.raises(SizeError):
        find_obstruction(W)


def test_fast_on_paper_and_three_strand():
    for W in (B_NA, THREE):
        t0 = time.perf_counter()
        for _ in range(100):
            find_obstruction(W)
        assert (time.perf_counter() - t0) / 100 < 1e-3


def test_paper_braid_violates_every_total_order():
    for perm in itertools.permutations(B_NA.labels):
        assert not autonomous_consistency(B_NA, NestingOrder.chain(perm)).ok


def test_zero_matrix_antichain_consistent():
    W = WindingMatrix(tuple("abcd"), np.zeros((4, 4), dtype=int))
    assert autonomous_consistency(W, NestingOrder.antichain("abcd")).ok


def test_consistency_flags_zero_on_comparable_and_unequal_parent_row():
    W = WindingMatrix.from_pairs("abc", {("a", "c"): 2, ("b", "c"): 3})
    rep = autonomous_consistency(W, NestingOrder.chain("abc"))
    text = " | ".join(rep.violations)
    assert "w(a,b) = 0 but trajectories are comparable" in text
    assert "lie under c" in text
