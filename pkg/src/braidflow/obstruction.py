"""Combinatorial certificate that a braid cannot come from an autonomous flow.

A subset S of strands (|S| >= 3) certifies non-autonomy when every pair in S
winds non-trivially and no strand of S is maximal, i.e. the winding row of
each s1 over S minus {s1} takes at least two distinct values.  Failing to find
such a subset says nothing about autonomy.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .braids import NestingOrder, WindingMatrix
from .errors import SizeError

MAX_STRANDS = 20


@dataclass(frozen=True)
class ObstructionCertificate:
    labels: tuple
    # label -> ((s2, w(s1, s2)), (s3, w(s1, s3))) with differing windings
    witnesses: dict

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "witnesses": {k: [[a, wa], [b, wb]] for k, ((a, wa), (b, wb)) in self.witnesses.items()},
        }


def _witnesses(values: np.ndarray, idx: tuple, labels: tuple):
    out = {}
    for i in idx:
        others = [j for j in idx if j != i]
        first = others[0]
        diff = next((j for j in others[1:] if values[i, j] != values[i, first]), None)
        if diff is None:
            return None
        out[labels[i]] = ((labels[first], int(values[i, first])), (labels[diff], int(values[i, diff])))
    return out


def find_obstruction(W: WindingMatrix, max_strands: int = MAX_STRANDS) -> ObstructionCertificate | None:
    """Smallest, then lexicographically first (in label order), certifying subset."""
    k = len(W.labels)
    if k > max_strands:
        raise SizeError(f"{k} strands exceeds exhaustive search limit {max_strands}")
    v = W.values
    nz = v != 0
    for size in range(3, k + 1):
        for idx in itertools.combinations(range(k), size):
            if not all(nz[i, j] for i, j in itertools.combinations(idx, 2)):
                continue
            wit = _witnesses(v, idx, W.labels)
            if wit is not None:
                return ObstructionCertificate(tuple(W.labels[i] for i in idx), wit)
    return None


def verify_certificate(W: WindingMatrix, S) -> bool:
    S = list(S)
    if len(S) < 3 or len(set(S)) != len(S) or not set(S) <= set(W.labels):
        return False
    for a, b in itertools.combinations(S, 2):
        if W[a, b] == 0:
            return False
    for s1 in S:
        row = {W[s1, s2] for s2 in S if s2 != s1}
        if len(row) < 2:
            return False
    return True


@dataclass(frozen=True)
class ConsistencyReport:
    violations: tuple  # human-readable strings

    @property
    def ok(self) -> bool:
        return not self.violations


def autonomous_consistency(W: WindingMatrix, order: NestingOrder) -> ConsistencyReport:
    """Check the two laws every autonomous flow obeys.

    1. w(p, q) = 0 exactly when the trajectories of p and q are incomparable.
    2. If c_q <= c_p and c_q' <= c_p then w(p, q) = w(p, q').
    """
    if set(W.labels) != set(order.labels):
        raise ValueError("matrix and order must be over the same labels")
    out = []
    labels = W.labels
    for p, q in itertools.combinations(labels, 2):
        zero = W[p, q] == 0
        comp = order.comparable(p, q)
        if zero and comp:
            out.append(f"w({p},{q}) = 0 but trajectories are comparable")
        if not zero and not comp:
            out.append(f"w({p},{q}) = {W[p, q]} but trajectories are incomparable")
    for p in labels:
        below = [q for q in labels if q != p and order.leq(q, p)]
        for q, q2 in itertools.combinations(below, 2):
            if W[p, q] != W[p, q2]:
                out.append(f"{q} and {q2} lie under {p} but w({p},{q}) = {W[p, q]} != w({p},{q2}) = {W[p, q2]}")
    return ConsistencyReport(tuple(out))
