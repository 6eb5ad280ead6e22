"""Operator-family toolkit: sub-measurements, consistency and the
state-dependent distance, post-processing, completion, and strong
self-consistency.

A bipartite state on C^{D_A} x C^{D_B} is carried as its coefficient matrix
Psi of shape (D_A, D_B); <psi| M (x) N |psi> = vdot(Psi, M @ Psi @ N.T).
Distances take families as {question: SubMeasurement} plus an explicit
question distribution [(question, weight)].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_FLOOR = -1e-10
COMPLETENESS_TOL = 1e-9


class MeasurementError(ValueError):
    pass


class _Bottom:
    """Sentinel outcome added by completion."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOTTOM"


BOTTOM = _Bottom()


class SubMeasurement:
    """Outcome-labelled family of PSD operators with total at most identity."""

    def __init__(self, outcomes, ops, check=True):
        ops = np.asarray(ops, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise MeasurementError("operators must be square matrices")
        outcomes = tuple(outcomes)
        if len(outcomes) != ops.shape[0]:
            raise MeasurementError("label/operator count mismatch")
        if len(set(outcomes)) != len(outcomes):
            raise MeasurementError("duplicate outcome labels")
        self.outcomes = outcomes
        self.ops = ops
        self._index = {o: j for j, o in enumerate(outcomes)}
        if check:
            self.validate()

    @property
    def dim(self):
        return self.ops.shape[1]

    def validate(self):
        herm = np.abs(self.ops - np.conj(np.transpose(self.ops, (0, 2, 1))))
        if herm.size and herm.max() > HERMITIAN_TOL:
            raise MeasurementError("operators are not Hermitian")
        for op in self.ops:
            w = np.linalg.eigvalsh(op)
            if w.size and w.min() < PSD_FLOOR:
                raise MeasurementError(f"operator has eigenvalue {w.min():.3e} < 0")
        w = np.linalg.eigvalsh(self.total())
        if w.size and w.max() > 1 + COMPLETENESS_TOL:
            raise MeasurementError(f"total exceeds identity: max eig {w.max():.6f}")
        return self

    def op(self, outcome):
        j = self._index.get(outcome)
        if j is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.ops[j]

    def __contains__(self, outcome):
        return outcome in self._index

    def items(self):
        return zip(self.outcomes, self.ops)

    def total(self) -> np.ndarray:
        if not len(self.outcomes):
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.ops.sum(axis=0)

    def is_measurement(self, tol=COMPLETENESS_TOL) -> bool:
        return np.abs(self.total() - np.eye(self.dim)).max() <= tol

    def is_projective(self, tol=1e-9) -> bool:
        return all(
            np.abs(op @ op - op).max() <= tol for op in self.ops
        )

    def post_process(self, fn) -> "SubMeasurement":
        """Group outcomes by fn; completeness is preserved."""
        grouped = {}
        order = []
        for o, op in self.items():
            b = fn(o)
            if b not in grouped:
                grouped[b] = np.zeros((self.dim, self.dim), dtype=complex)
                order.append(b)
            grouped[b] = grouped[b] + op
        return SubMeasurement(order, np.array([grouped[b] for b in order]), check=False)

    def completion(self, label=BOTTOM) -> "SubMeasurement":
        if label in self._index:
            raise MeasurementError("completion label already present")
        rest = np.eye(self.dim) - self.total()
        ops = np.concatenate([self.ops, rest[None]], axis=0)
        return SubMeasurement(self.outcomes + (label,), ops, check=False)

    def drop(self, label) -> "SubMeasurement":
        keep = [j for j, o in enumerate(self.outcomes) if o != label]
        return SubMeasurement(
            tuple(self.outcomes[j] for j in keep), self.ops[keep], check=False
        )

    def __repr__(self):
        return f"SubMeasurement({len(self.outcomes)} outcomes, dim {self.dim})"


def projective_family(outcomes, projectors) -> SubMeasurement:
    fam = SubMeasurement(outcomes, projectors)
    if not fam.is_projective():
        raise MeasurementError("family is not projective")
    return fam


def diagonal_indicator_family(outcomes, assignment, dim) -> SubMeasurement:
    """assignment[i] = outcome of basis state i; yields commuting projectors."""
    ops = np.zeros((len(outcomes), dim, dim), dtype=complex)
    index = {o: j for j, o in enumerate(outcomes)}
    for i, o in enumerate(assignment):
        ops[index[o], i, i] = 1.0
    return SubMeasurement(tuple(outcomes), ops, check=False)


# ---- bipartite expectation helpers -------------------------------------------


def state_matrix(psi, dims) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(dims)
    return psi


def expect_joint(left, right, Psi) -> float:
    """<psi| left (x) right |psi> for a state given as a matrix."""
    val = np.vdot(Psi, left @ Psi @ right.T)
    return val


def expect_left(left, Psi) -> complex:
    return np.vdot(Psi, left @ Psi)


def expect_right(right, Psi) -> complex:
    return np.vdot(Psi, Psi @ right.T)


def is_swap_invariant(Psi, tol=1e-9) -> bool:
    """|psi> on H (x) H is permutation-invariant iff its matrix is symmetric."""
    if Psi.shape[0] != Psi.shape[1]:
        return False
    return np.abs(Psi - Psi.T).max() <= tol


def _as_dist(dist):
    return [(x, float(w)) for x, w in dist]


def consistency(fam_a, fam_b, Psi, dist) -> float:
    """E_x sum_{a != b} <psi| A^x_a (x) B^x_b |psi>.

    fam_a acts on the left factor, fam_b on the right.  For measurements this
    equals 1 - E_x sum_a <A^x_a (x) B^x_a>; for sub-measurements it is the
    genuinely two-sided sum.
    """
    total = 0.0
    for x, w in _as_dist(dist):
        A, B = fam_a[x], fam_b[x]
        val = expect_joint(A.total(), B.total(), Psi)
        for o in A.outcomes:
            if o in B:
                val -= expect_joint(A.op(o), B.op(o), Psi)
        total += w * val.real
    return total


def agreement(fam_a, fam_b, Psi, dist) -> float:
    """E_x sum_a <psi| A^x_a (x) B^x_a |psi> (matched-outcome mass)."""
    total = 0.0
    for x, w in _as_dist(dist):
        A, B = fam_a[x], fam_b[x]
        for o in A.outcomes:
            if o in B:
                total += w * expect_joint(A.op(o), B.op(o), Psi).real
    return total


def state_distance(fam_a, fam_b, Psi, dist, side="left") -> float:
    """E_x sum_a || (A^x_a - B^x_a) |psi> ||^2 with both families applied to
    the same factor ('left' or 'right'); no bipartition is assumed beyond
    that placement."""
    total = 0.0
    for x, w in _as_dist(dist):
        A, B = fam_a[x], fam_b[x]
        labels = list(A.outcomes) + [o for o in B.outcomes if o not in A]
        for o in labels:
            delta = A.op(o) - B.op(o)
            if side == "left":
                v = delta @ Psi
            elif side == "right":
                v = Psi @ delta.T
            else:
                raise MeasurementError(f"unknown side {side!r}")
            total += w * float(np.sum(np.abs(v) ** 2))
    return total


def cross_state_distance(fam_a, fam_b, Psi, dist) -> float:
    """E_x sum_a || (A^x_a (x) I - I (x) B^x_a) |psi> ||^2."""
    total = 0.0
    for x, w in _as_dist(dist):
        A, B = fam_a[x], fam_b[x]
        labels = list(A.outcomes) + [o for o in B.outcomes if o not in A]
        for o in labels:
            v = A.op(o) @ Psi - Psi @ B.op(o).T
            total += w * float(np.sum(np.abs(v) ** 2))
    return total


def strong_self_consistency_deficit(fam, Psi, dist) -> float:
    """<psi| A (x) I |psi> - E_x sum_a <psi| A^x_a (x) A^x_a |psi> on a
    permutation-invariant state (checked)."""
    if not is_swap_invariant(Psi):
        raise MeasurementError("state is not permutation-invariant")
    completeness = 0.0
    matched = 0.0
    for x, w in _as_dist(dist):
        A = fam[x]
        completeness += w * expect_left(A.total(), Psi).real
        for op in A.ops:
            matched += w * expect_joint(op, op, Psi).real
    return completeness - matched


def scalar_trunc(x: float, delta: float) -> float:
    return 1.0 if x >= 1.0 - delta else 0.0


def scalar_trunc_inequality_check(x: float, delta: float) -> bool:
    """(x - trunc(x))^2 <= (x - x^2)/delta on [0,1] x (0, 1/2]."""
    if not 0 <= x <= 1 or not 0 < delta <= 0.5:
        raise ValueError("x in [0,1] and delta in (0, 1/2] required")
    lhs = (x - scalar_trunc(x, delta)) ** 2
    rhs = (x - x * x) / delta
    return lhs <= rhs + 1e-12


@dataclass
class DistanceReport:
    kind: str  # 'consistency' | 'state_dependent'
    value: float
    detail: dict

    def as_dict(self):
        return {"kind": self.kind, "value": self.value, **self.detail}
