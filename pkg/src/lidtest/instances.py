"""Seeded random instances: states, POVMs, perturbed measurement pairs, and
noisy strategies.  Shared by the test suite and the batch CLI commands so a
seed means the same instance everywhere."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .measurements import SubMeasurement
from .polyspace import MultiPoly
from .protocol import TestParams
from .strategies import (
    ClassicalStrategy,
    honest_strategy,
    shared_randomness_strategy,
)


def rng_for(seed):
    return np.random.default_rng(seed)


def random_state(rng, da, db):
    Psi = rng.normal(size=(da, db)) + 1j * rng.normal(size=(da, db))
    return Psi / np.linalg.norm(Psi)


def random_symmetric_state(rng, d):
    M = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    M = M + M.T
    return M / np.linalg.norm(M)


def maximally_entangled(d):
    return np.eye(d, dtype=complex) / np.sqrt(d)


def random_unitary(rng, d):
    M = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, R = np.linalg.qr(M)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_projective_measurement(rng, dim, n_outcomes, outcomes=None):
    """Random partition of a rotated basis into n_outcomes projectors."""
    U = random_unitary(rng, dim)
    buckets = rng.integers(0, n_outcomes, size=dim)
    while len(set(buckets.tolist())) < min(n_outcomes, dim):
        buckets = rng.integers(0, n_outcomes, size=dim)
    ops = np.zeros((n_outcomes, dim, dim), dtype=complex)
    for i in range(dim):
        v = U[:, i:i + 1]
        ops[buckets[i]] += v @ v.conj().T
    labels = tuple(range(n_outcomes)) if outcomes is None else tuple(outcomes)
    return SubMeasurement(labels, ops, check=False)


def random_povm(rng, dim, n_outcomes, outcomes=None):
    """Gram-normalized random PSD effects: a genuinely non-projective POVM."""
    raw = []
    for _ in range(n_outcomes):
        X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        raw.append(X @ X.conj().T)
    S = np.sum(raw, axis=0)
    w, v = np.linalg.eigh(S)
    inv_root = (v / np.sqrt(w)) @ v.conj().T
    ops = np.array([inv_root @ E @ inv_root for E in raw])
    labels = tuple(range(n_outcomes)) if outcomes is None else tuple(outcomes)
    return SubMeasurement(labels, ops, check=False)


def mix_with(sub: SubMeasurement, other: SubMeasurement, eta: float):
    ops = (1 - eta) * sub.ops + eta * other.ops
    return SubMeasurement(sub.outcomes, ops, check=False)


def conjugate_family(sub: SubMeasurement):
    """Entrywise conjugate: the family consistent with sub across a
    maximally entangled state."""
    return SubMeasurement(sub.outcomes, np.conj(sub.ops), check=False)


def perturbed_measurement_pair(rng, dim, n_outcomes, noise):
    """(A, B, Psi) with small measured inconsistency: a random projective
    family and its conjugate on a maximally entangled state, both mixed
    with noise toward the flat POVM."""
    P = random_projective_measurement(rng, dim, n_outcomes)
    flat = SubMeasurement(
        P.outcomes,
        np.repeat(np.eye(dim, dtype=complex)[None] / n_outcomes, n_outcomes, axis=0),
        check=False,
    )
    A = mix_with(P, flat, noise)
    B = mix_with(conjugate_family(P), flat, noise)
    return A, B, maximally_entangled(dim)


def corrupted_tables(params: TestParams, n_tables, n_corrupt, rng):
    """Honest tables with a few corrupted point answers; the line tables stay
    honest, so goodness degrades but stays small."""
    f = params.field
    weighted = []
    for _ in range(n_tables):
        size = (params.d + 1) ** params.m
        g = MultiPoly(f, params.m, params.d,
                      rng.integers(0, f.q, size=size))
        s = honest_strategy(params, g)
        pts = dict(s.tables["A"][0])
        keys = sorted(pts, key=lambda u: u.ints())
        for k in rng.choice(len(keys), size=min(n_corrupt, len(keys)), replace=False):
            u = keys[int(k)]
            pts[u] = f.element(int(rng.integers(0, f.q)))
        weighted.append(
            (Fraction(1, n_tables),
             ClassicalStrategy(params, pts, s.tables["A"][1], s.tables["A"][2]))
        )
    return weighted


def noisy_shared_randomness_strategy(params: TestParams, n_tables, n_corrupt, seed):
    """Symmetric projective strategy with tunably small failure probabilities."""
    rng = rng_for(seed)
    return shared_randomness_strategy(params, corrupted_tables(params, n_tables, n_corrupt, rng))


def random_point_family(rng, params: TestParams, dim):
    """0 <= A^u <= I per point, for variance diagnostics."""
    fams = {}
    from .polyspace import all_points

    for u in all_points(params.field, params.m):
        X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        H = X @ X.conj().T
        fams[u] = H / (np.linalg.eigvalsh(H).max() + rng.uniform(0.1, 1.0))
    return fams
