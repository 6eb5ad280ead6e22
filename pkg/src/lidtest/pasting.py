"""Pasting per-coordinate polynomial measurements into a global one.

Given projective sub-measurements G^x over the m-variable space, one per
coordinate value x, the construction is:

  1. complete each G^x to the projective measurement Ghat^x (extra outcome
     absorbs the incomplete part);
  2. sandwich k of them:  Hhat^{x_1..x_k}_{g_1..g_k}
       = Ghat^{x_1}_{g_1} ... Ghat^{x_k}_{g_k} ... Ghat^{x_1}_{g_1};
  3. for a global (m+1)-variable polynomial h, sum the sandwich over all
     hit patterns w of weight >= d+1 with slots g_i = h|_{x_i} on hits and
     the completion outcome on misses;
  4. average over k-tuples of pairwise distinct coordinates.

The result is a sub-measurement over the (m+1)-variable space; completing it
assigns the leftover mass to the zero polynomial.  The completeness of the
construction is governed by the binomial tail function
F(X) = sum_{r=d+1}^k C(k,r) X^r (I-X)^{k-r} applied spectrally.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import binom as _binom

from .gf import GF
from .measurements import BOTTOM, MeasurementError, SubMeasurement, expect_joint
from .polyspace import (
    MultiPoly,
    SizeGuardError,
    enumerate_polyspace,
    poly_by_index,
    polyspace_size,
    slice_at,
)

TUPLE_BUDGET = 10 ** 5
PASTE_GUARD = 10 ** 6


def distinct_tuples(f: GF, k: int):
    """All k-tuples of pairwise distinct field elements (integer-encoded)."""
    if k > f.q:
        raise ValueError(f"k = {k} exceeds the field size {f.q}")
    return itertools.permutations(range(f.q), k)


def distinct_tuple_count(q: int, k: int) -> int:
    return math.perm(q, k)


def tv_distance_uniform_vs_distinct(q: int, k: int):
    """Exact total-variation distance between uniform F_q^k and the distinct
    distribution, with the collision-probability and square bounds."""
    if k > q:
        raise ValueError(f"k = {k} exceeds q = {q}")
    exact = 1 - Fraction(math.perm(q, k), q ** k)
    return {
        "exact": exact,
        "collision_bound": Fraction(k * (k - 1), 2 * q),
        "square_bound": Fraction(k * k, q),
    }


def complete_slice_families(g_by_x: dict) -> dict:
    """G^x -> Ghat^x (projective completion per coordinate)."""
    out = {}
    for x, sub in g_by_x.items():
        if not sub.is_projective():
            raise MeasurementError("slice families must be projective")
        out[x] = sub.completion()
    return out


def sandwich(ghat_by_x, coords, outcomes) -> np.ndarray:
    """Hhat^{x_1..x_k}_{g_1..g_k} for one coordinate tuple and one outcome
    tuple (inner slot applied once, outer slots on both sides)."""
    if len(coords) != len(outcomes):
        raise ValueError("coordinate/outcome length mismatch")
    op = None
    for x, g in zip(reversed(coords), reversed(outcomes)):
        G = ghat_by_x[x].op(g)
        op = G if op is None else G @ op @ G
    return op


def sandwich_total(ghat_by_x, coords) -> np.ndarray:
    """Sum of the sandwich over every outcome tuple (telescopes to I)."""
    dim = next(iter(ghat_by_x.values())).dim
    acc = np.eye(dim, dtype=complex)
    for x in reversed(coords):
        fam = ghat_by_x[x]
        acc = sum(fam.op(g) @ acc @ fam.op(g) for g in fam.outcomes)
    return acc


def marginalize_last(ghat_by_x, coords, outcomes) -> np.ndarray:
    """Sum over the last slot; equals the one-shorter sandwich."""
    fam = ghat_by_x[coords[-1]]
    return sum(
        sandwich(ghat_by_x, coords, tuple(outcomes) + (g,))
        for g in fam.outcomes
    )


def type_of(outcomes) -> tuple:
    return tuple(0 if g is BOTTOM else 1 for g in outcomes)


def tuple_for(h: MultiPoly, coords, w) -> tuple:
    """The outcome tuple h_w: slice of h on hits, completion slot on misses."""
    f = h.field
    return tuple(
        slice_at(h, f.element(x)) if bit else BOTTOM
        for x, bit in zip(coords, w)
    )


def outcomes_of_type(f: GF, m: int, d: int, tau):
    """Outcomes_tau: every tuple with polynomials exactly on the support."""
    polys = list(enumerate_polyspace(f, m, d))
    pools = [polys if bit else [BOTTOM] for bit in tau]
    return itertools.product(*pools)


def is_global_tuple(outcomes, coords, f: GF, d: int) -> bool:
    """Whether the non-completion slots agree with one global polynomial."""
    hits = [(x, g) for x, g in zip(coords, outcomes) if g is not BOTTOM]
    if len(hits) < d + 1:
        return False
    from .polyspace import interpolate_parallel

    nodes = hits[: d + 1]
    h = interpolate_parallel([(f.element(x), g) for x, g in nodes], d)
    return all(slice_at(h, f.element(x)) == g for x, g in hits)


@dataclass
class PastedResult:
    family: SubMeasurement           # over the (m+1)-variable space
    mode: str                        # 'exact' or 'sampled'
    n_tuples: int
    seed: object = None
    telescoping_residual: float = float("nan")
    notes: dict = field(default_factory=dict)


def pasted_measurement(g_by_x: dict, f: GF, m: int, d: int, k: int,
                       seed=None, tuple_budget=TUPLE_BUDGET,
                       check_telescoping=True) -> PastedResult:
    """The averaged pasted sub-measurement over the (m+1)-variable space.

    g_by_x: {x int: projective SubMeasurement over the m-variable space}.
    Averaging enumerates the distinct tuples exactly when their count fits
    the budget, otherwise draws that many tuples at the recorded seed.
    """
    if k < d + 1:
        raise ValueError(f"need k >= d + 1, got k = {k}")
    ghat = complete_slice_families(g_by_x)
    dim = next(iter(ghat.values())).dim
    n_global = polyspace_size(f, m + 1, d)
    if n_global * dim > PASTE_GUARD:
        raise SizeGuardError("global outcome space times dimension exceeds cap")

    polys_m = list(enumerate_polyspace(f, m, d))
    poly_pos = {g.key(): j for j, g in enumerate(polys_m)}
    globals_m1 = list(enumerate_polyspace(f, m + 1, d))
    # slice lookup: slice_idx[x][j] = position of (globals_m1[j])|_x
    slice_idx = {}
    for x in range(f.q):
        slice_idx[x] = np.array(
            [poly_pos[slice_at(h, f.element(x)).key()] for h in globals_m1]
        )
    # stacked operator tables per coordinate: ops_by_x[x][j] = Ghat^x_{poly j},
    # last row is the completion outcome
    ops_by_x = {}
    bot_by_x = {}
    for x in range(f.q):
        fam = ghat[x]
        ops_by_x[x] = np.stack([fam.op(g) for g in polys_m], axis=0)
        bot_by_x[x] = fam.op(BOTTOM)

    count = distinct_tuple_count(f.q, k)
    if count <= tuple_budget:
        tuples = list(distinct_tuples(f, k))
        mode = "exact"
    else:
        rng = np.random.default_rng(seed)
        tuples = [tuple(rng.permutation(f.q)[:k]) for _ in range(tuple_budget)]
        mode = "sampled"

    N = len(globals_m1)
    total = np.zeros((N, dim, dim), dtype=complex)
    worst_telescope = 0.0
    for coords in tuples:
        # weight-resolved sandwich DP, innermost coordinate first
        layers = {0: np.broadcast_to(np.eye(dim, dtype=complex), (N, dim, dim))}
        for pos in range(k - 1, -1, -1):
            x = coords[pos]
            hit_ops = ops_by_x[x][slice_idx[x]]      # (N, dim, dim)
            miss = bot_by_x[x]
            new_layers = {}
            for w, block in layers.items():
                hit = np.einsum("nij,njk,nkl->nil", hit_ops, block, hit_ops)
                new_layers[w + 1] = new_layers.get(w + 1, 0) + hit
                missed = np.einsum("ij,njk,kl->nil", miss, block, miss)
                new_layers[w] = new_layers.get(w, 0) + missed
            layers = new_layers
        contribution = sum(layers[w] for w in layers if w >= d + 1)
        total += contribution
        if check_telescoping:
            full = sandwich_total(ghat, coords)
            worst_telescope = max(
                worst_telescope,
                float(np.abs(full - np.eye(dim)).max()),
            )
    total /= len(tuples)
    family = SubMeasurement(tuple(globals_m1), total)
    return PastedResult(
        family=family,
        mode=mode,
        n_tuples=len(tuples),
        seed=seed,
        telescoping_residual=worst_telescope,
    )


def complete_pasted(family: SubMeasurement, f: GF, m1: int, d: int) -> SubMeasurement:
    """Measurement completion assigning the leftover to the zero polynomial."""
    zero = MultiPoly.zero(f, m1, d)
    rest = np.eye(family.dim) - family.total()
    ops = family.ops.copy()
    ops[family.outcomes.index(zero)] += rest
    return SubMeasurement(family.outcomes, ops, check=False)


# ---- binomial completeness ------------------------------------------------------


def binomial_tail(k: int, d: int, p) -> float:
    """P[Binomial(k, p) >= d + 1]."""
    return float(_binom.sf(d, k, p))


def binomial_matrix_F(X: np.ndarray, k: int, d: int) -> np.ndarray:
    """The spectral binomial tail sum_{r=d+1}^k C(k,r) X^r (I-X)^{k-r}."""
    X = np.asarray(X, dtype=complex)
    w, v = np.linalg.eigh(X)
    if w.min() < -1e-9 or w.max() > 1 + 1e-9:
        raise ValueError("need 0 <= X <= I")
    vals = np.array([binomial_tail(k, d, p) for p in np.clip(w, 0.0, 1.0)])
    return (v * vals) @ v.conj().T


def chernoff_completeness_check(X, Psi, k: int, d: int, theta: float,
                                regime_m: int = None) -> dict:
    """Both sides of the matrix Chernoff completeness bound.

    kappa is the measured incompleteness of X on the state; the bound is
    1 - kappa/(1-theta) - exp(-theta^2 k / 2), valid for k >= 2d/theta.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if k < 2 * d / theta:
        raise ValueError(f"need k >= 2d/theta = {2 * d / theta:.1f}")
    dim_b = Psi.shape[1]
    kappa = 1.0 - expect_joint(X, np.eye(dim_b), Psi).real
    measured = expect_joint(binomial_matrix_F(X, k, d), np.eye(dim_b), Psi).real
    bound = 1.0 - kappa / (1.0 - theta) - math.exp(-theta * theta * k / 2.0)
    out = {
        "kappa": float(kappa),
        "measured": float(measured),
        "bound": float(bound),
        "margin": float(measured - bound),
        "vacuous": bound <= 0.0,
    }
    if regime_m is not None:
        out["in_guarantee_regime"] = k >= 400 * regime_m * d
    return out


def scalar_ineq_check(lam: float, d: int) -> bool:
    """lam (1 - lam^d) <= 2 (lam^{d+1} (1 - lam))^{1/(d+1)} on [0, 1]."""
    if not 0 <= lam <= 1 or d < 1:
        raise ValueError("need lam in [0,1] and d >= 1")
    lhs = lam * (1.0 - lam ** d)
    rhs = 2.0 * (lam ** (d + 1) * (1.0 - lam)) ** (1.0 / (d + 1))
    return lhs <= rhs + 1e-12
