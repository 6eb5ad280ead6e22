from fractions import Fraction

import numpy as np
import pytest

from lidtest.gf import field, field_for_order
from lidtest.measurements import expect_joint
from lidtest.polyspace import MultiPoly, UniPoly, all_points, point
from lidtest.protocol import TestParams
from lidtest.strategies import (
    ClassicalStrategy,
    Goodness,
    RandomizedClassicalStrategy,
    adversary_points_polynomial,
    axis_failure_pessimistic,
    best_polyspace_agreement,
    classical_to_quantum,
    example_adversary,
    honest_strategy,
    pass_probabilities,
    pass_probabilities_monte_carlo,
    shared_randomness_strategy,
    symmetrize,
    unsymmetrize_measurement,
)


def make_params(q, m, d):
    return TestParams(field_for_order(q), m, d)


def random_honest(params, seed):
    rng = np.random.default_rng(seed)
    size = (params.d + 1) ** params.m
    g = MultiPoly(params.field, params.m, params.d,
                  rng.integers(0, params.q, size=size))
    return g, honest_strategy(params, g)


def test_honest_strategy_perfect():
    params = make_params(3, 2, 1)
    _, strat = random_honest(params, 0)
    good = pass_probabilities(strat, params)
    assert (good.eps, good.delta, good.gamma) == (0, 0, 0)
    assert isinstance(good.eps, Fraction)


def test_uniform_random_points_self_consistency():
    # m=1, q=2, d=0: uniformly random answers fail self-consistency half the time
    from lidtest.polyspace import AxisLine, DiagonalLine
    from lidtest.protocol import Value

    params = make_params(2, 1, 0)
    f = params.field

    def deterministic_tables(bits):
        pts = {point(f, (0,)): f.element(bits & 1),
               point(f, (1,)): f.element(bits >> 1)}
        # d = 0: line answers are constants; answer with the value at t = 0
        axis = {}
        diag = {}
        for u in all_points(f, 1):
            line = AxisLine.through(u, 0)
            axis[line] = UniPoly(f, [pts[line.point_at(0)].i], bound=0)
            for v in all_points(f, 1):
                dline = DiagonalLine.through(u, v)
                if dline in diag:
                    continue
                if dline.degenerate:
                    diag[dline] = Value(pts[dline.base])
                else:
                    diag[dline] = UniPoly(f, [pts[dline.point_at(0)].i], bound=0)
        return pts, axis, diag

    # independent per-player randomness: all 4 x 4 table pairs, 2 points each
    mixture = []
    for bits_a in range(4):
        for bits_b in range(4):
            ta = deterministic_tables(bits_a)
            tb = deterministic_tables(bits_b)
            mixture.append((Fraction(1, 16),
                            ClassicalStrategy(params, *ta, *tb)))
    rand = RandomizedClassicalStrategy(mixture)
    good = pass_probabilities(rand, params)
    assert good.delta == Fraction(1, 2)


def test_adversary_exact_failures():
    params = make_params(5, 2, 1)
    strat = example_adversary(params)
    good = pass_probabilities(strat, params)
    # exact accounting: direction-1 rounds are lost except when h(u) = 0
    assert good.eps == Fraction(1, 2) * (1 - Fraction(1, 5))
    assert good.delta == 0
    assert good.gamma == 0
    # pessimistic accounting reproduces the headline 1/m
    assert axis_failure_pessimistic(strat, params) == Fraction(1, 2)


def test_adversary_agreement_bound():
    params = make_params(5, 2, 1)
    strat = example_adversary(params)
    best = best_polyspace_agreement(params, strat.tables["A"][0])
    m, d, q = params.m, params.d, params.q
    bound = 1 - m * Fraction(1, m) + Fraction(d + 1, q)
    assert best <= bound
    h = adversary_points_polynomial(params)
    assert h.d == d + 1


def test_adversary_needs_room():
    from lidtest.protocol import ProtocolError

    with pytest.raises(ProtocolError):
        example_adversary(make_params(2, 2, 1))


def test_classical_equals_quantum_embedding():
    params = make_params(2, 2, 1)
    _, strat = random_honest(params, 3)
    qstrat = classical_to_quantum(strat)
    good_c = pass_probabilities(strat, params)
    good_q = pass_probabilities(qstrat, params)
    for c, q in zip(good_c.as_floats(), good_q.as_floats()):
        assert abs(c - q) < 1e-12


def test_shared_randomness_embedding_matches_mixture():
    params = make_params(2, 1, 1)
    g0, s0 = random_honest(params, 1)
    g1, s1 = random_honest(params, 2)
    mix = RandomizedClassicalStrategy([(Fraction(1, 2), s0), (Fraction(1, 2), s1)])
    qstrat = shared_randomness_strategy(
        params, [(Fraction(1, 2), s0), (Fraction(1, 2), s1)]
    )
    good_c = pass_probabilities(mix, params)
    good_q = pass_probabilities(qstrat, params)
    for c, q in zip(good_c.as_floats(), good_q.as_floats()):
        assert abs(c - q) < 1e-12


def corrupted_tables_strategy(params, n_tables, n_corrupt, seed):
    """Shared-randomness strategy whose tables are honest except at a few points."""
    from lidtest.polyspace import AxisLine, DiagonalLine
    from lidtest.protocol import Value

    rng = np.random.default_rng(seed)
    f = params.field
    weighted = []
    for _ in range(n_tables):
        g, s = random_honest(params, int(rng.integers(0, 2 ** 31)))
        pts = dict(s.tables["A"][0])
        keys = list(pts)
        for k in rng.choice(len(keys), size=n_corrupt, replace=False):
            u = keys[int(k)]
            pts[u] = f.element(int(rng.integers(0, f.q)))
        weighted.append((Fraction(1, n_tables),
                         ClassicalStrategy(params, pts, s.tables["A"][1], s.tables["A"][2])))
    return shared_randomness_strategy(params, weighted)


def test_corrupted_strategy_goodness_small_but_positive():
    params = make_params(2, 2, 1)
    strat = corrupted_tables_strategy(params, 4, 1, seed=5)
    good = pass_probabilities(strat, params)
    assert 0 < good.eps < 0.5
    assert 0 <= good.delta < 0.5


def test_monte_carlo_within_three_sigma():
    params = make_params(2, 2, 1)
    strat = corrupted_tables_strategy(params, 4, 1, seed=6)
    exact = pass_probabilities(strat, params)
    mc = pass_probabilities_monte_carlo(strat, params, n_samples=4000, seed=7)
    for sub, truth in zip(("axis", "selfcons", "diag"), exact.as_floats()):
        est, sigma = mc[sub]
        assert abs(est - truth) <= 3 * sigma + 1e-9


def test_symmetrize_preserves_statistics():
    params = make_params(2, 2, 1)
    strat = corrupted_tables_strategy(params, 3, 1, seed=9)
    sym = symmetrize(strat)
    assert sym.dims == (6, 6)
    assert sym.symmetric
    g0 = pass_probabilities(strat, params)
    g1 = pass_probabilities(sym, params)
    for a, b in zip(g0.as_floats(), g1.as_floats()):
        assert abs(a - b) < 1e-9


def test_symmetrized_state_swap_invariant():
    from lidtest.measurements import is_swap_invariant

    params = make_params(2, 1, 1)
    strat = corrupted_tables_strategy(params, 2, 1, seed=11)
    sym = symmetrize(strat)
    assert is_swap_invariant(sym.Psi)


def test_unsymmetrize_completeness_and_two_factor():
    params = make_params(2, 1, 1)
    strat = corrupted_tables_strategy(params, 2, 1, seed=13)
    sym = symmetrize(strat)
    u = next(iter(sym.families["A"]["points"]))
    G = sym.families["A"]["points"][u]
    for role in ("A", "B"):
        comp = unsymmetrize_measurement(G, role)
        assert np.abs(comp.total() - np.eye(comp.dim)).max() < 1e-9
    # consistency against the unsymmetrized A-side degrades by at most 2x
    fam_a = strat.families["A"]["points"]
    fam_sym = sym.families["A"]["points"]
    lhs = 0.0
    rhs = 0.0
    for uu, sub in fam_a.items():
        Gu = fam_sym[uu]
        GB = unsymmetrize_measurement(Gu, "B")
        for o in sub.outcomes:
            for o2 in sub.outcomes:
                if o == o2:
                    continue
                lhs += expect_joint(sub.op(o), GB.op(o2), strat.Psi).real
                rhs += expect_joint(Gu.op(o), Gu.op(o2), sym.Psi).real
    assert lhs <= 2 * rhs + 1e-9


def test_quantum_validation_rejects_bad_state():
    from lidtest.protocol import ProtocolError

    params = make_params(2, 1, 1)
    _, s = random_honest(params, 17)
    q = classical_to_quantum(s)
    with pytest.raises(ProtocolError):
        type(q)(params, q.Psi * 2, q.families, symmetric=True)
