import numpy as np
import pytest

from lidtest.gf import field, field_for_order
from lidtest.hypercube import (
    HypercubeGraph,
    global_variance,
    local_variance,
    poincare_report,
    points_variance_diagnostics,
    verify_eigensystem,
)
from lidtest.instances import random_point_family, random_symmetric_state, rng_for
from lidtest.polyspace import all_points


def test_adjacency_m1_q2():
    g = HypercubeGraph(field(2), 1)
    K = g.adjacency()
    assert np.allclose(K, np.full((2, 2), 0.25))
    L = g.laplacian()
    assert np.allclose(L, 0.25 * np.array([[1, -1], [-1, 1]]))


def test_row_sums_stochastic():
    for q, m in [(2, 2), (3, 2), (2, 3)]:
        g = HypercubeGraph(field_for_order(q), m)
        K = g.adjacency()
        M = g.size
        assert np.allclose((M * K).sum(axis=1), 1.0)
        # laplacian kernel contains the all-ones vector
        assert np.abs(g.laplacian() @ np.ones(M)).max() < 1e-12


def test_symmetric_edge_distribution():
    g = HypercubeGraph(field(3), 2)
    K = g.adjacency()
    assert np.allclose(K, K.T)


@pytest.mark.parametrize("q,m", [(2, 1), (2, 2), (3, 2), (2, 3), (4, 2), (9, 1)])
def test_character_eigensystem(q, m):
    g = HypercubeGraph(field_for_order(q), m)
    res = verify_eigensystem(g)
    assert res["ok"]
    assert res["reconstruction_frobenius"] < 1e-9


def test_eigenvalue_formula_examples():
    g = HypercubeGraph(field(2), 2)  # M = 4
    system = g.character_eigensystem()
    lams = {}
    for alpha, lam, _ in system:
        weight = sum(1 for c in alpha if c.i)
        lams.setdefault(weight, set()).add(round(lam, 12))
    assert lams[0] == {round(1 / 4, 12)}
    assert lams[1] == {round(1 / 8, 12)}
    assert lams[2] == {0.0}


@pytest.mark.parametrize("q,m", [(2, 1), (2, 2), (3, 2), (2, 3)])
def test_spectral_gap(q, m):
    g = HypercubeGraph(field_for_order(q), m)
    M = g.size
    assert abs(g.spectral_gap() - 1 / (m * M)) < 1e-12
    # cross-check against a dense eigensolver
    lams = np.sort(np.linalg.eigvalsh(g.laplacian()))
    assert abs(lams[0]) < 1e-12
    assert abs(lams[1] - 1 / (m * M)) < 1e-10


def test_constant_family_zero_variance():
    f = field(2)
    g = HypercubeGraph(f, 2)
    op = np.array([[0.3, 0.1], [0.1, 0.5]], dtype=complex)
    fam = {u: op for u in all_points(f, 2)}
    Psi = random_symmetric_state(rng_for(0), 2)
    assert local_variance(fam, Psi, g) == pytest.approx(0.0, abs=1e-14)
    assert global_variance(fam, Psi, g) == pytest.approx(0.0, abs=1e-14)


def test_poincare_random_instances():
    f = field(3)
    g = HypercubeGraph(f, 2)
    rng = rng_for(1)
    from lidtest.protocol import TestParams

    params = TestParams(f, 2, 1)
    for _ in range(20):
        dim = int(rng.integers(2, 5))
        fam = random_point_family(rng, params, dim)
        Psi = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
        Psi /= np.linalg.norm(Psi)
        rep = poincare_report(fam, Psi, g)
        assert rep["global"] <= g.m * rep["local"] + 1e-9


def test_variance_shift_invariance():
    # adding a constant operator to each A^u changes neither variance
    f = field(2)
    g = HypercubeGraph(f, 2)
    rng = rng_for(2)
    from lidtest.protocol import TestParams

    fam = random_point_family(rng, TestParams(f, 2, 1), 3)
    Psi = random_symmetric_state(rng, 3)
    shift = 0.1 * np.eye(3)
    shifted = {u: op + shift for u, op in fam.items()}
    assert local_variance(fam, Psi, g) == pytest.approx(
        local_variance(shifted, Psi, g), abs=1e-12
    )
    assert global_variance(fam, Psi, g) == pytest.approx(
        global_variance(shifted, Psi, g), abs=1e-12
    )


def test_points_variance_honest_strategy_zero():
    from lidtest.measurements import SubMeasurement
    from lidtest.polyspace import MultiPoly
    from lidtest.protocol import TestParams
    from lidtest.strategies import classical_to_quantum, honest_strategy

    f = field(2)
    params = TestParams(f, 2, 1)
    g = MultiPoly.from_terms(f, 2, 1, {(1, 1): 1})
    strat = classical_to_quantum(honest_strategy(params, g))
    G = SubMeasurement((g,), np.eye(1, dtype=complex)[None])
    rep = points_variance_diagnostics(strat, G)
    for entry in rep.values():
        assert entry["measured"] == pytest.approx(0.0, abs=1e-12)
        assert entry["margin"] >= -1e-12


def test_points_variance_noisy_strategies_within_bounds():
    from lidtest.instances import noisy_shared_randomness_strategy
    from lidtest.measurements import diagonal_indicator_family
    from lidtest.polyspace import enumerate_polyspace
    from lidtest.protocol import TestParams

    f = field(2)
    params = TestParams(f, 2, 1)
    for seed in range(4):
        strat = noisy_shared_randomness_strategy(params, n_tables=3, n_corrupt=1,
                                                 seed=seed)
        # G guesses the honest polynomial of each table by best agreement
        from lidtest.strategies import best_polyspace_agreement

        polys = list(enumerate_polyspace(f, 2, 1))
        assignment = []
        for _, table in strat_tables(params, seed):
            pts = table.tables["A"][0]
            best = max(
                polys,
                key=lambda h: sum(1 for u, a in pts.items() if h(u) == a),
            )
            assignment.append(best)
        G = diagonal_indicator_family(tuple(polys), assignment, len(assignment))
        rep = points_variance_diagnostics(strat, G)
        for name, entry in rep.items():
            assert entry["margin"] >= -1e-9, (seed, name, entry)


def strat_tables(params, seed):
    from lidtest.instances import corrupted_tables, rng_for as _r

    return corrupted_tables(params, 3, 1, _r(seed))


def test_points_variance_adversary_embedding():
    from lidtest.gf import field
    from lidtest.measurements import SubMeasurement
    from lidtest.protocol import TestParams
    from lidtest.strategies import (
        best_polyspace_agreement,
        classical_to_quantum,
        example_adversary,
    )
    from lidtest.polyspace import enumerate_polyspace

    f = field(3)
    params = TestParams(f, 2, 1)
    strat = classical_to_quantum(example_adversary(params))
    pts = strat.families["A"]["points"]
    # G puts its single outcome on the best-agreeing admissible polynomial
    best = max(
        enumerate_polyspace(f, 2, 1),
        key=lambda h: sum(
            1 for u in pts if abs(pts[u].op(h(u))[0, 0] - 1) < 1e-9
        ),
    )
    G = SubMeasurement((best,), np.eye(1, dtype=complex)[None])
    rep = points_variance_diagnostics(strat, G)
    for name, entry in rep.items():
        assert entry["margin"] >= -1e-9, (name, entry)
