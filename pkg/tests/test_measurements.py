import numpy as np
import pytest

from lidtest.instances import (
    maximally_entangled,
    perturbed_measurement_pair,
    random_povm,
    random_projective_measurement,
    random_state,
    random_symmetric_state,
    rng_for,
)
from lidtest.measurements import (
    BOTTOM,
    MeasurementError,
    SubMeasurement,
    agreement,
    consistency,
    cross_state_distance,
    diagonal_indicator_family,
    expect_joint,
    is_swap_invariant,
    scalar_trunc_inequality_check,
    state_distance,
    strong_self_consistency_deficit,
)

X = "x"
ONE = [(X, 1.0)]


def basis_family(dim):
    ops = np.zeros((dim, dim, dim), dtype=complex)
    for j in range(dim):
        ops[j, j, j] = 1.0
    return SubMeasurement(tuple(range(dim)), ops)


def test_shared_projective_family_on_aligned_product_state():
    A = basis_family(2)
    Psi = np.zeros((2, 2), dtype=complex)
    Psi[0, 0] = 1.0
    assert consistency({X: A}, {X: A}, Psi, ONE) == pytest.approx(0.0, abs=1e-14)


def test_consistency_equals_one_minus_agreement_for_measurements():
    rng = rng_for(1)
    for _ in range(5):
        A = random_povm(rng, 4, 3)
        B = random_povm(rng, 4, 3)
        Psi = random_state(rng, 4, 4)
        c = consistency({X: A}, {X: B}, Psi, ONE)
        a = agreement({X: A}, {X: B}, Psi, ONE)
        assert c == pytest.approx(1.0 - a, abs=1e-10)


def test_maximally_mixed_family_consistency():
    for n in (2, 3, 5):
        dim = 3
        ops = np.repeat(np.eye(dim, dtype=complex)[None] / n, n, axis=0)
        A = SubMeasurement(tuple(range(n)), ops)
        Psi = random_state(rng_for(n), dim, dim)
        val = consistency({X: A}, {X: A}, Psi, ONE)
        assert val == pytest.approx((n - 1) / n, abs=1e-12)


def test_state_distance_identical_families():
    rng = rng_for(2)
    A = random_povm(rng, 3, 2)
    Psi = random_state(rng, 3, 5)
    assert state_distance({X: A}, {X: A}, Psi, ONE) == 0.0


def test_projective_cross_distance_is_twice_consistency():
    rng = rng_for(3)
    for _ in range(5):
        A, B, Psi = perturbed_measurement_pair(rng, 4, 3, noise=0.0)
        c = consistency({X: A}, {X: B}, Psi, ONE)
        d = cross_state_distance({X: A}, {X: B}, Psi, ONE)
        assert d == pytest.approx(2 * c, abs=1e-10)


def test_cross_distance_at_most_twice_consistency_for_measurements():
    rng = rng_for(4)
    for _ in range(5):
        A = random_povm(rng, 4, 3)
        B = random_povm(rng, 4, 3)
        Psi = random_state(rng, 4, 4)
        c = consistency({X: A}, {X: B}, Psi, ONE)
        d = cross_state_distance({X: A}, {X: B}, Psi, ONE)
        assert d <= 2 * c + 1e-10


def test_post_process_identity_and_grouping():
    rng = rng_for(5)
    A = random_povm(rng, 3, 4)
    same = A.post_process(lambda o: o)
    assert same.outcomes == A.outcomes
    assert np.allclose(same.ops, A.ops)
    grouped = A.post_process(lambda o: o % 2)
    assert np.allclose(grouped.total(), A.total())
    assert np.allclose(grouped.op(0), A.op(0) + A.op(2))


def test_post_process_data_processing_for_consistency():
    rng = rng_for(6)
    for _ in range(5):
        A = random_povm(rng, 4, 4)
        B = random_povm(rng, 4, 4)
        Psi = random_state(rng, 4, 4)
        before = consistency({X: A}, {X: B}, Psi, ONE)
        fn = lambda o: o % 2
        after = consistency(
            {X: A.post_process(fn)}, {X: B.post_process(fn)}, Psi, ONE
        )
        assert after <= before + 1e-10


def test_completion():
    rng = rng_for(7)
    A = random_povm(rng, 3, 3)
    hatA = A.completion()
    assert hatA.is_measurement()
    assert np.allclose(hatA.op(BOTTOM), 0.0, atol=1e-9)
    sub = SubMeasurement(A.outcomes, A.ops * 0.5)
    comp = sub.completion()
    assert comp.is_measurement()
    assert np.allclose(comp.op(BOTTOM), np.eye(3) - sub.total())


def test_strong_self_consistency_diagonal_on_epr():
    A = basis_family(3)
    Psi = maximally_entangled(3)
    assert strong_self_consistency_deficit({X: A}, Psi, ONE) == pytest.approx(0, abs=1e-12)


def test_deficit_dominates_consistency_for_sub_measurements():
    rng = rng_for(8)
    for _ in range(5):
        A = random_povm(rng, 4, 3)
        sub = SubMeasurement(A.outcomes, A.ops * rng.uniform(0.3, 0.9))
        Psi = random_symmetric_state(rng, 4)
        deficit = strong_self_consistency_deficit({X: sub}, Psi, ONE)
        cons = consistency({X: sub}, {X: sub}, Psi, ONE)
        assert cons <= deficit + 1e-10


def test_projective_cross_self_distance_is_twice_deficit():
    rng = rng_for(9)
    for _ in range(5):
        P = random_projective_measurement(rng, 4, 3)
        keep = P.ops[:2]  # a projective sub-measurement
        sub = SubMeasurement(P.outcomes[:2], keep)
        Psi = random_symmetric_state(rng, 4)
        deficit = strong_self_consistency_deficit({X: sub}, Psi, ONE)
        d = cross_state_distance({X: sub}, {X: sub}, Psi, ONE)
        assert d == pytest.approx(2 * deficit, abs=1e-10)


def test_deficit_requires_symmetric_state():
    rng = rng_for(10)
    A = random_povm(rng, 3, 2)
    Psi = random_state(rng, 3, 3)
    with pytest.raises(MeasurementError):
        strong_self_consistency_deficit({X: A}, Psi, ONE)


def test_transfer_consistency_through_state_distance():
    # measured delta and eps transfer: consistency(B, C) <= delta + sqrt(eps)
    rng = rng_for(11)
    for _ in range(8):
        A = random_povm(rng, 4, 3)
        noise = random_povm(rng, 4, 3)
        eta = rng.uniform(0, 0.2)
        B = SubMeasurement(A.outcomes, (1 - eta) * A.ops + eta * noise.ops)
        C = random_povm(rng, 4, 3)
        sub_C = SubMeasurement(C.outcomes, C.ops * 0.7)
        Psi = random_state(rng, 4, 4)
        delta = consistency({X: A}, {X: sub_C}, Psi, ONE)
        eps = state_distance({X: A}, {X: B}, Psi, ONE, side="left")
        got = consistency({X: B}, {X: sub_C}, Psi, ONE)
        assert got <= delta + np.sqrt(eps) + 1e-8


def test_triangle_inequality_with_factor_k():
    rng = rng_for(12)
    fams = []
    base = random_povm(rng, 4, 3)
    fams.append(base)
    for _ in range(3):
        noise = random_povm(rng, 4, 3)
        eta = rng.uniform(0, 0.3)
        prev = fams[-1]
        fams.append(SubMeasurement(prev.outcomes, (1 - eta) * prev.ops + eta * noise.ops))
    Psi = random_state(rng, 4, 4)
    k = len(fams) - 1
    steps = [
        state_distance({X: fams[i]}, {X: fams[i + 1]}, Psi, ONE) for i in range(k)
    ]
    end_to_end = state_distance({X: fams[0]}, {X: fams[-1]}, Psi, ONE)
    assert end_to_end <= k * sum(steps) + 1e-10


def test_swap_invariance_detector():
    rng = rng_for(13)
    assert is_swap_invariant(random_symmetric_state(rng, 4))
    Psi = random_state(rng, 4, 4)
    Psi[0, 1] += 0.5
    Psi /= np.linalg.norm(Psi)
    assert not is_swap_invariant(Psi)


def test_validation_rejects_bad_families():
    eye = np.eye(2, dtype=complex)
    with pytest.raises(MeasurementError):
        SubMeasurement((0, 1), np.array([eye, eye]))  # total = 2I
    bad = np.array([[[0, 1], [0, 0]]], dtype=complex)
    with pytest.raises(MeasurementError):
        SubMeasurement((0,), bad)  # not Hermitian


def test_diagonal_indicator_family():
    fam = diagonal_indicator_family(("a", "b"), ["a", "b", "a"], 3)
    assert fam.is_projective()
    assert fam.is_measurement()
    assert fam.op("a")[2, 2] == 1.0


def test_scalar_trunc_inequality():
    assert scalar_trunc_inequality_check(0.0, 0.25)
    assert scalar_trunc_inequality_check(0.75, 0.25)  # boundary x = 1 - delta
    for x in np.linspace(0, 1, 101):
        for delta in np.linspace(0.005, 0.5, 100):
            assert scalar_trunc_inequality_check(float(x), float(delta))


def test_expect_joint_matches_kron():
    rng = rng_for(14)
    Psi = random_state(rng, 3, 4)
    A = rng.normal(size=(3, 3))
    B = rng.normal(size=(4, 4))
    direct = np.vdot(Psi.reshape(-1), np.kron(A, B) @ Psi.reshape(-1))
    assert expect_joint(A, B, Psi) == pytest.approx(direct, abs=1e-12)
