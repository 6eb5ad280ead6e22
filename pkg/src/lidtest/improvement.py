"""Self-improvement: from a polynomial-valued measurement G that is
nu-consistent with the points family A, build the conjugated sub-measurement

    H_h = E_u  A^u_{h(u)} . T_h . A^u_{h(u)},

where T is the primal optimum of the improvement program, and measure the
four guarantees (completeness, consistency with A, strong self-consistency,
boundedness by the dual optimum Z) against the common error budget

    zeta = 3000 m (eps^{1/32} + delta^{1/32} + (d/q)^{1/32}).

The projective variant chains this with orthogonalization and re-measures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measurements import (
    SubMeasurement,
    consistency,
    expect_joint,
    state_distance,
    strong_self_consistency_deficit,
)
from .orthogonalize import orthogonalize
from .polyspace import all_points, enumerate_polyspace
from .protocol import TestParams
from .sdp import SdpInstance, SdpSolution, solve
from .strategies import QuantumStrategy, pass_probabilities


def zeta_budget(params: TestParams, eps: float, delta: float) -> float:
    eps, delta = max(eps, 0.0), max(delta, 0.0)
    base = eps ** (1 / 32) + delta ** (1 / 32) + (params.d / params.q) ** (1 / 32)
    return 3000.0 * params.m * base


def build_instance(strategy: QuantumStrategy, params: TestParams = None) -> SdpInstance:
    """Constraint operators A_g = E_u A^u_{g(u)} over the whole space."""
    params = params or strategy.params
    f, m, d = params.field, params.m, params.d
    polys = tuple(enumerate_polyspace(f, m, d))
    points = strategy.families["A"]["points"]
    dim = strategy.dims[0]
    M = f.q ** m
    ops = np.zeros((len(polys), dim, dim), dtype=complex)
    for u in all_points(f, m):
        sub = points[u]
        for n, g in enumerate(polys):
            ops[n] += sub.op(g(u))
    ops /= M
    return SdpInstance(polys, ops)


def _eval_family(H: SubMeasurement, u) -> SubMeasurement:
    return H.post_process(lambda g: g(u))


@dataclass
class ImprovementReport:
    nu: float
    zeta: float
    completeness: float
    completeness_bound: float
    consistency_with_points: float
    self_consistency_deficit: float
    boundedness: float
    min_constraint_slack: float
    sdp: dict
    vacuous: bool = False
    extras: dict = field(default_factory=dict)

    def margins(self):
        return {
            "completeness": self.completeness - self.completeness_bound,
            "consistency_with_points": self.zeta - self.consistency_with_points,
            "self_consistency": self.zeta - self.self_consistency_deficit,
            "boundedness": self.zeta - self.boundedness,
        }

    def as_dict(self):
        out = {
            "nu": self.nu,
            "zeta": self.zeta,
            "completeness": self.completeness,
            "completeness_bound": self.completeness_bound,
            "consistency_with_points": self.consistency_with_points,
            "self_consistency_deficit": self.self_consistency_deficit,
            "boundedness": self.boundedness,
            "min_constraint_slack": self.min_constraint_slack,
            "vacuous": self.vacuous,
            "margins": self.margins(),
            "sdp": self.sdp,
        }
        out.update(self.extras)
        return out


def measure_points_consistency(strategy: QuantumStrategy, G: SubMeasurement) -> float:
    """E_u sum_{a != b} <psi| A^u_a (x) G_{[g(u)=b]} |psi>."""
    params = strategy.params
    points = strategy.families["A"]["points"]
    Psi = strategy.Psi
    us = list(points)
    w = 1.0 / len(us)
    fam_a = {u: points[u] for u in us}
    fam_g = {u: _eval_family(G, u) for u in us}
    return consistency(fam_a, fam_g, Psi, [(u, w) for u in us])


def improve(strategy: QuantumStrategy, G: SubMeasurement, gap_tol=1e-7):
    """Returns (H family, Z, ImprovementReport)."""
    params = strategy.params
    if not strategy.symmetric or not strategy.projective:
        raise ValueError("self-improvement expects a symmetric projective strategy")
    Psi = strategy.Psi
    nu = measure_points_consistency(strategy, G)
    good = pass_probabilities(strategy, params)
    eps, delta, _ = good.as_floats()
    zeta = zeta_budget(params, eps, delta)

    instance = build_instance(strategy, params)
    sol = solve(instance, gap_tol=gap_tol)
    polys = instance.outcomes
    points = strategy.families["A"]["points"]
    dim = strategy.dims[0]
    M = params.q ** params.m

    ops = np.zeros((len(polys), dim, dim), dtype=complex)
    for u in all_points(params.field, params.m):
        sub = points[u]
        for n, h in enumerate(polys):
            a_op = sub.op(h(u))
            ops[n] += a_op @ sol.T[n] @ a_op
    ops /= M
    H = SubMeasurement(polys, ops)  # validates PSD and total <= I

    report = _measure_four_properties(strategy, H, sol, nu, zeta)
    return H, sol.Z, report


def _measure_four_properties(strategy, H, sol: SdpSolution, nu, zeta):
    params = strategy.params
    Psi = strategy.Psi
    completeness = expect_joint(H.total(), np.eye(strategy.dims[1]), Psi).real
    cons = measure_points_consistency(strategy, H)
    x = "x"
    deficit = strong_self_consistency_deficit({x: H}, Psi, [(x, 1.0)])
    bound_val = expect_joint(
        sol.Z, np.eye(strategy.dims[1]) - H.total(), Psi
    ).real
    return ImprovementReport(
        nu=nu,
        zeta=zeta,
        completeness=float(completeness),
        completeness_bound=(1.0 - nu) - zeta,
        consistency_with_points=float(cons),
        self_consistency_deficit=float(deficit),
        boundedness=float(bound_val),
        min_constraint_slack=sol.min_constraint_slack,
        sdp=sol.residual_summary(),
        vacuous=zeta >= 1.0,
    )


def projective_improve(strategy: QuantumStrategy, G: SubMeasurement, gap_tol=1e-7):
    """improve followed by orthogonalization; the four properties are
    re-measured for the projective output against the same zeta budget."""
    H, Z, report = improve(strategy, G, gap_tol=gap_tol)
    P, ortho_report = orthogonalize(H, strategy.Psi)
    sol_like = _ZWrap(Z, report.min_constraint_slack, report.sdp)
    proj_report = _measure_four_properties(strategy, P, sol_like, report.nu, report.zeta)
    # for projective families the two-sided distance form of self-consistency
    # is the meaningful one; record it alongside the deficit
    x = "x"
    from .measurements import cross_state_distance

    proj_report.extras["self_consistency_cross_distance"] = cross_state_distance(
        {x: P}, {x: P}, strategy.Psi, [(x, 1.0)]
    )
    proj_report.extras["orthogonalization"] = ortho_report.as_dict()
    proj_report.extras["pre_projective"] = report.as_dict()
    return P, Z, proj_report


class _ZWrap:
    def __init__(self, Z, min_slack, sdp_summary):
        self.Z = Z
        self.min_constraint_slack = min_slack
        self._summary = sdp_summary

    def residual_summary(self):
        return self._summary


# convenience for reporting


def improvement_margins_ok(report: ImprovementReport, tol=1e-7) -> bool:
    return all(v >= -tol for v in report.margins().values())
