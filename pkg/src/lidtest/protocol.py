"""The two-prover low individual degree test: question distribution with
exact rational masses, transcripts, and verdicts.

Subtests: 'axis' (point vs axis-parallel line), 'selfcons' (same point to
both players), 'diag' (point vs general line whose direction has a bounded
number of free leading coordinates).  Probabilities are fractions.Fraction
end to end; floating point never enters this layer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .gf import GF
from .polyspace import (
    AxisLine,
    DiagonalLine,
    Point,
    SizeGuardError,
    UniPoly,
    point,
)

SUPPORT_GUARD = 10 ** 6

AXIS, SELFCONS, DIAG = "axis", "selfcons", "diag"
SUBTESTS = (AXIS, SELFCONS, DIAG)
ROLES = ("A", "B")


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class TestParams:
    __test__ = False  # keep pytest collection away

    field: GF
    m: int
    d: int
    weights: tuple = dc_field(
        default=(Fraction(1, 3), Fraction(1, 3), Fraction(1, 3))
    )

    def __post_init__(self):
        if self.m < 1 or self.d < 0:
            raise ProtocolError("need m >= 1 and d >= 0")
        w = tuple(Fraction(x) for x in self.weights)
        if any(x < 0 for x in w) or sum(w) != 1:
            raise ProtocolError("subtest weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", w)

    @property
    def q(self):
        return self.field.q

    def weight(self, subtest):
        return self.weights[SUBTESTS.index(subtest)]


@dataclass(frozen=True)
class PointQ:
    u: Point


@dataclass(frozen=True)
class AxisLineQ:
    line: AxisLine


@dataclass(frozen=True)
class DiagLineQ:
    line: DiagonalLine


@dataclass(frozen=True)
class Value:
    a: object  # FieldElement


@dataclass(frozen=True)
class Poly:
    f: UniPoly


def answer_bound(params: TestParams, question):
    """Expected UniPoly degree bound for a line question (None for values)."""
    if isinstance(question, AxisLineQ):
        return params.d
    if isinstance(question, DiagLineQ):
        return None if question.line.degenerate else params.m * params.d
    return None


@dataclass(frozen=True)
class RoundSample:
    subtest: str
    question_a: object
    question_b: object
    mass: Fraction

    @property
    def line_role(self):
        """Which player holds the line question, or None for selfcons."""
        if isinstance(self.question_a, (AxisLineQ, DiagLineQ)):
            return "A"
        if isinstance(self.question_b, (AxisLineQ, DiagLineQ)):
            return "B"
        return None


def _check_support(params: TestParams):
    q, m = params.q, params.m
    size = q ** m + 2 * m * q ** m + 2 * m * q ** m * q ** m
    if size > SUPPORT_GUARD:
        raise SizeGuardError(f"question support ~{size} exceeds the cap")


def _assign(role, line_q, point_q):
    return (line_q, point_q) if role == "A" else (point_q, line_q)


def axis_rounds(params: TestParams, weight=None):
    f, m = params.field, params.m
    weight = params.weight(AXIS) if weight is None else weight
    if weight == 0:
        return
    base = weight * Fraction(1, 2) * Fraction(1, f.q ** m) * Fraction(1, m)
    for role in ROLES:
        for ints in itertools.product(range(f.q), repeat=m):
            u = point(f, ints)
            for i in range(m):
                line = AxisLine.through(u, i)
                qa, qb = _assign(role, AxisLineQ(line), PointQ(u))
                yield RoundSample(AXIS, qa, qb, base)


def selfcons_rounds(params: TestParams, weight=None):
    f, m = params.field, params.m
    weight = params.weight(SELFCONS) if weight is None else weight
    if weight == 0:
        return
    base = weight * Fraction(1, f.q ** m)
    for ints in itertools.product(range(f.q), repeat=m):
        u = point(f, ints)
        yield RoundSample(SELFCONS, PointQ(u), PointQ(u), base)


def diag_rounds(params: TestParams, weight=None, restrict_i=None):
    """Diagonal-test support; restrict_i (1-based direction count) conditions
    on that draw and renormalizes, matching the restricted variant."""
    f, m = params.field, params.m
    weight = params.weight(DIAG) if weight is None else weight
    if weight == 0:
        return
    i_values = range(1, m + 1) if restrict_i is None else (restrict_i,)
    i_mass = Fraction(1, m) if restrict_i is None else Fraction(1)
    for role in ROLES:
        for ints in itertools.product(range(f.q), repeat=m):
            u = point(f, ints)
            for i in i_values:
                v_mass = Fraction(1, f.q ** i)
                for v_ints in itertools.product(range(f.q), repeat=i):
                    v = point(f, tuple(v_ints) + (0,) * (m - i))
                    line = DiagonalLine.through(u, v)
                    qa, qb = _assign(role, DiagLineQ(line), PointQ(u))
                    mass = weight * Fraction(1, 2) * Fraction(1, f.q ** m) * i_mass * v_mass
                    yield RoundSample(DIAG, qa, qb, mass)


def enumerate_rounds(params: TestParams):
    """Exact support of the full question distribution."""
    _check_support(params)
    yield from axis_rounds(params)
    yield from selfcons_rounds(params)
    yield from diag_rounds(params)


def restricted_diag_distribution(params: TestParams, j: int):
    """Diagonal test conditioned on the direction count being j (1 <= j <= m)."""
    if not 1 <= j <= params.m:
        raise ProtocolError(f"direction count {j} out of range 1..{params.m}")
    _check_support(params)
    yield from diag_rounds(params, weight=Fraction(1), restrict_i=j)


def _line_question(sample: RoundSample):
    q = sample.question_a if sample.line_role == "A" else sample.question_b
    return q.line


def _point_question(sample: RoundSample):
    q = sample.question_b if sample.line_role == "A" else sample.question_a
    return q.u


def verdict(sample: RoundSample, answers) -> bool:
    """Accept/reject a transcript; raises ProtocolError on malformed answers."""
    ans_a, ans_b = answers
    if sample.subtest == SELFCONS:
        if not (isinstance(ans_a, Value) and isinstance(ans_b, Value)):
            raise ProtocolError("self-consistency answers must be values")
        return ans_a.a == ans_b.a
    line_ans = ans_a if sample.line_role == "A" else ans_b
    point_ans = ans_b if sample.line_role == "A" else ans_a
    if not isinstance(point_ans, Value):
        raise ProtocolError("point answer must be a value")
    line = _line_question(sample)
    u = _point_question(sample)
    if isinstance(line, DiagonalLine) and line.degenerate:
        # single-point line: the answer collapses to one value
        if not isinstance(line_ans, Value):
            raise ProtocolError("degenerate-line answer must be a value")
        return line_ans.a == point_ans.a
    if not isinstance(line_ans, Poly):
        raise ProtocolError("line answer must be a polynomial")
    t = line.param_of(u)
    return line_ans.f(t) == point_ans.a


def check_answer_format(params: TestParams, question, answer):
    """Degree-bound and shape validation for one answer."""
    if isinstance(question, PointQ):
        if not isinstance(answer, Value):
            raise ProtocolError("point questions take value answers")
        return
    bound = answer_bound(params, question)
    if bound is None:
        if not isinstance(answer, Value):
            raise ProtocolError("degenerate-line questions take value answers")
        return
    if not isinstance(answer, Poly):
        raise ProtocolError("line questions take polynomial answers")
    if answer.f.degree() > bound:
        raise ProtocolError(
            f"line answer degree {answer.f.degree()} exceeds bound {bound}"
        )


def total_mass(samples) -> Fraction:
    return sum((s.mass for s in samples), Fraction(0))
