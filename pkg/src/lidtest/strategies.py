"""Prover strategies: classical tables, quantum operator families, exact
pass probabilities, symmetrization, and the canonical adversarial example.

Classical strategies are explicit tables keyed by canonical questions and
evaluated with exact rational probability accounting.  Quantum strategies
carry a bipartite state matrix plus per-question SubMeasurement families and
are evaluated by exact dense contraction over the enumerated support.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .gf import GF
from .measurements import (
    SubMeasurement,
    diagonal_indicator_family,
    expect_joint,
    is_swap_invariant,
)
from .polyspace import (
    AxisLine,
    DiagonalLine,
    MultiPoly,
    Point,
    UniPoly,
    all_points,
    enumerate_polyspace,
    point,
    restrict_axis,
    restrict_diagonal,
)
from .protocol import (
    AXIS,
    DIAG,
    SELFCONS,
    AxisLineQ,
    DiagLineQ,
    PointQ,
    Poly,
    ProtocolError,
    TestParams,
    Value,
    check_answer_format,
    enumerate_rounds,
    verdict,
)

QUANTUM_DIM_CAP = 64


@dataclass
class Goodness:
    """Failure probabilities of the three subtests (exact for classical)."""

    eps: object
    delta: object
    gamma: object

    def as_floats(self):
        return float(self.eps), float(self.delta), float(self.gamma)

    def max(self):
        return max(self.as_floats())


class ClassicalStrategy:
    """Total answer tables, optionally distinct per role."""

    def __init__(self, params: TestParams, points_fn, axis_fn, diag_fn,
                 points_fn_b=None, axis_fn_b=None, diag_fn_b=None):
        self.params = params
        self.tables = {
            "A": (points_fn, axis_fn, diag_fn),
            "B": (
                points_fn_b if points_fn_b is not None else points_fn,
                axis_fn_b if axis_fn_b is not None else axis_fn,
                diag_fn_b if diag_fn_b is not None else diag_fn,
            ),
        }
        self.symmetric = points_fn_b is None and axis_fn_b is None and diag_fn_b is None

    def answer(self, role, question):
        points_fn, axis_fn, diag_fn = self.tables[role]
        if isinstance(question, PointQ):
            ans = Value(points_fn[question.u])
        elif isinstance(question, AxisLineQ):
            ans = Poly(axis_fn[question.line])
        elif isinstance(question, DiagLineQ):
            raw = diag_fn[question.line]
            ans = raw if isinstance(raw, Value) else Poly(raw)
        else:
            raise ProtocolError(f"unknown question {question!r}")
        check_answer_format(self.params, question, ans)
        return ans

    def answers(self, sample):
        return (self.answer("A", sample.question_a),
                self.answer("B", sample.question_b))


def honest_strategy(params: TestParams, g: MultiPoly) -> ClassicalStrategy:
    """Answer every question from the fixed polynomial g."""
    from .protocol import _check_support

    _check_support(params)  # table size tracks the question support
    f = params.field
    points_fn = {}
    for u in all_points(f, params.m):
        points_fn[u] = g(u)
    axis_fn = {}
    for u in all_points(f, params.m):
        for i in range(params.m):
            line = AxisLine.through(u, i)
            if line not in axis_fn:
                axis_fn[line] = restrict_axis(g, line)
    diag_fn = {}
    for u in all_points(f, params.m):
        for v in all_points(f, params.m):
            line = DiagonalLine.through(u, v)
            if line in diag_fn:
                continue
            if line.degenerate:
                diag_fn[line] = Value(g(line.base))
            else:
                diag_fn[line] = restrict_diagonal(g, line).rebound(params.m * params.d)
    return ClassicalStrategy(params, points_fn, axis_fn, diag_fn)


def example_adversary(params: TestParams) -> ClassicalStrategy:
    """The degree-(d+1) points function x_1^{d+1} paired with give-up axis
    answers in the first direction; passes with probability 1 - 1/m on the
    axis subtest yet is far from every admissible polynomial."""
    from .protocol import _check_support

    _check_support(params)
    f, m, d = params.field, params.m, params.d
    if d + 1 > f.q - 1:
        raise ProtocolError("need d + 1 <= q - 1 so the points function is "
                            "outside the admissible space")
    h = MultiPoly.from_terms(f, m, d + 1, {(d + 1,) + (0,) * (m - 1): 1})
    points_fn = {u: h(u) for u in all_points(f, m)}
    axis_fn = {}
    for u in all_points(f, m):
        for i in range(m):
            line = AxisLine.through(u, i)
            if line in axis_fn:
                continue
            if i == 0:
                axis_fn[line] = UniPoly(f, [0], bound=d)  # give up
            else:
                restricted = restrict_diagonal(
                    h, DiagonalLine.through(line.base, _unit(f, m, i))
                )
                axis_fn[line] = UniPoly(f, restricted.coeffs, bound=d)
    diag_fn = {}
    for u in all_points(f, m):
        for v in all_points(f, m):
            line = DiagonalLine.through(u, v)
            if line in diag_fn:
                continue
            if line.degenerate:
                diag_fn[line] = Value(h(line.base))
            else:
                diag_fn[line] = restrict_diagonal(h, line).rebound(m * d)
    return ClassicalStrategy(params, points_fn, axis_fn, diag_fn)


def _unit(f, m, i):
    ints = [0] * m
    ints[i] = 1
    return point(f, ints)


def adversary_points_polynomial(params: TestParams) -> MultiPoly:
    f, m, d = params.field, params.m, params.d
    return MultiPoly.from_terms(f, m, d + 1, {(d + 1,) + (0,) * (m - 1): 1})


class RandomizedClassicalStrategy:
    """Distribution over deterministic tables (the shared-seed picture)."""

    def __init__(self, weighted_tables):
        self.weighted_tables = [(Fraction(w), s) for w, s in weighted_tables]
        if sum(w for w, _ in self.weighted_tables) != 1:
            raise ProtocolError("table weights must sum to 1")
        self.params = self.weighted_tables[0][1].params


class QuantumStrategy:
    """Bipartite state plus per-question measurement families per role."""

    def __init__(self, params: TestParams, Psi, families, symmetric=None,
                 projective=False, check=True):
        self.params = params
        self.Psi = np.asarray(Psi, dtype=complex)
        self.families = families  # {role: {'points': {...}, 'axis': {...}, 'diag': {...}}}
        self.projective = projective
        if symmetric is None:
            symmetric = families.get("A") is families.get("B")
        self.symmetric = symmetric
        if check:
            self.validate()

    @property
    def dims(self):
        return self.Psi.shape

    def family(self, role, question):
        fams = self.families[role]
        if isinstance(question, PointQ):
            return fams["points"][question.u]
        if isinstance(question, AxisLineQ):
            return fams["axis"][question.line]
        if isinstance(question, DiagLineQ):
            return fams["diag"][question.line]
        raise ProtocolError(f"unknown question {question!r}")

    def validate(self):
        da, db = self.Psi.shape
        if da > QUANTUM_DIM_CAP or db > QUANTUM_DIM_CAP:
            raise ProtocolError(f"dimension exceeds the {QUANTUM_DIM_CAP} cap")
        norm = float(np.sum(np.abs(self.Psi) ** 2))
        if abs(norm - 1.0) > 1e-9:
            raise ProtocolError(f"state norm {norm:.2e} != 1")
        for role, fams in self.families.items():
            dim = da if role == "A" else db
            for group in fams.values():
                for sub in group.values():
                    sub.validate()
                    if sub.dim != dim:
                        raise ProtocolError("family dimension mismatch")
                    if not sub.is_measurement():
                        raise ProtocolError("strategy families must be measurements")
                    if self.projective and not sub.is_projective():
                        raise ProtocolError("projective flag violated")
        if self.symmetric:
            if not is_swap_invariant(self.Psi):
                raise ProtocolError("symmetric strategy needs a swap-invariant state")
            if self.families["A"] is not self.families["B"]:
                raise ProtocolError("symmetric strategy shares one family table")
        return self


def _accept_probability_quantum(strategy: QuantumStrategy, sample) -> float:
    """Exact acceptance probability of one round by dense contraction."""
    Psi = strategy.Psi
    fam_a = strategy.family("A", sample.question_a)
    fam_b = strategy.family("B", sample.question_b)
    if sample.subtest == SELFCONS:
        total = 0.0
        for o in fam_a.outcomes:
            if o in fam_b:
                total += expect_joint(fam_a.op(o), fam_b.op(o), Psi).real
        return total
    line_q = sample.question_a if sample.line_role == "A" else sample.question_b
    u = (sample.question_b if sample.line_role == "A" else sample.question_a).u
    line = line_q.line
    f = strategy.params.field
    if isinstance(line, DiagonalLine) and line.degenerate:
        eval_fn = lambda val: val  # value answers compare directly
    else:
        # line outcomes are coefficient tuples; evaluate at u's parameter
        t = line.param_of(u)
        eval_fn = lambda key: UniPoly(f, key)(t)
    line_fam = (fam_a if sample.line_role == "A" else fam_b).post_process(eval_fn)
    point_fam = fam_b if sample.line_role == "A" else fam_a
    total = 0.0
    for o in point_fam.outcomes:
        if o in line_fam:
            left = line_fam.op(o) if sample.line_role == "A" else point_fam.op(o)
            right = point_fam.op(o) if sample.line_role == "A" else line_fam.op(o)
            total += expect_joint(left, right, Psi).real
    return total


def pass_probabilities(strategy, params: TestParams = None) -> Goodness:
    """Per-subtest failure probabilities, conditional on the subtest."""
    if isinstance(strategy, RandomizedClassicalStrategy):
        parts = [
            (w, pass_probabilities(s, params)) for w, s in strategy.weighted_tables
        ]
        return Goodness(
            sum(w * g.eps for w, g in parts),
            sum(w * g.delta for w, g in parts),
            sum(w * g.gamma for w, g in parts),
        )
    params = params or strategy.params
    quantum = isinstance(strategy, QuantumStrategy)
    fail = {AXIS: 0.0 if quantum else Fraction(0),
            SELFCONS: 0.0 if quantum else Fraction(0),
            DIAG: 0.0 if quantum else Fraction(0)}
    mass = dict(fail)
    for sample in enumerate_rounds(params):
        mass[sample.subtest] += sample.mass
        if quantum:
            p_acc = _accept_probability_quantum(strategy, sample)
            fail[sample.subtest] += float(sample.mass) * (1.0 - p_acc)
        else:
            if not verdict(sample, strategy.answers(sample)):
                fail[sample.subtest] += sample.mass

    def norm(sub):
        if mass[sub] == 0:
            return Fraction(0)
        if quantum:
            return fail[sub] / float(mass[sub])
        return fail[sub] / mass[sub]

    return Goodness(norm(AXIS), norm(SELFCONS), norm(DIAG))


def pass_probabilities_monte_carlo(strategy, params, n_samples, seed):
    """Sampling estimator with binomial standard errors, for scaling only."""
    rng = np.random.default_rng(seed)
    samples = list(enumerate_rounds(params))
    masses = np.array([float(s.mass) for s in samples])
    masses /= masses.sum()
    counts = {AXIS: [0, 0], SELFCONS: [0, 0], DIAG: [0, 0]}
    idx = rng.choice(len(samples), size=n_samples, p=masses)
    quantum = isinstance(strategy, QuantumStrategy)
    for i in idx:
        s = samples[i]
        if quantum:
            ok = rng.random() < _accept_probability_quantum(strategy, s)
        else:
            ok = verdict(s, strategy.answers(s))
        counts[s.subtest][0] += 1
        counts[s.subtest][1] += 0 if ok else 1
    out = {}
    for sub, (n, bad) in counts.items():
        if n == 0:
            out[sub] = (float("nan"), float("nan"))
        else:
            p = bad / n
            out[sub] = (p, float(np.sqrt(max(p * (1 - p), 1.0 / n) / n)))
    return out


def transcript_records(strategy, params: TestParams = None):
    """Audit records, one per support sample: subtest, role holding the
    line, questions, answers, verdict, and exact mass."""
    from .polyspace import AxisLine

    params = params or strategy.params
    if isinstance(strategy, QuantumStrategy):
        raise ProtocolError("transcripts are defined for deterministic tables")

    def describe(question):
        if isinstance(question, PointQ):
            return {"kind": "point", "u": [c.coeffs for c in question.u]}
        line = question.line
        if isinstance(line, AxisLine):
            return {
                "kind": "axis_line",
                "axis": line.axis,
                "base": [c.coeffs for c in line.base],
            }
        return {
            "kind": "diag_line",
            "base": [c.coeffs for c in line.base],
            "dir": [c.coeffs for c in line.direction],
        }

    def describe_answer(ans):
        if isinstance(ans, Value):
            return {"value": ans.a.coeffs}
        return {"coeffs": [list(params.field.element(c).coeffs)
                           for c in ans.f.coeffs]}

    for sample in enumerate_rounds(params):
        answers = strategy.answers(sample)
        yield {
            "subtest": sample.subtest,
            "role": sample.line_role,
            "question_a": describe(sample.question_a),
            "question_b": describe(sample.question_b),
            "answer_a": describe_answer(answers[0]),
            "answer_b": describe_answer(answers[1]),
            "accept": verdict(sample, answers),
            "mass": str(sample.mass),
        }


def export_transcript(strategy, path, params: TestParams = None):
    """Write the audit transcript as JSON lines."""
    import json

    count = 0
    with open(path, "w") as fh:
        for record in transcript_records(strategy, params):
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            count += 1
    return count


def axis_failure_pessimistic(strategy: ClassicalStrategy, params: TestParams) -> Fraction:
    """Axis failure where every round whose line runs in the first direction
    counts as a loss (the accounting under which the adversary fails 1/m)."""
    fail = Fraction(0)
    mass = Fraction(0)
    for sample in enumerate_rounds(params):
        if sample.subtest != AXIS:
            continue
        mass += sample.mass
        line = (sample.question_a if sample.line_role == "A" else sample.question_b).line
        if line.axis == 0:
            fail += sample.mass
        elif not verdict(sample, strategy.answers(sample)):
            fail += sample.mass
    return fail / mass


def best_polyspace_agreement(params: TestParams, points_fn) -> Fraction:
    """max_g Pr_u[g(u) = points_fn(u)] over the whole admissible space,
    by exhaustive vectorized evaluation."""
    from .polyspace import point_index, value_table

    f, m, d = params.field, params.m, params.d
    table = value_table(f, m, d)
    target = np.zeros(table.shape[1], dtype=np.int64)
    for u, a in points_fn.items():
        target[point_index(u)] = a.i
    hits = (table == target[None, :]).sum(axis=1)
    return Fraction(int(hits.max()), table.shape[1])


# ---- quantum constructions ----------------------------------------------------


def classical_to_quantum(strategy: ClassicalStrategy) -> QuantumStrategy:
    """Embed a deterministic strategy as commuting diagonal projectors."""
    return shared_randomness_strategy(
        strategy.params, [(Fraction(1), strategy)]
    )


def shared_randomness_strategy(params: TestParams, weighted_tables) -> QuantumStrategy:
    """Diagonal quantum embedding of a distribution over deterministic tables:
    psi = sum_i sqrt(w_i) |ii> and indicator projector families."""
    n = len(weighted_tables)
    weights = np.array([float(w) for w, _ in weighted_tables])
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ProtocolError("weights must sum to 1")
    if not all(s.symmetric for _, s in weighted_tables):
        raise ProtocolError("diagonal embedding expects symmetric tables")
    Psi = np.diag(np.sqrt(weights)).astype(complex)
    strategies = [s for _, s in weighted_tables]

    def fam_for(role, kind, key, outcomes):
        assignment = []
        for s in strategies:
            points_fn, axis_fn, diag_fn = s.tables[role]
            if kind == "points":
                assignment.append(points_fn[key])
            elif kind == "axis":
                assignment.append(axis_fn[key].key())
            else:
                raw = diag_fn[key]
                assignment.append(raw.a if isinstance(raw, Value) else raw.key())
        return diagonal_indicator_family(outcomes, assignment, n)

    f, m = params.field, params.m
    fams = {"points": {}, "axis": {}, "diag": {}}
    value_outcomes = tuple(f.elements())
    for u in all_points(f, m):
        fams["points"][u] = fam_for("A", "points", u, value_outcomes)
    axis_outcomes = _unipoly_keys(f, params.d)
    for u in all_points(f, m):
        for i in range(m):
            line = AxisLine.through(u, i)
            if line not in fams["axis"]:
                fams["axis"][line] = fam_for("A", "axis", line, axis_outcomes)
    diag_outcomes = _unipoly_keys(f, m * params.d)
    for u in all_points(f, m):
        for v in all_points(f, m):
            line = DiagonalLine.through(u, v)
            if line not in fams["diag"]:
                outs = value_outcomes if line.degenerate else diag_outcomes
                fams["diag"][line] = fam_for("A", "diag", line, outs)
    shared = fams
    return QuantumStrategy(
        params, Psi, {"A": shared, "B": shared}, symmetric=True, projective=True
    )


def _unipoly_keys(f, bound):
    # outcome labels for degree-<=bound univariate answers: coefficient tuples
    if f.q ** (bound + 1) > 10 ** 6:
        raise ProtocolError("answer alphabet too large to enumerate")
    return tuple(itertools.product(range(f.q), repeat=bound + 1))


def symmetrize(strategy: QuantumStrategy) -> QuantumStrategy:
    """Role-register construction: dimension doubles, the state becomes
    swap-invariant, and each family acts blockwise per role."""
    da, db = strategy.dims
    if da != db:
        raise ProtocolError("symmetrization needs equal local dimensions")
    d = da
    Psi = np.zeros((2 * d, 2 * d), dtype=complex)
    # |0>|1> psi + |1>|0> psi_swap, normalized
    Psi[0:d, d:2 * d] = strategy.Psi / np.sqrt(2)
    Psi[d:2 * d, 0:d] = strategy.Psi.T / np.sqrt(2)

    def sym_family(group):
        out = {}
        keys = set(strategy.families["A"][group]) | set(strategy.families["B"][group])
        for key in keys:
            fa = strategy.families["A"][group][key]
            fb = strategy.families["B"][group][key]
            labels = list(fa.outcomes) + [o for o in fb.outcomes if o not in fa]
            ops = []
            for o in labels:
                op = np.zeros((2 * d, 2 * d), dtype=complex)
                op[0:d, 0:d] = fa.op(o)
                op[d:2 * d, d:2 * d] = fb.op(o)
                ops.append(op)
            out[key] = SubMeasurement(tuple(labels), np.array(ops), check=False)
        return out

    shared = {g: sym_family(g) for g in ("points", "axis", "diag")}
    return QuantumStrategy(
        strategy.params,
        Psi,
        {"A": shared, "B": shared},
        symmetric=True,
        projective=strategy.projective,
    )


def unsymmetrize_measurement(sub: SubMeasurement, role: str) -> SubMeasurement:
    """Compress a block measurement on C^2 (x) C^d back to one role's block;
    completeness survives the compression."""
    d = sub.dim // 2
    sl = slice(0, d) if role == "A" else slice(d, 2 * d)
    ops = np.array([op[sl, sl] for op in sub.ops])
    return SubMeasurement(sub.outcomes, ops, check=False)


def polyspace_outcomes(f: GF, m, d):
    return tuple(enumerate_polyspace(f, m, d))
