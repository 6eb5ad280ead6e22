"""Hypercube graph over F_q^m: adjacency, Laplacian, the additive-character
eigenbasis, and the local/global variance machinery for point-indexed
operator families.

The eigenbasis is constructed analytically from characters and then verified,
never recovered from a generic eigensolver; variance sums iterate the exact
edge distribution (u, i, x) -> (u, u + x e_i)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gf import GF
from .polyspace import Point, SizeGuardError, all_points, point, point_index

VERTEX_CAP = 4096


@dataclass
class HypercubeGraph:
    field: GF
    m: int

    def __post_init__(self):
        if self.size > VERTEX_CAP:
            raise SizeGuardError(f"q^m = {self.size} exceeds the vertex cap")

    @property
    def size(self):
        return self.field.q ** self.m

    def edge_distribution(self):
        """Exact support of the edge draw: ((u_idx, v_idx), probability)."""
        f, m = self.field, self.m
        M = self.size
        w = 1.0 / (M * m * f.q)
        for u in all_points(f, m):
            ui = point_index(u)
            for i in range(m):
                for x in range(f.q):
                    coords = list(u)
                    coords[i] = coords[i] + f.element(x)
                    yield (ui, point_index(Point(coords))), w

    def adjacency(self) -> np.ndarray:
        M = self.size
        K = np.zeros((M, M))
        for (ui, vi), w in self.edge_distribution():
            K[ui, vi] += w
        return K

    def laplacian(self) -> np.ndarray:
        M = self.size
        return np.eye(M) / M - self.adjacency()

    def character_vector(self, alpha: Point) -> np.ndarray:
        f = self.field
        M = self.size
        phi = np.zeros(M, dtype=complex)
        for u in all_points(f, self.m):
            dot = 0
            for uc, ac in zip(u, alpha):
                dot = int(f.add(dot, f.mul(uc.i, ac.i)))
            phi[point_index(u)] = f._omega_pows[f.trace_int(dot)]
        return phi / np.sqrt(M)

    def character_eigensystem(self):
        """[(alpha, eigenvalue, eigenvector)] with eigenvalue
        (1/M)(m - |alpha|)/m, in point-index order of alpha."""
        f, m, M = self.field, self.m, self.size
        out = []
        for alpha in all_points(f, m):
            weight = sum(1 for c in alpha if c.i != 0)
            lam = (m - weight) / (m * M)
            out.append((alpha, lam, self.character_vector(alpha)))
        return out

    def spectral_gap(self) -> float:
        """Second-smallest Laplacian eigenvalue; analytically 1/(m*M)."""
        lams = sorted(1.0 / self.size - lam for _, lam, _ in self.character_eigensystem())
        return lams[1]


def verify_eigensystem(graph: HypercubeGraph, tol=1e-10):
    """Residuals of K phi = lambda phi and of orthonormality."""
    K = graph.adjacency()
    system = graph.character_eigensystem()
    vecs = np.stack([v for _, _, v in system], axis=1)
    gram = vecs.conj().T @ vecs
    residuals = [
        float(np.abs(K @ v - lam * v).max()) for _, lam, v in system
    ]
    gram_residual = float(np.abs(gram - np.eye(len(system))).max())
    recon = sum(lam * np.outer(v, v.conj()) for _, lam, v in system)
    frob = float(np.linalg.norm(recon - K))
    return {
        "max_eigen_residual": max(residuals),
        "gram_residual": gram_residual,
        "reconstruction_frobenius": frob,
        "ok": max(residuals) <= tol and gram_residual <= tol,
    }


def _pairs_second_moment(ops_a, ops_b, Psi):
    """<psi| (A - B)^2 (x) I |psi> for left-factor operators."""
    delta = ops_a - ops_b
    v = delta @ Psi
    return float(np.sum(np.abs(v) ** 2))


def local_variance(family, Psi, graph: HypercubeGraph) -> float:
    """(1/2) E_{(u,v) ~ edges} <psi| (A^u - A^v)^2 (x) I |psi>."""
    f, m = graph.field, graph.m
    by_index = _family_by_index(family, graph)
    total = 0.0
    for (ui, vi), w in graph.edge_distribution():
        if ui == vi:
            continue
        total += w * _pairs_second_moment(by_index[ui], by_index[vi], Psi)
    return 0.5 * total


def global_variance(family, Psi, graph: HypercubeGraph) -> float:
    """(1/2) E_{u,v independent} <psi| (A^u - A^v)^2 (x) I |psi>."""
    by_index = _family_by_index(family, graph)
    M = graph.size
    total = 0.0
    for ui in range(M):
        for vi in range(ui + 1, M):
            total += 2.0 * _pairs_second_moment(by_index[ui], by_index[vi], Psi)
    return 0.5 * total / (M * M)


def _family_by_index(family, graph):
    by_index = {}
    for u, op in family.items():
        by_index[point_index(u)] = np.asarray(op, dtype=complex)
    if len(by_index) != graph.size:
        raise ValueError("family must cover every point of the cube")
    return by_index


def poincare_report(family, Psi, graph: HypercubeGraph):
    local = local_variance(family, Psi, graph)
    glob = global_variance(family, Psi, graph)
    return {
        "local": local,
        "global": glob,
        "bound": graph.m * local,
        "margin": graph.m * local - glob,
    }


# ---- variance diagnostics for strategies ---------------------------------------


def points_variance_diagnostics(strategy, G, Psi=None):
    """Measured left-hand sides, with their bounds, of the three
    points-variance inequalities for a strategy and a polynomial-valued
    sub-measurement G on the other side.

    Returns a dict of {name: (measured, bound, margin)}.
    """
    from .polyspace import AxisLine, restrict_axis
    from .strategies import pass_probabilities

    params = strategy.params
    f, m, d, q = params.field, params.m, params.d, params.q
    Psi = strategy.Psi if Psi is None else Psi
    graph = HypercubeGraph(f, m)
    good = pass_probabilities(strategy, params)
    eps, delta, _ = good.as_floats()

    roots = {g: _psd_sqrt(G.op(g)) for g in G.outcomes}
    points = strategy.families["A"]["points"]

    # local: (u, v) over edges, operators A^u_{g(u)} against sqrt(G_g) weights
    def second_moment(u, v):
        tot = 0.0
        for g in G.outcomes:
            a_u = points[u].op(g(u))
            a_v = points[v].op(g(v))
            vvec = (a_u - a_v) @ Psi @ roots[g].T
            tot += float(np.sum(np.abs(vvec) ** 2))
        return tot

    by_pt = {point_index(u): u for u in points}
    local = 0.0
    for (ui, vi), w in graph.edge_distribution():
        if ui == vi:
            continue
        local += w * second_moment(by_pt[ui], by_pt[vi])
    M = graph.size
    glob = 0.0
    for ui in range(M):
        for vi in range(M):
            if ui == vi:
                continue
            glob += second_moment(by_pt[ui], by_pt[vi]) / (M * M)

    # line families against evaluated/restricted outcomes
    axis = strategy.families["A"]["axis"]
    gen_b = 0.0
    n_lines = 0
    from .polyspace import UniPoly, all_points as _ap

    for u in _ap(f, m):
        for i in range(m):
            line = AxisLine.through(u, i)
            fam = axis[line]
            t = line.param_of(u)
            for g in G.outcomes:
                target = g(u)
                ev = np.zeros((fam.dim, fam.dim), dtype=complex)
                for key in fam.outcomes:
                    if UniPoly(f, key)(t) == target:
                        ev = ev + fam.op(key)
                restr = fam.op(restrict_axis(g, line).key())
                vvec = (ev - restr) @ Psi @ roots[g].T
                gen_b += float(np.sum(np.abs(vvec) ** 2))
            n_lines += 1
    gen_b /= n_lines

    base = eps + delta + m * d / q
    return {
        "points_local_variance": _triple(local, 24.0 * base),
        "points_global_variance": _triple(glob, 24.0 * m * base),
        "line_restriction_vs_evaluation": _triple(gen_b, m * d / q),
    }


def _triple(measured, bound):
    return {"measured": measured, "bound": bound, "margin": bound - measured}


def _psd_sqrt(op):
    w, v = np.linalg.eigh(op)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
