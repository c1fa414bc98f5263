"""Planes realising ``B_{nu, ell}`` and the schedule that pulls them apart.

Each plane ``W_i`` in ``R^{4m+2}`` is the column span of ``[P_i; I]``; its
oriented intersection number with ``W_j`` is ``sgn det(P_i - P_j)``. Pairs
with zero intersection number become edges of the link graph, and the
separation schedule walks the tree of maximal cliques of that graph from the
leaves inward.

Vertices are numbered from 1 so that vertex ``i`` is plane ``W_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Sequence

import networkx as nx
import sympy
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from .errors import IntersectionTooLarge, NotConnected, ShapeMismatch
from .skewalg import SkewIntMatrix, check_parity_bound

def _rat(x) -> Fraction:
    return Fraction(x)


def _diag(values: Sequence) -> tuple[tuple[Fraction, ...], ...]:
    n = len(values)
    return tuple(tuple(_rat(values[i]) if i == j else Fraction(0) for j in range(n)) for i in range(n))


def _sym(M) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in M])


def _dm(M) -> DomainMatrix:
    rows = [[QQ(x.numerator, x.denominator) for x in row] for row in M]
    return DomainMatrix(rows, (len(rows), len(rows[0]) if rows else 0), QQ)


def _sub(a, b):
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def plane_matrix(i: int, n: int, ell: int, m: int) -> tuple[tuple[Fraction, ...], ...]:
    """``P_{i, n}``: the diagonal matrix placing plane ``i`` of ``A_{n, ell}``."""
    check_parity_bound(n, ell)
    if not 1 <= i <= 2 * ell:
        raise ValueError(f"plane index {i} outside 1..{2 * ell}")
    d = 2 * m + 1
    top = 2 * ell - 1
    if i <= n:
        vals = [Fraction(i)] * d
        vals[0 if i % 2 else 1] = Fraction(-i)
    elif i <= 2 * ell - 2:
        vals = [Fraction(i), Fraction(i)] + [Fraction(1, i)] * (d - 2)
    elif i == top and n % 2:
        vals = [Fraction(top), Fraction(top)] + [Fraction(1, top)] * (d - 2)
    elif i == top:
        vals = [Fraction(top), Fraction(top)] + [Fraction(0)] * (d - 2)
    elif n % 2:
        vals = [Fraction(-2 * ell)] + [Fraction(0)] * (d - 1)
    else:
        vals = [Fraction(-2 * ell + 1)] + [Fraction(0)] * (d - 1)
    return _diag(vals)


def q_matrix(v: Sequence) -> tuple[tuple[Fraction, ...], ...]:
    """``Q_v``: diagonal ``v`` with the upper-left block ``[[v1, 1], [v1 v2, v2]]``."""
    v = [_rat(x) for x in v]
    if len(v) < 2:
        raise ValueError("Q_v needs at least two entries")
    rows = [list(r) for r in _diag(v)]
    rows[0][1] = Fraction(1)
    rows[1][0] = v[0] * v[1]
    return tuple(tuple(r) for r in rows)


@dataclass(frozen=True)
class SubspaceFamily:
    """Planes ``W_i = span [P_i; I]`` in ``R^{4m+2}``."""

    m: int
    eps: Fraction
    planes: tuple
    nu: tuple[int, ...] = ()
    ell: int = 0

    @property
    def dim(self) -> int:
        return 2 * self.m + 1

    def __len__(self) -> int:
        return len(self.planes)

    def basis(self, i: int):
        """Columns of ``[P_i; I]`` as a sympy matrix (``i`` is 1-based)."""
        P = _sym(self.planes[i - 1])
        return P.col_join(sympy.eye(self.dim))

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "eps": str(self.eps),
            "nu": list(self.nu),
            "ell": self.ell,
            "planes": [[[str(x) for x in row] for row in P] for P in self.planes],
        }


def build_subspaces(nu: Sequence[int], ell: int, m: int, eps) -> SubspaceFamily:
    """Planes whose intersection matrix is ``B_{nu, ell}`` for small ``eps``.

    Block ``j + 1`` perturbs plane ``j`` of the first block by
    ``eps * Q_{i, n_{j+1}}``.
    """
    nu = tuple(int(n) for n in nu)
    eps = _rat(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m < 1:
        raise ValueError("m must be positive")
    for n in nu:
        check_parity_bound(n, ell)
    if len(nu) > 2 * ell:
        raise ShapeMismatch("need len(nu) <= 2 ell", k=len(nu), ell=ell)
    first = [plane_matrix(i, nu[0], ell, m) for i in range(1, 2 * ell + 1)]
    planes = list(first)
    for j in range(1, len(nu)):
        base = first[j - 1]
        for i in range(1, 2 * ell + 1):
            p = plane_matrix(i, nu[j], ell, m)
            q = q_matrix([p[r][r] for r in range(len(p))])
            planes.append(tuple(tuple(b + eps * x for b, x in zip(rb, rq)) for rb, rq in zip(base, q)))
    return SubspaceFamily(m, eps, tuple(planes), nu, ell)


@dataclass(frozen=True)
class IntersectionTable:
    matrix: SkewIntMatrix
    dims: tuple[tuple[int, ...], ...]

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.to_list(), "dims": [list(r) for r in self.dims]}


def intersection_matrix(fam: SubspaceFamily, max_dim: int | None = None) -> IntersectionTable:
    """Oriented intersection numbers and intersection dimensions.

    Args:
        fam: the planes.
        max_dim: largest allowed ``dim(W_i ∩ W_j)``. Defaults to ``2m``: a
            perturbation by ``eps * Q_{2 ell, n}`` has rank one, so the plane
            construction itself produces ``2m``-dimensional intersections.
            Pass ``1`` for the strict check.

    Raises:
        IntersectionTooLarge: some pair meets in more than ``max_dim`` dimensions.
    """
    if max_dim is None:
        max_dim = 2 * fam.m
    N = len(fam)
    a = [[0] * N for _ in range(N)]
    dims = [[fam.dim] * N for _ in range(N)]
    for i in range(N):
        for j in range(i + 1, N):
            D = _dm(_sub(fam.planes[i], fam.planes[j]))
            det = D.det()
            if det != 0:
                a[i][j] = 1 if det > 0 else -1
                a[j][i] = -a[i][j]
                dim = 0
            else:
                dim = fam.dim - D.rank()
            dims[i][j] = dims[j][i] = dim
            if dim > max_dim:
                raise IntersectionTooLarge(
                    f"W_{i + 1} and W_{j + 1} meet in dimension {dim}", i=i + 1, j=j + 1, dim=dim, max_dim=max_dim)
    return IntersectionTable(SkewIntMatrix(a), tuple(tuple(r) for r in dims))


# ---------------------------------------------------------------------------
# graph


@dataclass
class LinkGraph:
    """Graph on ``1..N`` with an edge wherever the intersection number vanishes."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    @classmethod
    def from_matrix(cls, A: SkewIntMatrix) -> "LinkGraph":
        edges = tuple((i + 1, j + 1) for i in range(A.n) for j in range(i + 1, A.n) if A[i, j] == 0)
        return cls(A.n, edges)

    @cached_property
    def nx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(1, self.n_vertices + 1))
        g.add_edges_from(self.edges)
        return g

    @cached_property
    def maximal_cliques(self) -> list[tuple[int, ...]]:
        return sorted(tuple(sorted(c)) for c in nx.find_cliques(self.nx))

    @cached_property
    def biconnected_components(self) -> list[tuple[int, ...]]:
        return sorted(tuple(sorted(c)) for c in nx.biconnected_components(self.nx))

    @cached_property
    def components(self) -> list[tuple[int, ...]]:
        return sorted(tuple(sorted(c)) for c in nx.connected_components(self.nx))

    def degree(self, v: int) -> int:
        return self.nx.degree[v]

    def is_clique(self, vertices: Sequence[int]) -> bool:
        vs = list(vertices)
        return all(self.nx.has_edge(u, w) for k, u in enumerate(vs) for w in vs[k + 1:])

    def to_dot(self, name: str = "G") -> str:
        lines = [f"graph {name} {{"]
        lines += [f"  {v};" for v in range(1, self.n_vertices + 1)]
        lines += [f"  {i} -- {j};" for i, j in self.edges]
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "n_vertices": self.n_vertices,
            "edges": [list(e) for e in self.edges],
            "maximal_cliques": [list(c) for c in self.maximal_cliques],
            "biconnected_components": [list(c) for c in self.biconnected_components],
            "components": [list(c) for c in self.components],
        }


def build_graph(A: SkewIntMatrix) -> LinkGraph:
    return LinkGraph.from_matrix(A)


@dataclass(frozen=True)
class ComponentShape:
    kind: str  # "G1", "G_odd", "G_ev"
    vertices: tuple[int, ...]
    center: int | None = None


@dataclass(frozen=True)
class ShapeReport:
    shapes: tuple[ComponentShape, ...]
    singletons: tuple[int, ...]

    def count(self, kind: str) -> int:
        return sum(s.kind == kind for s in self.shapes)

    def to_dict(self) -> dict:
        return {
            "components": [{"kind": s.kind, "vertices": list(s.vertices), "center": s.center} for s in self.shapes],
            "singletons": list(self.singletons),
            "counts": {k: self.count(k) for k in ("G1", "G_odd", "G_ev")},
        }


def _classify(G: LinkGraph, comp: tuple[int, ...], ell: int) -> ComponentShape | None:
    g = G.nx.subgraph(comp)
    deg = dict(g.degree)
    if len(comp) == 2:
        return ComponentShape("G1", comp)
    center = max(comp, key=lambda v: (deg[v], -v))
    others = [v for v in comp if v != center]
    if deg[center] != 2 * ell or len(others) != 2 * ell:
        return None
    extra = [(u, w) for u, w in g.edges if center not in (u, w)]
    if not extra:
        return ComponentShape("G_odd", comp, center)
    if len(extra) == 1:
        return ComponentShape("G_ev", comp, center)
    return None


def component_shapes(G: LinkGraph, nu: Sequence[int], ell: int) -> ShapeReport:
    """Match each component against the single edge, star and star-with-triangle shapes.

    Raises:
        ShapeMismatch: a component has another shape, or the counts do not
            follow from the parities of ``nu``.
    """
    nu = tuple(nu)
    shapes, singles = [], []
    for comp in G.components:
        if len(comp) == 1:
            singles.append(comp[0])
            continue
        s = _classify(G, comp, ell)
        if s is None:
            raise ShapeMismatch("component has unexpected shape", vertices=comp)
        shapes.append(s)
    report = ShapeReport(tuple(shapes), tuple(singles))
    want = {
        "G1": int(nu[0] % 2 == 0),
        "G_odd": sum(n % 2 for n in nu[1:]),
        "G_ev": sum(n % 2 == 0 for n in nu[1:]),
    }
    got = {k: report.count(k) for k in want}
    if got != want:
        raise ShapeMismatch("component counts disagree with parities of nu", expected=str(want), found=str(got))
    return report


# ---------------------------------------------------------------------------
# hypotheses and schedule


@dataclass
class HypothesisVerdict:
    cycles_in_cliques: bool
    cliques_in_hyperplanes: bool
    bad_blocks: list = field(default_factory=list)
    clique_ranks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.cycles_in_cliques and self.cliques_in_hyperplanes

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "cycles_in_cliques": self.cycles_in_cliques,
            "cliques_in_hyperplanes": self.cliques_in_hyperplanes,
            "bad_blocks": [list(b) for b in self.bad_blocks],
            "clique_ranks": {",".join(map(str, k)): v for k, v in self.clique_ranks.items()},
        }


def _stack(fam: SubspaceFamily, clique: Sequence[int]) -> sympy.Matrix:
    return sympy.Matrix.hstack(*[fam.basis(i) for i in clique])


def check_hypotheses(fam: SubspaceFamily, G: LinkGraph) -> HypothesisVerdict:
    """Cycles lie in cliques, and each clique fits in a hyperplane.

    Cycles are tested blockwise: a graph has all its simple cycles inside
    cliques exactly when every biconnected component with three or more
    vertices is a clique.
    """
    bad = [b for b in G.biconnected_components if len(b) >= 3 and not G.is_clique(b)]
    ranks = {}
    ok2 = True
    for c in G.maximal_cliques:
        if len(c) < 2:
            continue
        r = _stack(fam, c).rank()
        ranks[c] = int(r)
        ok2 &= r <= 2 * fam.dim - 1
    return HypothesisVerdict(not bad, ok2, bad, ranks)


@dataclass(frozen=True)
class ScheduleStep:
    clique: tuple[int, ...]
    fixed: int
    moved: tuple[tuple[int, Fraction, Fraction], ...]  # (vertex, eps, delta)
    normal: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "clique": list(self.clique),
            "fixed": self.fixed,
            "moved": [{"vertex": v, "eps": str(e), "delta": str(d)} for v, e, d in self.moved],
            "normal": list(self.normal),
        }


@dataclass(frozen=True)
class SeparationSchedule:
    steps: tuple[ScheduleStep, ...]
    roots: tuple[int, ...]

    def moved_vertices(self) -> list[int]:
        return [v for s in self.steps for v, _, _ in s.moved]

    def to_dict(self) -> dict:
        return {"roots": list(self.roots), "steps": [s.to_dict() for s in self.steps]}


def hyperplane_normal(fam: SubspaceFamily, clique: Sequence[int]) -> tuple[int, ...]:
    """Primitive integer normal of a hyperplane containing every plane in ``clique``."""
    ker = _stack(fam, clique).T.nullspace()
    if not ker:
        raise ShapeMismatch("clique planes span the whole space", clique=tuple(clique))
    v = ker[0]
    den = lcm(*[sympy.fraction(x)[1] for x in v])
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = sympy.igcd(g, x)
    return tuple(x // g for x in ints)


def schedule_scale(index: int) -> tuple[Fraction, Fraction]:
    """Dyadic ``(eps, delta)`` for the ``index``-th moved plane; strictly decreasing."""
    return Fraction(1, 2 ** (3 * index + 5)), Fraction(1, 2 ** (3 * index + 2))


def _clique_tree(G: LinkGraph, comp: tuple[int, ...], root_vertex: int):
    cliques = [c for c in G.maximal_cliques if c[0] in comp and len(c) > 1]
    parent: dict[tuple, tuple | None] = {}
    depth: dict[tuple, int] = {}
    frontier = [c for c in cliques if root_vertex in c]
    for c in frontier:
        parent[c], depth[c] = None, 1
    d = 1
    while frontier:
        nxt = []
        for leaf in frontier:
            for c in cliques:
                if c not in parent and set(c) & set(leaf):
                    parent[c], depth[c] = leaf, d + 1
                    nxt.append(c)
        frontier, d = nxt, d + 1
    return parent, depth


def separation_schedule(fam: SubspaceFamily, G: LinkGraph, require_connected: bool = False) -> SeparationSchedule:
    """Leaf-first walk over the tree of maximal cliques of each component.

    The root of a component is its vertex of largest degree (smallest label on
    ties). Each step fixes the one vertex its clique shares with the cliques
    still in the tree and moves the others.

    Raises:
        NotConnected: ``require_connected`` and the graph has several
            nontrivial components.
        ShapeMismatch: the hypotheses fail, so no valid walk exists.
    """
    verdict = check_hypotheses(fam, G)
    if not verdict.passed:
        raise ShapeMismatch("graph hypotheses fail", **{k: str(v) for k, v in verdict.to_dict().items()})
    comps = [c for c in G.components if len(c) > 1]
    if require_connected and len(comps) > 1:
        raise NotConnected(f"graph has {len(comps)} nontrivial components", components=len(comps))
    steps, roots = [], []
    counter = 0
    for comp in comps:
        i0 = max(comp, key=lambda v: (G.degree(v), -v))
        roots.append(i0)
        parent, depth = _clique_tree(G, comp, i0)
        remaining = set(parent)
        while remaining:
            children = {parent[c] for c in remaining if parent[c] is not None}
            leaves = sorted((c for c in remaining if c not in children), key=lambda c: (-depth[c], c))
            leaf = leaves[0]
            others = remaining - {leaf}
            shared = {v for v in leaf if any(v in c for c in others)}
            if len(shared) > 1:
                raise ShapeMismatch("leaf clique shares several vertices", clique=leaf)
            fixed = shared.pop() if shared else i0
            if fixed not in leaf:
                raise ShapeMismatch("last clique does not contain the root vertex", clique=leaf)
            moved = []
            for v in leaf:
                if v != fixed:
                    e, dl = schedule_scale(counter)
                    moved.append((v, e, dl))
                    counter += 1
            steps.append(ScheduleStep(leaf, fixed, tuple(moved), hyperplane_normal(fam, leaf)))
            remaining.remove(leaf)
    return SeparationSchedule(tuple(steps), tuple(roots))


def schedule_is_sound(schedule: SeparationSchedule, G: LinkGraph, fam: SubspaceFamily | None = None) -> bool:
    """Every moved vertex moves once, every edge has a moved end, normals annihilate their planes."""
    moved = schedule.moved_vertices()
    if len(moved) != len(set(moved)):
        return False
    step_of = {}
    for k, s in enumerate(schedule.steps):
        for v, _, _ in s.moved:
            step_of[v] = k
    for u, w in G.edges:
        covered = any(set((u, w)) <= set(s.clique) and (u != s.fixed or w != s.fixed) for s in schedule.steps)
        if not covered:
            return False
    eps = [e for s in schedule.steps for _, e, _ in s.moved]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        return False
    if fam is not None:
        for s in schedule.steps:
            n = sympy.Matrix([s.normal])
            if any(x != 0 for x in n * _stack(fam, s.clique)):
                return False
    return True


@dataclass
class Realization:
    family: SubspaceFamily
    table: IntersectionTable
    graph: LinkGraph
    verdict: HypothesisVerdict
    schedule: SeparationSchedule | None
    shapes: ShapeReport | None

    def to_dict(self) -> dict:
        return {
            "family": self.family.to_dict(),
            "intersection": self.table.to_dict(),
            "graph": self.graph.to_dict(),
            "hypotheses": self.verdict.to_dict(),
            "shapes": self.shapes.to_dict() if self.shapes else None,
            "schedule": self.schedule.to_dict() if self.schedule else None,
        }


def realize(nu: Sequence[int], ell: int, m: int = 1, eps="1/1000", max_dim: int | None = None) -> Realization:
    """Planes, intersection matrix, graph, shapes and schedule in one call."""
    fam = build_subspaces(nu, ell, m, eps)
    table = intersection_matrix(fam, max_dim=max_dim)
    G = build_graph(table.matrix)
    verdict = check_hypotheses(fam, G)
    shapes = component_shapes(G, nu, ell)
    schedule = separation_schedule(fam, G) if verdict.passed else None
    return Realization(fam, table, G, verdict, schedule, shapes)
