from fractions import Fraction

import pytest

from ricci_forge.errors import IntersectionTooLarge, NotConnected, ShapeMismatch
from ricci_forge.linking import (
    LinkGraph,
    SubspaceFamily,
    build_graph,
    build_subspaces,
    check_hypotheses,
    component_shapes,
    hyperplane_normal,
    intersection_matrix,
    plane_matrix,
    q_matrix,
    realize,
    schedule_is_sound,
    schedule_scale,
    separation_schedule,
)
from ricci_forge.skewalg import build_A, build_B, minimal_ell


def _diag(*v):
    n = len(v)
    return tuple(tuple(Fraction(v[i]) if i == j else Fraction(0) for j in range(n)) for i in range(n))


def test_planes_nu_1():
    fam = build_subspaces((1,), 1, 1, "1/1000")
    assert fam.planes == (_diag(-1, 1, 1), _diag(-2, 0, 0))
    table = intersection_matrix(fam)
    assert table.matrix.to_list() == [[0, 1], [-1, 0]] == build_A(1, 1).to_list()


def test_planes_nu_2():
    fam = build_subspaces((2,), 2, 1, "1/1000")
    assert len(fam) == 4
    assert plane_matrix(3, 2, 2, 1) == _diag(3, 3, 0)
    assert _diag(3, 3, 0) in fam.planes


def test_q_matrix():
    a, b, c = 2, 3, 5
    assert q_matrix((a, b, c)) == tuple(tuple(Fraction(x) for x in r) for r in [[a, 1, 0], [a * b, b, 0], [0, 0, c]])


@pytest.mark.parametrize("nu", [(1,), (2,), (3,), (2, 3), (1, 2), (1, 3), (3, 4, 5)])
def test_realization_equals_b(nu):
    ell = minimal_ell(nu)
    B = build_B(nu, ell)
    for eps in ("1/1000", "1/2000", "1/4000"):
        fam = build_subspaces(nu, ell, 1, eps)
        assert intersection_matrix(fam).matrix == B


def test_realization_m2():
    fam = build_subspaces((2, 3), 2, 2, "1/1000")
    assert fam.dim == 5
    assert intersection_matrix(fam).matrix == build_B((2, 3), 2)


def test_duplicate_planes_too_large():
    fam = build_subspaces((1,), 1, 1, "1/1000")
    dup = SubspaceFamily(1, fam.eps, fam.planes + fam.planes[:1])
    with pytest.raises(IntersectionTooLarge):
        intersection_matrix(dup)


def test_strict_dimension_bound():
    fam = build_subspaces((2, 3), 2, 1, "1/1000")
    dims = intersection_matrix(fam).dims
    assert max(d for i, r in enumerate(dims) for j, d in enumerate(r) if i != j) == 2
    with pytest.raises(IntersectionTooLarge):
        intersection_matrix(fam, max_dim=1)


def test_graph_examples():
    assert build_graph(build_A(3, 2)).edges == ()
    G = build_graph(build_A(2, 2))
    assert G.edges == ((3, 4),)
    assert G.components == [(1,), (2,), (3, 4)]
    assert "3 -- 4" in G.to_dot()


def test_component_counts():
    r = realize((2,), 2)
    assert r.shapes.count("G1") == 1 and r.shapes.count("G_odd") == 0
    r = realize((1, 3), 2)
    assert r.shapes.count("G_odd") == 1 and r.shapes.count("G1") == 0
    star = next(s for s in r.shapes.shapes if s.kind == "G_odd")
    assert len(star.vertices) == 5
    r = realize((1, 2), 2)
    assert r.shapes.count("G_ev") == 1
    r = realize((2, 3), 2)
    assert (r.shapes.count("G1"), r.shapes.count("G_odd"), r.shapes.count("G_ev")) == (1, 1, 0)
    assert realize((3,), 2).shapes.shapes == ()


def test_shape_mismatch_on_wrong_nu():
    G = build_graph(build_B((2,), 2))
    with pytest.raises(ShapeMismatch):
        component_shapes(G, (3,), 2)


def test_hypotheses_pass_and_ranks():
    r = realize((2, 3), 2)
    assert r.verdict.passed
    assert all(v <= 2 * 1 + 3 for v in r.verdict.clique_ranks.values())
    r = realize((1, 3), 2)
    assert sorted(r.verdict.clique_ranks.values()) == [4, 5, 5, 5]


def test_hypotheses_edgeless_and_four_cycle():
    fam = build_subspaces((3,), 2, 1, "1/1000")
    assert check_hypotheses(fam, build_graph(build_A(3, 2))).passed
    cycle = LinkGraph(4, ((1, 2), (2, 3), (3, 4), (1, 4)))
    v = check_hypotheses(fam, cycle)
    assert not v.cycles_in_cliques and not v.passed


def _pencil():
    return SubspaceFamily(1, Fraction(1, 1000), (_diag(1, 0, 0), _diag(2, 0, 0), _diag(3, 0, 0)))


def test_two_cliques_sharing_a_vertex():
    fam = _pencil()
    G = LinkGraph(3, ((1, 2), (2, 3)))
    sch = separation_schedule(fam, G)
    assert len(sch.steps) == 2
    assert sch.steps[0].fixed == 2 and sch.roots == (2,)
    assert schedule_is_sound(sch, G, fam)


def test_single_clique():
    fam = _pencil()
    G = LinkGraph(3, ((1, 2), (1, 3), (2, 3)))
    sch = separation_schedule(fam, G)
    assert len(sch.steps) == 1 and sch.steps[0].fixed == 1
    assert [v for v, _, _ in sch.steps[0].moved] == [2, 3]


def test_not_connected():
    fam = _pencil()
    G = LinkGraph(3, ((1, 2),))
    separation_schedule(fam, G, require_connected=True)
    fam4 = SubspaceFamily(1, Fraction(1, 1000), _pencil().planes + (_diag(4, 0, 0),))
    G2 = LinkGraph(4, ((1, 2), (3, 4)))
    with pytest.raises(NotConnected):
        separation_schedule(fam4, G2, require_connected=True)
    assert len(separation_schedule(fam4, G2).steps) == 2


def test_g_ev_schedule():
    r = realize((1, 2), 2)
    tri = [s for s in r.schedule.steps if len(s.clique) == 3]
    assert len(tri) == 1
    assert tri[0].clique == (1, 7, 8) and tri[0].fixed == 1
    assert [v for v, _, _ in tri[0].moved] == [7, 8]
    assert schedule_is_sound(r.schedule, r.graph, r.family)


def test_hyperplane_normal_annihilates():
    r = realize((2, 3), 2)
    for step in r.schedule.steps:
        n = hyperplane_normal(r.family, step.clique)
        assert n == step.normal
        for i in step.clique:
            B = r.family.basis(i)
            assert all(sum(n[k] * B[k, c] for k in range(len(n))) == 0 for c in range(B.shape[1]))


def test_schedule_scales_decrease():
    scales = [schedule_scale(i) for i in range(5)]
    assert scales[0] == (Fraction(1, 32), Fraction(1, 4))
    for (e0, d0), (e1, d1) in zip(scales, scales[1:]):
        assert e1 < e0 and d1 < d0 and e0 < d0


def test_schedule_2_3():
    r = realize((2, 3), 2)
    assert len(r.schedule.steps) == 5
    moved = r.schedule.moved_vertices()
    assert len(moved) == len(set(moved))
    assert schedule_is_sound(r.schedule, r.graph, r.family)
    assert r.shapes.singletons == (2,)


def test_realization_json_shape():
    d = realize((2, 3), 2).to_dict()
    assert set(d) == {"family", "intersection", "graph", "hypotheses", "shapes", "schedule"}
    assert d["family"]["eps"] == "1/1000"
