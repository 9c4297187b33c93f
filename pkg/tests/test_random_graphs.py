import itertools
import math

import numpy as np
import pytest

from particle_forge.random_graphs import (CouplingField, PointSet, RadiusLaw, bilipschitz_constant,
                                          delone_check, grg_degree_samples,
                                          grg_saw_probabilities_mc, grg_saw_probability,
                                          integer_lattice, lattice_points, lrp_degree_samples,
                                          lrp_saw_sum_exact, p_sum, s_sum, sample_grg, sample_lrp,
                                          sample_radii, saw_tuples)
from particle_forge.rng import keyed_uniform, replica_seed

POWER = CouplingField(beta=1.0, p=1.5, kind="power", exponent=3.0)


def _coord_edges(g, pts):
    return {tuple(sorted((float(pts.coords[a, 0]), float(pts.coords[b, 0])))) for a, b in g.edges()}


# -- long-range percolation -------------------------------------------------

def test_zero_coupling_gives_no_edges():
    pts = integer_lattice(1, 10)
    assert sample_lrp(pts, CouplingField(1.0, 1.5, kind="zero"), 3).edges() == []
    assert p_sum(CouplingField(1.0, 1.5, kind="zero"), pts) == 0.0


def test_edge_probability_tends_to_one():
    probs = [CouplingField(beta=b, p=1.5).edge_probability(5.0) for b in (1, 1e2, 1e4, 1e6)]
    assert probs == sorted(probs)
    assert probs[-1] == pytest.approx(1.0, abs=1e-6)


def test_nearest_neighbor_edge_frequency():
    pts = lattice_points([[1.0]], 0, 1)
    lo, hi = min(pts.keys), max(pts.keys)
    reps = 100_000
    u = keyed_uniform(replica_seed(99, np.arange(reps)), "lrp", lo, hi)
    freq = float(np.mean(u < POWER.edge_probability(1.0)))
    p = 1 - math.exp(-1)
    assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / reps)
    for r in range(200):
        has = sample_lrp(pts, POWER, int(replica_seed(99, r))).has_edge(0, 1)
        assert has == bool(u[r] < POWER.edge_probability(1.0))


def test_nested_windows_share_one_realization():
    small, big = integer_lattice(1, 15), integer_lattice(1, 40)
    es = _coord_edges(sample_lrp(small, POWER, 5), small)
    eb = _coord_edges(sample_lrp(big, POWER, 5), big)
    assert es == {e for e in eb if max(abs(e[0]), abs(e[1])) <= 15}


def test_degree_samples_agree_with_sampler():
    pts = integer_lattice(1, 20)
    v = pts.index_of([0])
    deg = lrp_degree_samples(pts, POWER, v, 50, 8)
    for r in range(50):
        assert deg[r] == sample_lrp(pts, POWER, int(replica_seed(8, r))).degree(v)


def test_p_sum_partial_sums_converge():
    pts = integer_lattice(1, 10_000)
    val = p_sum(POWER, pts, [pts.index_of([0])])
    assert abs(val - math.pi ** 2 / 3) < 1e-3
    assert val < POWER.analytic_p_sum()
    assert p_sum(POWER, integer_lattice(1, 0)) == 0.0


def test_p_sum_monotone_in_window():
    sums = [p_sum(POWER, integer_lattice(1, r), [r]) for r in (1, 5, 20, 80)]
    assert sums == sorted(sums)


def test_lrp_saw_sum_exact_matches_brute_force():
    pts = integer_lattice(1, 3)
    v = pts.index_of([0])
    D = np.abs(pts.coords[:, 0][:, None] - pts.coords[:, 0][None, :])
    P = POWER.edge_probability(D)
    for n in (1, 2, 3):
        brute = 0.0
        for rest in itertools.permutations([u for u in range(len(pts)) if u != v], n):
            w = (v,) + rest
            brute += math.prod(P[a, b] for a, b in zip(w, w[1:])) ** (1 / 1.5)
        assert lrp_saw_sum_exact(pts, POWER, v, n) == pytest.approx(brute, rel=1e-12)


# -- geometric random graphs ------------------------------------------------

def test_zero_radius_gives_no_edges():
    assert sample_grg(integer_lattice(2, 4), RadiusLaw("constant", value=0.0), 1).edges() == []


def test_constant_radius_is_threshold_graph():
    pts = integer_lattice(2, 4)
    g = sample_grg(pts, RadiusLaw("constant", value=1.5), 1)
    d = np.linalg.norm(pts.coords[:, None] - pts.coords[None, :], axis=2)
    want = {(i, j) for i in range(len(pts)) for j in range(i + 1, len(pts)) if d[i, j] < 1.5}
    assert set(g.edges()) == want
    # the inequality is strict
    assert sample_grg(pts, RadiusLaw("constant", value=1.0), 1).edges() == []


def test_grg_edge_rule_against_radii():
    pts = PointSet.from_coords([[0.0], [2.0]])
    law = RadiusLaw("uniform", 3.0)
    seen_no_edge_with_one_big_radius = False
    for s in range(300):
        R = sample_radii(pts, law, s)
        edge = sample_grg(pts, law, s).has_edge(0, 1)
        assert edge == (2.0 < min(R))
        if max(R) > 2.0 and min(R) < 2.0:
            assert not edge
            seen_no_edge_with_one_big_radius = True
    assert seen_no_edge_with_one_big_radius


def test_uniform_law_moments_below_declared_constant():
    law = RadiusLaw("uniform", 3.0)
    z = law.quantile(keyed_uniform(4, "z", np.arange(100_000)))
    for n in range(1, 7):
        m = np.mean(z ** n)
        se = np.std(z ** n) / math.sqrt(len(z))
        assert m - 3 * se <= law.K ** n
        assert m == pytest.approx(law.moment(n), rel=0.02)


def test_grg_degree_samples_agree_with_sampler():
    pts = integer_lattice(1, 10)
    law = RadiusLaw("uniform", 3.0)
    v = pts.index_of([0])
    deg = grg_degree_samples(pts, law, v, 40, 6)
    for r in range(40):
        assert deg[r] == sample_grg(pts, law, int(replica_seed(6, r))).degree(v)


def test_grg_walk_probability_exact_vs_monte_carlo():
    pts = integer_lattice(1, 5)
    law = RadiusLaw("uniform", 3.0)
    walks = saw_tuples(pts, pts.index_of([0]), 2, law.support_max)
    ph, se = grg_saw_probabilities_mc(pts, law, walks, 40_000, 2)
    exact = np.array([grg_saw_probability(pts, law, w) for w in walks])
    assert np.all(np.abs(ph - exact) <= 4 * np.maximum(se, 1e-3))


def test_s_sum_examples():
    pts = integer_lattice(1, 10_000)
    assert abs(s_sum(pts, 2.0, [pts.index_of([0])]) - math.pi ** 2 / 3) < 1e-3
    assert s_sum(integer_lattice(1, 0), 2.0) == 0.0
    assert s_sum(PointSet.from_coords([[0.0], [3.0]]), 2.0) == pytest.approx(3.0 ** -2)


def test_bilipschitz_scaling_bound():
    a = integer_lattice(1, 30)
    b = PointSet.from_coords(2.0 * a.coords, keys=a.keys)
    K = bilipschitz_constant(a, b)
    assert K == pytest.approx(2.0)
    for s in (1.5, 2.0, 3.0):
        assert s_sum(b, s) <= K ** s * s_sum(a, s)
        assert s_sum(a, s) <= K ** s * s_sum(b, s)


# -- point sets -------------------------------------------------------------

def test_square_lattice_box_count():
    assert len(integer_lattice(2, 2)) == 25
    assert len(lattice_points(np.eye(2), -2, 2)) == 25


def test_sheared_lattice_count_matches_brute_force():
    B = np.array([[1.0, 0.5], [0.0, 1.0]])
    pts = lattice_points(B, -10, 10)
    zz = np.array(list(itertools.product(range(-40, 41), repeat=2)))
    x = zz @ B.T
    brute = int(np.sum(np.all(np.abs(x) <= 10 + 1e-9, axis=1)))
    assert len(pts) == brute
    assert abs(len(pts) - 400 / abs(np.linalg.det(B))) < 4 * 21


def test_one_dimensional_lattice_is_z_window():
    pts = integer_lattice(1, 3)
    assert pts.coords[:, 0].tolist() == [-3, -2, -1, 0, 1, 2, 3]


def test_delone_square_lattice():
    rep = delone_check(integer_lattice(2, 10), 0.5 - 1e-9, math.sqrt(2) / 2 + 1e-9)
    assert rep.passed


def test_delone_random_points_not_discrete():
    x = keyed_uniform(3, "iid", np.arange(400)[:, None], np.arange(2)[None, :]) * 20
    assert not delone_check(PointSet.from_coords(x), 0.25, 3.0).discrete


def test_delone_single_point():
    assert delone_check(PointSet.from_coords([[0.0, 0.0]]), 1.0, 1e6).passed
