import math

import numpy as np
import pytest

from particle_forge import Cylinder, Graph, apply_generator
from particle_forge.ips.kernels import BirthDeath, Contact, DiscreteSandpile, Voter
from particle_forge.verify import CtmcOracle, StateSpaceTooLarge
from particle_forge.verify.harness import (complete_graph, generator_consistency,
                                           simulation_vs_oracle, standard_observables)

K2, K3 = complete_graph(2), complete_graph(3)


@pytest.mark.parametrize("g, kernel, cap", [(K3, Voter(1), None), (K2, Contact(1.5, 1), None),
                                            (complete_graph(4), Voter(2), None),
                                            (complete_graph(3), DiscreteSandpile(1), 6),
                                            (K2, BirthDeath(0.5, 1.0, 0.3, 3), None)])
def test_rate_matrix_invariants(g, kernel, cap):
    o = CtmcOracle(g, kernel, cap=cap)
    Q = o.Q
    off = Q - np.diag(np.diag(Q))
    assert np.all(off >= 0)
    assert np.max(np.abs(Q.sum(axis=1))) <= 1e-10
    assert o.self_check().passed()
    x = o.states[1]
    assert np.max(np.abs(o.row(x, 0.4) - o.uniformized(x, 0.4))) <= 1e-10


def test_voter_pair_closed_form():
    o = CtmcOracle(K2, Voter(1))
    for t in (0.1, 0.5, 2.0):
        row = o.row((1, 0), t)
        assert row[o.state_index((1, 1))] == pytest.approx((1 - math.exp(-2 * t)) / 2, abs=1e-13)
        assert row[o.state_index((1, 0))] == pytest.approx(math.exp(-2 * t), abs=1e-13)


def test_hand_generator_all_equal_on_triangle():
    o = CtmcOracle(K3, Voter(1))
    f = Cylinder((0, 1, 2), lambda s: float(len(set(s)) == 1))
    # vertex 0 joins the two zeros at rate 2; the others only break nothing further
    assert apply_generator(K3, Voter(1), f, (1, 0, 0)) == 2.0
    assert o.generator(f, (1, 0, 0)) == pytest.approx(2.0, abs=1e-12)


def test_constant_observable_gives_zero_everywhere():
    o = CtmcOracle(K3, Voter(1))
    f = Cylinder((0,), lambda s: 1.0)
    rep = generator_consistency(o, f, (1, 0, 0))
    assert rep.measured["Gf"] == 0.0
    assert max(abs(e) for e in rep.measured["errors"]) <= 1e-12
    assert rep.passed


def test_capped_sandpile_reports_truncation():
    g = complete_graph(3)
    o = CtmcOracle(g, DiscreteSandpile(1), cap=6)
    assert o.truncated and o.overflow == o.size - 1
    # five grains can never pile up past the cap, fourteen can
    x = (3, 2, 0)
    assert o.overflow_probability(x, 5.0) == 0.0
    heavy = (6, 6, 2)
    assert o.overflow_probability(heavy, 0.01) < o.overflow_probability(heavy, 0.5)
    assert o.overflow_probability(heavy, 0.5) > 0.1
    f = Cylinder((0,), lambda s: float(s[0]))
    rep = generator_consistency(o, f, x)
    assert max(rep.measured["cap_hit_probability"]) < 1e-4


def test_state_space_limit():
    with pytest.raises(StateSpaceTooLarge):
        CtmcOracle(complete_graph(4), DiscreteSandpile(1), cap=14)


def test_time_zero_distance_is_zero():
    rep = simulation_vs_oracle(K3, Voter(1), (1, 0, 0), 0.0, 100, 1)
    assert rep.measured["tv"] == 0.0


def test_birth_death_simulation_matches_oracle():
    rep = simulation_vs_oracle(K2, BirthDeath(0.5, 1.0, 0.3, 3), (2, 0), 0.7, 20_000, 4,
                               tv_tol=0.03)
    assert rep.passed, rep.measured["tv"]


@pytest.mark.parametrize("g, kernel, x", [(K3, Voter(1), (1, 0, 0)), (K2, Contact(1.5, 1), (1, 0))])
def test_generator_error_is_second_order_term(g, kernel, x):
    """The difference quotient misses Gf by (t/2) Q^2 f(x) to leading order."""
    o = CtmcOracle(g, kernel)
    i = o.state_index(x)
    for f in standard_observables(g.n):
        vec = o.observable(f)
        curv = float((o.Q @ o.Q @ vec)[i])
        rep = generator_consistency(o, f, x)
        for t, err in zip(rep.parameters["t_grid"], rep.measured["errors"]):
            assert err == pytest.approx(abs(curv) * t / 2, rel=0.1, abs=1e-9)
        assert rep.measured["Gf"] == pytest.approx(float((o.Q @ vec)[i]), abs=1e-12)
