"""Acceptance battery: one test per criterion, each at its stated tolerance.

A summary line per criterion is printed at the end of the pytest run.
"""

import math
import time

import numpy as np
import pytest

from conftest import random_connected_graph, random_graph
from oracles import longest_path_generations, naive_plus_saws, naive_remnant_saws, naive_saws
from particle_forge import (enumerate_remnant_saws, enumerate_saws, generations, is_remnant_saw,
                            reduce_path_to_remnant_saw, run, sample_clocks, trail_table,
                            two_step_graph)
from particle_forge.ips.engine import run_by_generation
from particle_forge.ips.kernels import (Contact, DiscreteSandpile, DivisibleSandpile, Urn, Voter,
                                        sites)
from particle_forge.verify import CtmcOracle, harness

pytestmark = pytest.mark.slow


def _criterion(record_property, label):
    record_property("criterion", label)


def _rel_close(a, b, rel=1e-12):
    return a == b or abs(a - b) <= rel * max(abs(a), abs(b))


def test_criterion_01_trail_brute_force(record_property):
    _criterion(record_property, "1 trail brute-force equivalence")
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    for _ in range(500):
        n = int(rng.integers(2, 7))
        g = random_connected_graph(rng, n, float(rng.uniform(0.3, 0.9)))
        c = rng.uniform(0.1, 5.0, n).tolist()
        v = int(rng.integers(n))
        n_max = n - 1 if n > 2 else 2
        t = trail_table(g, c, v, n_max)
        for i, length in enumerate(t.lengths):
            simple = math.fsum(math.prod(c[x] for x in w[1:-1]) for w in naive_saws(g, v, length))
            double = math.fsum(math.prod(c[x] for x in w[1:-1])
                               for w in naive_remnant_saws(g, v, length))
            assert _rel_close(t.raw_simple[i], simple), (g, v, length)
            assert _rel_close(t.raw_double[i], double), (g, v, length)
            assert _rel_close(t.theta_simple[i], simple ** (1 / (length - 1)))
            assert _rel_close(t.theta_double[i], double ** (1 / (length - 1)))
    assert time.perf_counter() - t0 < 120


def test_criterion_02_remnant_machinery(record_property):
    _criterion(record_property, "2 remnant machinery")
    rng = np.random.default_rng(202)
    for _ in range(500):
        n = int(rng.integers(1, 9))
        g = random_graph(rng, n, float(rng.uniform(0.15, 0.6)))
        plus = two_step_graph(g)
        v = int(rng.integers(n))
        for length in range(1, 5):
            saw = set(enumerate_saws(g, v, length))
            star = set(enumerate_remnant_saws(g, v, length, plus))
            assert saw <= star <= set(naive_plus_saws(g, v, length))
    failures = 0
    for _ in range(1000):
        g = random_graph(rng, 8, float(rng.uniform(0.15, 0.5)))
        plus = two_step_graph(g)
        path = [int(rng.integers(8))]
        for _ in range(int(rng.integers(1, 15))):
            nb = plus.adj[path[-1]]
            if not nb:
                break
            path.append(int(nb[rng.integers(len(nb))]))
        out = reduce_path_to_remnant_saw(g, path, plus)
        if not (out[0] == path[0] and out[-1] == path[-1] and is_remnant_saw(g, out, plus)):
            failures += 1
    assert failures == 0


def test_criterion_03_lrp_degree_moments(record_property):
    _criterion(record_property, "3 LRP degree-moment bound")
    rep = harness.lrp_moment_check(radius=200, replicas=100_000)
    print(rep.measured, rep.targets)
    assert rep.passed
    assert rep.runtime < 60


def test_criterion_04_lrp_saw_sum(record_property):
    _criterion(record_property, "4 LRP SAW-sum bound")
    rep = harness.lrp_saw_check(radius=30, n_max=3)
    print(rep.measured, rep.targets)
    assert all(a <= b for a, b in zip(rep.measured["exact_sum"], rep.targets["bound"]))
    assert rep.targets["bound"][0] == pytest.approx(math.pi ** 2 / 3)


def test_criterion_05_grg_bounds(record_property):
    _criterion(record_property, "5 GRG bounds")
    t0 = time.perf_counter()
    deg, saw = harness.grg_checks(s=2.0, K=3.0, deg_n_max=3, saw_n_max=2, replicas=100_000)
    print(deg.measured, deg.targets, saw.measured, saw.targets)
    assert deg.passed and saw.passed
    assert time.perf_counter() - t0 < 180


def test_criterion_06_oracle_distribution_match(record_property):
    _criterion(record_property, "6 oracle distribution match")
    t0 = time.perf_counter()
    cases = [(harness.complete_graph(3), Voter(1), (1, 0, 0), 0.5, 61),
             (harness.complete_graph(2), Contact(1.5, 1), (1, 0), 0.3, 62)]
    for g, kernel, x0, t, seed in cases:
        rep = harness.simulation_vs_oracle(g, kernel, x0, t, 100_000, seed)
        print(rep.experiment, rep.measured["tv"], rep.measured["chapman_kolmogorov"])
        assert rep.measured["tv"] <= 0.01
        assert rep.measured["chapman_kolmogorov"] <= 1e-8
        assert rep.measured["oracle_row_sum"] <= 1e-10
        assert rep.passed
    assert time.perf_counter() - t0 < 120


def test_criterion_07_generator_limit(record_property):
    _criterion(record_property, "7 generator limit")
    cases = [(harness.complete_graph(3), Voter(1), (1, 0, 0)),
             (harness.complete_graph(2), Contact(1.5, 1), (1, 0))]
    failed = []
    for g, kernel, x in cases:
        oracle = CtmcOracle(g, kernel)
        for f in harness.standard_observables(g.n):
            rep = harness.generator_consistency(oracle, f, x, ts=(0.04, 0.02, 0.01), rel_tol=0.02)
            m = rep.measured
            print(rep.experiment, "errors", m["errors"], "ratios", m["halving_ratios"],
                  "target", rep.targets["error_at_min_t"])
            if not rep.passed:
                failed.append((rep.experiment, m["errors"][-1], rep.targets["error_at_min_t"]))
    assert not failed, f"error at t=0.01 above 2% of max(1,|Gf|): {failed}"


def test_criterion_08_window_convergence(record_property):
    _criterion(record_property, "8 window convergence")
    rep = harness.window_convergence(radius=100, ladder=(2, 5, 10, 25, 50, 100), seeds=100)
    print("certified by m<=50:", rep.measured["certified_by_limit"],
          "mismatches:", rep.measured["mismatches"])
    assert rep.measured["mismatches"] == []
    assert rep.measured["certified_by_limit"] >= 95


def test_criterion_09_generation_partition(record_property):
    _criterion(record_property, "9 generation partition")
    rng = np.random.default_rng(909)
    kernels = [Voter(1), Contact(1.5, 1), DiscreteSandpile(1), DivisibleSandpile(1, 1.0)]
    for r in range(1000):
        n = int(rng.integers(1, 21))
        g = random_graph(rng, n, float(rng.uniform(0.05, 0.4)))
        kernel = kernels[r % 4]
        rates = [kernel.rate_bound(s) for s in sites(g)]
        clocks = sample_clocks(g, rates, float(rng.uniform(0.2, 1.5)), int(rng.integers(2 ** 32)))
        mode = "one-step" if kernel.self_updating else "two-step"
        part = generations(g, clocks, mode)
        pts = [p for ps in part.classes().values() for p in ps]
        assert len(pts) == len(set(pts)) == n + clocks.count()
        for gs in part.gen:
            assert all(a < b for a, b in zip(gs, gs[1:]))
        if r % 10 == 0:
            assert part.gen == longest_path_generations(g, clocks, mode)
        if isinstance(kernel, (Voter, Contact)):
            x0 = [int(b) for b in rng.integers(0, 2, n)]
        elif isinstance(kernel, DiscreteSandpile):
            x0 = [int(b) for b in rng.integers(0, 6, n)]
        else:
            x0 = [float(b) for b in rng.uniform(0, 3, n)]
        assert run(g, None, kernel, x0, clocks).events == \
            run_by_generation(g, None, kernel, x0, clocks).events


def test_criterion_10_non_percolation_tail(record_property):
    _criterion(record_property, "10 non-percolation tail")
    rep = harness.percolation_suite(radius=40, delta=0.05, lengths=range(4, 11), replicas=10_000)
    print("forward", rep.measured["forward"], "backward", rep.measured["backward"])
    assert rep.passed
    assert rep.runtime < 180


def test_criterion_11_conservation(record_property):
    _criterion(record_property, "11 conservation invariants")
    reps = harness.conservation_suite(events=10_000, mass_tol=1e-12)
    for rep in reps:
        print(rep.experiment, rep.measured)
        assert rep.passed
    # kernel normalization and the c_v bound on random local configurations
    rng = np.random.default_rng(1111)
    kernels = [Voter(1), Contact(1.5, 1), DiscreteSandpile(1), DivisibleSandpile(1, 1.0),
               Urn(2, 1, 3, 1)]
    for kernel in kernels:
        for _ in range(10_000):
            d = int(rng.integers(0, 5))
            site = sites(harness.complete_graph(d + 1))[0]
            if isinstance(kernel, Urn):
                local = tuple((int(a), int(b)) for a, b in rng.integers(0, 4, (d + 1, 2)))
            elif isinstance(kernel, DivisibleSandpile):
                local = tuple(float(a) for a in rng.uniform(0, 3, d + 1))
            else:
                local = tuple(int(a) for a in rng.integers(0, 2 * d + 3 if d else 2, d + 1))
                if isinstance(kernel, (Voter, Contact)):
                    local = tuple(a % 2 for a in local)
            tg = kernel.targets(site, local)
            alpha = math.fsum(r for _, r in tg)
            assert abs(alpha - kernel.total_rate(site, local)) <= 1e-12 * max(1.0, alpha)
            assert alpha <= kernel.rate_bound(site) * (1 + 1e-12)
