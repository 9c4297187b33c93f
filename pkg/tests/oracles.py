"""Deliberately naive reference implementations used only by the tests."""

import itertools
import math

import numpy as np


def naive_saws(g, v, n):
    """Every length-``n`` SAW from ``v`` by scanning all vertex sequences."""
    adj = {(a, b) for a, b in g.edges()} | {(b, a) for a, b in g.edges()}
    out = []
    for rest in itertools.product(range(g.n), repeat=n):
        w = (v,) + rest
        if len(set(w)) == len(w) and all((a, b) in adj for a, b in zip(w, w[1:])):
            out.append(w)
    return out


def naive_plus_edges(g):
    d = {}
    for a, b in g.edges():
        d.setdefault(a, set()).add(b)
        d.setdefault(b, set()).add(a)
    edges = set()
    for a in range(g.n):
        for b in range(g.n):
            if a != b and (b in d.get(a, ()) or d.get(a, set()) & d.get(b, set())):
                edges.add((a, b))
    return edges, d


def naive_remnant(g, walk, nbrs=None):
    """Try every assignment of bridge vertices (any vertex) to the gaps."""
    if nbrs is None:
        _, nbrs = naive_plus_edges(g)
    gaps = [i for i, (a, b) in enumerate(zip(walk, walk[1:])) if b not in nbrs.get(a, ())]
    for choice in itertools.product(range(g.n), repeat=len(gaps)):
        bridge = dict(zip(gaps, choice))
        full = []
        for i, x in enumerate(walk):
            full.append(x)
            if i in bridge:
                full.append(bridge[i])
        if len(set(full)) != len(full):
            continue
        if all(b in nbrs.get(a, ()) for a, b in zip(full, full[1:])):
            return True
    return False


def naive_remnant_saws(g, v, n):
    plus, nbrs = naive_plus_edges(g)
    out = []
    for rest in itertools.permutations([u for u in range(g.n) if u != v], n):
        w = (v,) + rest
        if all((a, b) in plus for a, b in zip(w, w[1:])) and naive_remnant(g, w, nbrs):
            out.append(w)
    return out


def naive_plus_saws(g, v, n):
    plus, _ = naive_plus_edges(g)
    return [(v,) + r for r in itertools.permutations([u for u in range(g.n) if u != v], n)
            if all((a, b) in plus for a, b in zip((v,) + r, r))]


def naive_trail_raw(walks, c):
    return math.fsum(math.prod(c[x] for x in w[1:-1]) for w in walks)


def longest_path_generations(g, clocks, mode="two-step"):
    """Generations from an explicitly built space-time DAG.

    Nodes are ``(v, i)`` with ``i = -1`` for time 0; an edge joins a point
    of ``u`` to every strictly later point of each ``v`` that depends on
    ``u``.  Longest paths from the time-0 layer by memoized recursion.
    """
    from particle_forge.graphical import dependency_sets

    deps = dependency_sets(g, mode)
    pts = [(v, -1, 0.0) for v in range(g.n)]
    pts += [(v, i, float(t)) for v in range(g.n) for i, t in enumerate(clocks.times[v])]
    preds = {(v, i): [] for v, i, _ in pts}
    for v, i, t in pts:
        if i < 0:
            continue
        for u, j, s in pts:
            if u in deps[v] and s < t:
                preds[(v, i)].append((u, j))
    memo = {}

    def depth(p):
        if p not in memo:
            memo[p] = 0 if p[1] < 0 else 1 + max(depth(q) for q in preds[p])
        return memo[p]

    return [[depth((v, i)) for i in range(len(clocks.times[v]))] for v in range(g.n)]


def poisson_ci(mean, n, sigmas=3):
    return sigmas * math.sqrt(mean / n)


def tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
