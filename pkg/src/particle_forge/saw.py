"""Self-avoiding walks, remnant walks on the 2-step graph, and jump rate trails.

A walk is a tuple of vertex ids; its length is the number of steps, so a
walk of length ``n`` has ``n + 1`` vertices.

A walk in the 2-step graph is a *remnant* SAW when one can bridge every
consecutive pair that is not an edge of the original graph with a common
neighbor, all bridges distinct and off the walk, so that the result is a
self-avoiding walk of the original graph.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .graph import Graph, two_step_graph

__all__ = [
    "EnumerationCapError",
    "NotAWalkError",
    "enumeration_cap",
    "enumerate_saws",
    "count_saws",
    "is_remnant_saw",
    "remnant_witness",
    "enumerate_remnant_saws",
    "reduce_path_to_remnant_saw",
    "TrailTable",
    "trail_table",
    "shifted_trail_raw",
    "connective_constant_estimate",
    "trail_tables_to_csv",
]

DEFAULT_CAP = 12
MAX_WALKS = 5_000_000


class EnumerationCapError(ValueError):
    """Requested walk length or walk count exceeds the enumeration guard."""


class NotAWalkError(ValueError):
    pass


def enumeration_cap() -> int:
    """Maximum walk length; ``PARTICLE_FORGE_CAP_N`` overrides the default."""
    raw = os.environ.get("PARTICLE_FORGE_CAP_N")
    return int(raw) if raw else DEFAULT_CAP


def _check_length(n: int) -> None:
    if n < 1:
        raise ValueError("walk length must be >= 1")
    cap = enumeration_cap()
    if n > cap:
        raise EnumerationCapError(f"walk length {n} exceeds enumeration cap {cap}")


def _iter_saws(g: Graph, v: int, n: int) -> Iterator[tuple[int, ...]]:
    walk = [v]
    on = {v}
    # explicit stack of neighbor iterators keeps deep walks off the call stack
    stack = [iter(g.adj[v])]
    while stack:
        if len(walk) == n + 1:
            yield tuple(walk)
            stack.pop()
            on.discard(walk.pop())
            continue
        for w in stack[-1]:
            if w not in on:
                walk.append(w)
                on.add(w)
                stack.append(iter(g.adj[w]))
                break
        else:
            stack.pop()
            on.discard(walk.pop())


def enumerate_saws(g: Graph, v: int, n: int) -> list[tuple[int, ...]]:
    """All self-avoiding walks of length ``n`` from ``v``, lexicographically."""
    g._check(v)
    _check_length(n)
    out = []
    for w in _iter_saws(g, v, n):
        out.append(w)
        if len(out) > MAX_WALKS:
            raise EnumerationCapError(f"more than {MAX_WALKS} walks of length {n}")
    return out


def count_saws(g: Graph, v: int, n: int) -> int:
    g._check(v)
    _check_length(n)
    return sum(1 for _ in _iter_saws(g, v, n))


def _check_plus_saw(g: Graph, gplus: Graph, walk: Sequence[int]) -> None:
    if len(set(walk)) != len(walk):
        raise NotAWalkError(f"{tuple(walk)} repeats a vertex")
    for a, b in zip(walk, walk[1:]):
        if not gplus.has_edge(a, b):
            raise NotAWalkError(f"({a}, {b}) is not an edge of the 2-step graph")


def remnant_witness(g: Graph, walk: Sequence[int], gplus: Graph | None = None
                    ) -> tuple[int, ...] | None:
    """A SAW of ``g`` of which ``walk`` is a remnant, or ``None``.

    Gaps are bridged in order; each gap tries its candidate common neighbors
    by increasing id and backtracks on collision.
    """
    walk = tuple(int(x) for x in walk)
    if gplus is None:
        gplus = two_step_graph(g)
    for x in walk:
        g._check(x)
    _check_plus_saw(g, gplus, walk)
    on_walk = set(walk)
    gaps = []
    cands = []
    for i, (a, b) in enumerate(zip(walk, walk[1:])):
        if g.has_edge(a, b):
            continue
        common = sorted((g._adjset[a] & g._adjset[b]) - on_walk)
        if not common:
            return None
        gaps.append(i)
        cands.append(common)
    choice: list[int] = []
    used: set[int] = set()

    def search(j: int) -> bool:
        if j == len(gaps):
            return True
        for u in cands[j]:
            if u not in used:
                used.add(u)
                choice.append(u)
                if search(j + 1):
                    return True
                choice.pop()
                used.discard(u)
        return False

    if not search(0):
        return None
    bridge = dict(zip(gaps, choice))
    full = []
    for i, x in enumerate(walk):
        full.append(x)
        if i in bridge:
            full.append(bridge[i])
    return tuple(full)


def is_remnant_saw(g: Graph, walk: Sequence[int], gplus: Graph | None = None) -> bool:
    """Whether a SAW of the 2-step graph is a remnant of a SAW of ``g``."""
    return remnant_witness(g, walk, gplus) is not None


def _iter_remnant_saws(g: Graph, gplus: Graph, v: int, n: int) -> Iterator[tuple[int, ...]]:
    # remnant walks are prefix-closed, so failing prefixes prune the search
    def rec(walk: list[int], on: set[int]):
        if len(walk) == n + 1:
            yield tuple(walk)
            return
        for w in gplus.adj[walk[-1]]:
            if w in on:
                continue
            walk.append(w)
            if is_remnant_saw(g, walk, gplus):
                on.add(w)
                yield from rec(walk, on)
                on.discard(w)
            walk.pop()

    yield from rec([v], {v})


def enumerate_remnant_saws(g: Graph, v: int, n: int, gplus: Graph | None = None
                           ) -> list[tuple[int, ...]]:
    """Remnant SAWs of length ``n`` from ``v``, lexicographically."""
    g._check(v)
    _check_length(n)
    if gplus is None:
        gplus = two_step_graph(g)
    out = []
    for w in _iter_remnant_saws(g, gplus, v, n):
        out.append(w)
        if len(out) > MAX_WALKS:
            raise EnumerationCapError(f"more than {MAX_WALKS} walks of length {n}")
    return out


def reduce_path_to_remnant_saw(g: Graph, path: Sequence[int], gplus: Graph | None = None,
                               return_witness: bool = False):
    """Extract a remnant SAW from a path of the 2-step graph.

    The result keeps the first and last vertex of ``path`` and lists a
    subsequence of its vertices in their original order.  The reduced prefix
    is grown one step at a time while a SAW of ``g`` certifying it is carried
    along: a revisited vertex truncates the prefix, a direct edge or a fresh
    common neighbor extends both, and a common neighbor already used by the
    certificate cuts the certificate back to that neighbor.
    """
    path = [int(x) for x in path]
    if not path:
        raise NotAWalkError("empty path")
    if gplus is None:
        gplus = two_step_graph(g)
    for x in path:
        g._check(x)
    for a, b in zip(path, path[1:]):
        if not gplus.has_edge(a, b):
            raise NotAWalkError(f"({a}, {b}) is not an edge of the 2-step graph")

    kept = [path[0]]          # the reduced prefix
    cert = [path[0]]          # SAW of g; kept is a remnant of it
    is_kept = [True]          # parallel to cert

    def cut(pos: int) -> None:
        # truncate the certificate after position pos and rebuild kept
        del cert[pos + 1:]
        del is_kept[pos + 1:]
        kept[:] = [x for x, k in zip(cert, is_kept) if k]

    for x in path[1:]:
        if x in cert:
            pos = cert.index(x)
            is_kept[pos] = True
            cut(pos)
            continue
        last = kept[-1]
        if g.has_edge(last, x):
            cert.append(x)
            is_kept.append(True)
            kept.append(x)
            continue
        common = sorted(g._adjset[last] & g._adjset[x])
        fresh = [u for u in common if u not in cert]
        if fresh:
            cert.extend((fresh[0], x))
            is_kept.extend((False, True))
            kept.append(x)
            continue
        # every bridge is already on the certificate: cut back to one of them;
        # it is adjacent to x in g, and if it was a bridge it now bridges to x
        cut(cert.index(common[0]))
        cert.append(x)
        is_kept.append(True)
        kept[:] = [y for y, k in zip(cert, is_kept) if k]

    result = tuple(kept)
    if return_witness:
        return result, tuple(cert)
    return result


@dataclass
class TrailTable:
    """Finite-n jump rate trails from one vertex.

    Entry ``i`` of every list refers to walk length ``n = i + 2``.
    """

    vertex: int
    n_max: int
    raw_simple: list[float]
    raw_double: list[float]
    theta_simple: list[float]
    theta_double: list[float]

    @property
    def lengths(self) -> range:
        return range(2, self.n_max + 1)

    def growth_diagnostic(self, double: bool = True) -> float:
        """Largest of the last three successive ratios of the raw sums.

        A bounded value is evidence (not proof) that the trail limsup is
        finite.  Returns ``nan`` when fewer than two positive sums exist.
        """
        raw = self.raw_double if double else self.raw_simple
        ratios = [b / a for a, b in zip(raw, raw[1:]) if a > 0]
        if not ratios:
            return math.nan
        return max(ratios[-3:])

    def rows(self):
        for i, n in enumerate(self.lengths):
            yield (self.vertex, n, self.raw_simple[i], self.theta_simple[i],
                   self.raw_double[i], self.theta_double[i])


def _rates(c, g: Graph) -> list[float]:
    if isinstance(c, Mapping):
        rates = [float(c.get(v, 0.0)) for v in range(g.n)]
    else:
        rates = [float(x) for x in c]
        if len(rates) != g.n:
            raise ValueError("rate profile length does not match graph")
    for v, r in enumerate(rates):
        if not (r >= 0 and math.isfinite(r)):
            raise ValueError(f"rate at {v} must be finite and non-negative, got {r}")
    return rates


def _weighted_sums(walks: Iterator[tuple[int, ...]], rates: list[float], n_max: int,
                   include_last: bool = False) -> list[float]:
    sums = [0.0] * (n_max + 1)
    for w in walks:
        n = len(w) - 1
        stop = n + 1 if include_last else n
        p = 1.0
        for x in w[1:stop]:
            p *= rates[x]
        sums[n] += p
    return sums


def _iter_saws_upto(g: Graph, v: int, n_max: int):
    for n in range(1, n_max + 1):
        yield from _iter_saws(g, v, n)


def trail_table(g: Graph, c, v: int, n_max: int) -> TrailTable:
    """Simple and double jump rate trails from ``v`` for ``n = 2..n_max``.

    The raw sum at length ``n`` adds, over every (remnant) SAW of that
    length, the product of the rates at its interior vertices; the trail is
    its ``1/(n-1)`` power.  An empty sum gives a zero trail.
    """
    g._check(v)
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    _check_length(n_max)
    rates = _rates(c, g)
    gplus = two_step_graph(g)
    simple = _weighted_sums(_iter_saws_upto(g, v, n_max), rates, n_max)
    double = _weighted_sums(
        (w for n in range(1, n_max + 1) for w in _iter_remnant_saws(g, gplus, v, n)),
        rates, n_max)
    raw_s = simple[2:]
    raw_d = double[2:]
    th_s = [s ** (1.0 / (n - 1)) for n, s in zip(range(2, n_max + 1), raw_s)]
    th_d = [s ** (1.0 / (n - 1)) for n, s in zip(range(2, n_max + 1), raw_d)]
    return TrailTable(v, n_max, raw_s, raw_d, th_s, th_d)


def shifted_trail_raw(g: Graph, c, v: int, n: int) -> float:
    """Sum over remnant SAWs of length ``n`` of the rate product over all
    vertices but the start (the endpoint included)."""
    g._check(v)
    _check_length(n)
    rates = _rates(c, g)
    gplus = two_step_graph(g)
    return _weighted_sums(_iter_remnant_saws(g, gplus, v, n), rates, n, include_last=True)[n]


def connective_constant_estimate(g: Graph, v: int, n_max: int) -> list[float]:
    """``|SAW_n(v)| ** (1/n)`` for ``n = 1..n_max``."""
    g._check(v)
    _check_length(n_max)
    return [count_saws(g, v, n) ** (1.0 / n) for n in range(1, n_max + 1)]


def trail_tables_to_csv(tables: Sequence[TrailTable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["vertex", "n", "raw_sum_simple", "theta_simple", "raw_sum_double", "theta_double"])
    for t in tables:
        for row in t.rows():
            w.writerow([row[0], row[1]] + [repr(float(x)) for x in row[2:]])
    return buf.getvalue()
