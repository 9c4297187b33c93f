"""Poisson graphical construction on a finite graph.

Every vertex ``v`` carries a marked Poisson clock of intensity ``c_v``.  A
space-time point ``(u, T)`` points to every strictly later point of a vertex
in the closed 2-neighborhood of ``u`` (``mode="two-step"``) or in its closed
neighborhood (``mode="one-step"``, enough for self-updating kernels).  The
edge set is never built: reachability questions are answered by
earliest-arrival sweeps over per-vertex sorted event times.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graph import Graph, bfs_distances, neighborhood, two_neighborhood, two_step_graph
from .rng import keyed_uniform, replica_seed
from .saw import is_remnant_saw, reduce_path_to_remnant_saw

__all__ = [
    "MODES",
    "ClockRealization",
    "sample_clocks",
    "sample_clocks_batch",
    "dependency_sets",
    "arrival_times",
    "affects",
    "affected_by",
    "cluster",
    "GenerationPartition",
    "generations",
    "affect_path",
    "TailEstimate",
    "direct_affect_tail",
]

MODES = ("two-step", "one-step")


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def dependency_sets(g: Graph, mode: str = "two-step") -> list[tuple[int, ...]]:
    """For each vertex, the closed set of vertices its points connect to."""
    _check_mode(mode)
    f = two_neighborhood if mode == "two-step" else neighborhood
    return [f(g, v) for v in range(g.n)]


@dataclass(frozen=True, eq=False)
class ClockRealization:
    """Per-vertex event times in ``(0, horizon]`` with marks in ``[0, 1)``."""

    horizon: float
    times: tuple[np.ndarray, ...]
    marks: tuple[np.ndarray, ...]
    seed: int | None = None
    ties: int = field(init=False, default=0)

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if len(self.times) != len(self.marks):
            raise ValueError("times and marks disagree on the vertex count")
        for v, (t, m) in enumerate(zip(self.times, self.marks)):
            if len(t) != len(m):
                raise ValueError(f"vertex {v}: times and marks differ in length")
            if len(t) and (t[0] <= 0 or t[-1] > self.horizon or np.any(np.diff(t) <= 0)):
                raise ValueError(f"vertex {v}: times must increase strictly inside (0, horizon]")
        # equal times at distinct vertices are ordered by vertex id
        allt = np.concatenate([np.asarray(t, float) for t in self.times]) if self.times else np.empty(0)
        ties = int(len(allt) - len(np.unique(allt)))
        object.__setattr__(self, "ties", ties)

    @property
    def n(self) -> int:
        return len(self.times)

    def count(self, v: int | None = None) -> int:
        if v is None:
            return int(sum(len(t) for t in self.times))
        return len(self.times[v])

    def events(self, v: int) -> list[tuple[float, float, int]]:
        return [(float(t), float(m), i) for i, (t, m) in enumerate(zip(self.times[v], self.marks[v]))]

    def chronological(self, vertices: Iterable[int] | None = None) -> list[tuple[float, int, int]]:
        """Events ``(time, vertex, index)`` ordered by time, then vertex id."""
        vs = range(self.n) if vertices is None else sorted(set(vertices))
        out = [(float(t), v, i) for v in vs for i, t in enumerate(self.times[v])]
        out.sort()
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["vertex", "index", "time", "mark"])
        for v in range(self.n):
            for i, (t, m) in enumerate(zip(self.times[v], self.marks[v])):
                w.writerow([v, i, f"{t:.17g}", f"{m:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_events(cls, n: int, horizon: float, events: dict[int, Sequence[tuple[float, float]]]
                    ) -> "ClockRealization":
        """Hand-built realization from ``{v: [(time, mark), ...]}``."""
        times, marks = [], []
        for v in range(n):
            ev = sorted(events.get(v, ()))
            times.append(np.array([t for t, _ in ev], dtype=float))
            marks.append(np.array([m for _, m in ev], dtype=float))
        return cls(float(horizon), tuple(times), tuple(marks))


def _rate_list(c, n: int) -> list[float]:
    if isinstance(c, dict):
        rates = [float(c.get(v, 0.0)) for v in range(n)]
    else:
        rates = [float(x) for x in c]
        if len(rates) != n:
            raise ValueError("rate profile length does not match the vertex count")
    for v, r in enumerate(rates):
        if not (r >= 0 and math.isfinite(r)):
            raise ValueError(f"rate at {v} must be finite and non-negative, got {r}")
    return rates


def sample_clocks_batch(c, horizon: float, seeds) -> list[ClockRealization]:
    """One realization per seed, vectorized across seeds.

    Inter-arrival ``i`` at ``v`` is ``-log(1 - U) / c_v`` with ``U`` keyed by
    ``(seed, v, "clock", i)``; mark ``i`` is keyed by ``(seed, v, "mark", i)``.
    A realization depends on ``c`` only through the rates of its own
    vertices, and extending the horizon only appends events.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    n = len(c) if not isinstance(c, dict) else max(c, default=-1) + 1
    rates = _rate_list(c, n)
    R = len(seeds)
    per_times: list[list[np.ndarray]] = [[None] * n for _ in range(R)]
    per_marks: list[list[np.ndarray]] = [[None] * n for _ in range(R)]
    empty = np.empty(0)
    S = seeds[:, None]
    for v, rate in enumerate(rates):
        if rate == 0:
            for r in range(R):
                per_times[r][v] = empty
                per_marks[r][v] = empty
            continue
        mean = rate * horizon
        B = int(math.ceil(mean + 6 * math.sqrt(mean) + 8))
        while True:
            U = keyed_uniform(S, v, "clock", np.arange(B)[None, :])
            T = np.cumsum(-np.log1p(-U) / rate, axis=1)
            if np.all(T[:, -1] > horizon):
                break
            B *= 2
        counts = (T <= horizon).sum(axis=1)
        kmax = int(counts.max()) if R else 0
        M = keyed_uniform(S, v, "mark", np.arange(max(kmax, 1))[None, :])
        for r in range(R):
            k = counts[r]
            per_times[r][v] = T[r, :k].copy()
            per_marks[r][v] = M[r, :k].copy()
    return [ClockRealization(float(horizon), tuple(per_times[r]), tuple(per_marks[r]), int(seeds[r]))
            for r in range(R)]


def sample_clocks(g: Graph | int, c, horizon: float, seed: int) -> ClockRealization:
    """Marked Poisson clocks of intensity ``c[v]`` on ``(0, horizon]``."""
    n = g.n if isinstance(g, Graph) else int(g)
    rates = _rate_list(c, n)
    return sample_clocks_batch(rates, horizon, [seed])[0]


def _first_after(times: np.ndarray, a: float) -> float:
    i = bisect_right(times, a)
    return float(times[i]) if i < len(times) else math.inf


def _last_before(times: np.ndarray, b: float) -> float:
    i = bisect_left(times, b)
    return float(times[i - 1]) if i > 0 else -math.inf


def _check_t(clocks: ClockRealization, t: float) -> None:
    if t > clocks.horizon:
        raise ValueError(f"time {t} beyond the clock horizon {clocks.horizon}")


def arrival_times(g: Graph, clocks: ClockRealization, source: int, t: float,
                  mode: str = "two-step", deps=None, parents: dict | None = None) -> dict[int, float]:
    """Earliest time each vertex is reached from ``(source, 0)`` by time ``t``.

    The source maps to 0; reached vertices map to the time of the first
    event on a directed path.  Unreached vertices are absent.  If ``parents``
    is given it is filled with the predecessor vertex of each reached vertex.
    """
    _check_t(clocks, t)
    g._check(source)
    if deps is None:
        deps = dependency_sets(g, mode)
    best = {source: 0.0}
    heap = [(0.0, source)]
    done = set()
    while heap:
        a, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for x in deps[u]:
            if x in done:
                continue
            cand = _first_after(clocks.times[x], a)
            if cand <= t and cand < best.get(x, math.inf):
                best[x] = cand
                if parents is not None:
                    parents[x] = u
                heapq.heappush(heap, (cand, x))
    return best


def _latest_good(g: Graph, clocks: ClockRealization, targets: Iterable[int], t: float,
                 deps) -> dict[int, float]:
    # latest event of each vertex from which an event of a target at time <= t
    # is reachable (a target event counts for itself)
    best: dict[int, float] = {}
    heap = []
    for z in targets:
        d = _last_before(clocks.times[z], math.nextafter(t, math.inf))
        if d > 0:
            best[z] = d
            heap.append((-d, z))
    heapq.heapify(heap)
    done = set()
    while heap:
        negd, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        d = -negd
        for y in deps[x]:
            if y in done:
                continue
            cand = _last_before(clocks.times[y], d)
            if cand > 0 and cand > best.get(y, -math.inf):
                best[y] = cand
                heapq.heappush(heap, (-cand, y))
    return best


def affected_by(g: Graph, clocks: ClockRealization, targets: Iterable[int], t: float,
                mode: str = "two-step", deps=None) -> set[int]:
    """All ``w`` with ``E_t(w, z)`` for some target ``z`` (targets included)."""
    _check_t(clocks, t)
    targets = list(targets)
    if deps is None:
        deps = dependency_sets(g, mode)
    good = _latest_good(g, clocks, targets, t, deps)
    out = set(targets)
    for x in good:
        # (w, 0) reaches a good point of x whenever x is in w's dependency set;
        # dependency sets are symmetric
        out.update(deps[x])
    return out


def affects(g: Graph, clocks: ClockRealization, w: int, v: int, t: float,
            mode: str = "two-step") -> bool:
    """``E_t(w, v)``: a directed path from ``(w, 0)`` to an event of ``v`` at
    time at most ``t``.  ``E_t(v, v)`` holds by convention."""
    _check_mode(mode)
    g._check(v)
    if w == v:
        g._check(w)
        _check_t(clocks, t)
        return True
    return v in arrival_times(g, clocks, w, t, mode)


def cluster(g: Graph, clocks: ClockRealization, v: int, t: float, mode: str = "two-step"
            ) -> frozenset[int]:
    """``C_{v,t}``: vertices affecting some vertex of the (2-)neighborhood of ``v``."""
    _check_mode(mode)
    g._check(v)
    deps = dependency_sets(g, mode)
    return frozenset(affected_by(g, clocks, deps[v], t, mode, deps))


def affect_path(g: Graph, clocks: ClockRealization, w: int, v: int, t: float,
                mode: str = "two-step") -> list[int] | None:
    """Vertex sequence of a directed space-time path witnessing ``E_t(w, v)``."""
    parents: dict[int, int] = {}
    best = arrival_times(g, clocks, w, t, mode, parents=parents)
    if v not in best:
        return None
    path = [v]
    while path[-1] != w:
        path.append(parents[path[-1]])
    return path[::-1]


@dataclass
class GenerationPartition:
    """Generation of every space-time point.

    ``gen[v][i]`` is the generation of the ``i``-th event of ``v``; the time-0
    layer has generation 0 and is implicit.
    """

    gen: list[list[int]]
    ties: int = 0

    def of(self, v: int, i: int | None) -> int:
        return 0 if i is None else self.gen[v][i]

    @property
    def depth(self) -> int:
        return max((max(g) for g in self.gen if g), default=0)

    def classes(self) -> dict[int, list[tuple[int, int | None]]]:
        """Generation -> points ``(v, i)``; ``i=None`` is the time-0 point."""
        out: dict[int, list] = {0: [(v, None) for v in range(len(self.gen))]}
        for v, gs in enumerate(self.gen):
            for i, k in enumerate(gs):
                out.setdefault(k, []).append((v, i))
        return dict(sorted(out.items()))


def generations(g: Graph, clocks: ClockRealization, mode: str = "two-step",
                vertices: Iterable[int] | None = None) -> GenerationPartition:
    """Longest-path generations computed in one chronological sweep.

    Points sharing a time are not joined to each other; they are assigned as
    a group from the state before that time.  Restricting to ``vertices``
    ignores the clocks of all other vertices.
    """
    deps = dependency_sets(g, mode)
    active = set(range(g.n)) if vertices is None else set(vertices)
    last = [0] * g.n                     # generation of the latest point per vertex
    gen: list[list[int]] = [[0] * (len(clocks.times[v]) if v in active else 0) for v in range(g.n)]
    events = clocks.chronological(active)
    ties = 0
    k = 0
    while k < len(events):
        j = k
        while j < len(events) and events[j][0] == events[k][0]:
            j += 1
        if j - k > 1:
            ties += j - k - 1
        group = events[k:j]
        vals = [1 + max(last[u] for u in deps[v]) for _, v, _ in group]
        for (_, v, i), val in zip(group, vals):
            gen[v][i] = val
            last[v] = val
        k = j
    return GenerationPartition(gen, ties)


@dataclass
class TailEstimate:
    lengths: list[int]
    delta: float
    replicas: int
    forward_hits: list[int]
    backward_hits: list[int]
    certified: int = 0

    @property
    def forward(self) -> list[float]:
        return [h / self.replicas for h in self.forward_hits]

    @property
    def backward(self) -> list[float]:
        return [h / self.replicas for h in self.backward_hits]

    @staticmethod
    def ratios(hits: Sequence[int]) -> list[float]:
        """Successive ratios ``hits[i+1] / hits[i]``; ``0/0`` counts as 0."""
        out = []
        for a, b in zip(hits, hits[1:]):
            out.append(0.0 if b == 0 else (math.inf if a == 0 else b / a))
        return out


def direct_affect_tail(g: Graph, v: int, c, delta: float, lengths: Sequence[int],
                       replicas: int, seed: int, mode: str = "two-step",
                       certify: int = 0, batch: int = 2000) -> TailEstimate:
    """Monte Carlo frequencies of long direct-affect paths out of and into ``v``.

    For each ``n`` the forward event is that some ``w`` at 2-step distance at
    least ``n`` from ``v`` satisfies ``E'_{delta n}(v, w)``; the backward event
    swaps the roles.  Any directed space-time path can be shortened to one
    whose vertex sequence is a remnant SAW, so these events coincide with
    their plain reachability versions, which is what is computed.  For the
    first ``certify`` hits the shortening is carried out explicitly and
    checked.  Replica ``r`` uses clock seed ``replica_seed(seed, r)``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    lengths = sorted(int(n) for n in lengths)
    if not lengths or lengths[0] < 1:
        raise ValueError("lengths must be positive integers")
    g._check(v)
    deps = dependency_sets(g, mode)
    gplus = two_step_graph(g)
    dist = bfs_distances(gplus, v)
    t_max = delta * lengths[-1]
    fwd = [0] * len(lengths)
    bwd = [0] * len(lengths)
    certified = 0
    rates = _rate_list(c, g.n)
    for s in range(0, replicas, batch):
        idx = np.arange(s, min(replicas, s + batch))
        for clocks in sample_clocks_batch(rates, t_max, replica_seed(seed, idx)):
            parents: dict[int, int] = {}
            arr = arrival_times(g, clocks, v, t_max, mode, deps, parents)
            for j, n in enumerate(lengths):
                tn = delta * n
                far = [w for w, a in arr.items() if dist[w] >= n and a <= tn]
                if far:
                    fwd[j] += 1
                    if certified < certify:
                        w = far[0]
                        path = [w]
                        while path[-1] != v:
                            path.append(parents[path[-1]])
                        red = reduce_path_to_remnant_saw(g, path[::-1], gplus)
                        if not is_remnant_saw(g, red, gplus):
                            raise AssertionError(f"path reduction failed on {path}")
                        certified += 1
            for j, n in enumerate(lengths):
                tn = delta * n
                srcs = affected_by(g, clocks, [v], tn, mode, deps)
                if any(dist[w] >= n for w in srcs if w != v):
                    bwd[j] += 1
    return TailEstimate(lengths, delta, replicas, fwd, bwd, certified)
