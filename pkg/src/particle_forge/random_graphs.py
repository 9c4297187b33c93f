"""Long-range percolation and geometric random graphs on explicit point sets.

Randomness is keyed by stable point keys (see :mod:`particle_forge.rng`), so
sampling two nested windows with one seed gives identical edges on the
shared pairs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import zeta

from .graph import Graph
from .rng import key_hash, keyed_uniform, replica_seed

__all__ = [
    "PointSet",
    "CouplingField",
    "RadiusLaw",
    "integer_lattice",
    "lattice_points",
    "sample_lrp",
    "sample_grg",
    "sample_radii",
    "p_sum",
    "s_sum",
    "DeloneReport",
    "delone_check",
    "bilipschitz_constant",
    "lrp_degree_samples",
    "grg_degree_samples",
    "lrp_saw_sum_exact",
    "grg_saw_probability",
    "grg_saw_probabilities_mc",
    "saw_tuples",
    "lrp_degree_bound",
    "lrp_saw_bound",
    "grg_degree_bound",
    "grg_saw_bound",
]


@dataclass(frozen=True, eq=False)
class PointSet:
    """Finite point set with stable keys.

    ``coords`` has shape ``(N, d)``.  Point ``i`` is vertex ``i`` of any graph
    sampled on the set; ``keys[i]`` identifies it across windows.
    """

    coords: np.ndarray
    keys: np.ndarray
    metric: str = "euclidean"
    r_pack: float | None = None
    r_cov: float | None = None

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coords, dtype=float))
        if c.shape[0] == 1 and np.ndim(self.coords) == 1 and len(self.coords) != 1:
            c = c.T
        k = np.asarray(self.keys, dtype=np.uint64)
        if k.shape != (c.shape[0],):
            raise ValueError("keys must have one entry per point")
        if len(np.unique(k)) != len(k):
            raise ValueError("point keys must be distinct")
        if self.metric != "euclidean":
            raise ValueError(f"unsupported metric {self.metric!r}")
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "keys", k)

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @classmethod
    def from_coords(cls, coords, keys=None, **kw) -> "PointSet":
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if keys is None:
            keys = np.arange(coords.shape[0], dtype=np.uint64)
        return cls(coords, keys, **kw)

    def index_of(self, point: Sequence[float]) -> int:
        d = np.abs(self.coords - np.asarray(point, dtype=float)).max(axis=1)
        i = int(np.argmin(d))
        if d[i] > 1e-9:
            raise KeyError(f"no point at {tuple(point)}")
        return i

    def distances_from(self, i: int) -> np.ndarray:
        return np.linalg.norm(self.coords - self.coords[i], axis=1)


def _lattice_keys(z: np.ndarray) -> np.ndarray:
    return key_hash(0, "site", *[z[:, j] for j in range(z.shape[1])])


def lattice_points(basis, lo, hi) -> PointSet:
    """Points ``basis @ z`` (integer ``z``) inside the box ``[lo, hi]``.

    ``basis`` columns are the generating vectors; ``lo``/``hi`` are scalars or
    per-axis bounds.
    """
    B = np.atleast_2d(np.asarray(basis, dtype=float))
    d = B.shape[0]
    if B.shape != (d, d) or abs(np.linalg.det(B)) < 1e-12:
        raise ValueError("basis must be a non-singular square matrix")
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (d,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,))
    # integer coefficients reachable from the box corners
    corners = np.array(list(itertools.product(*zip(lo, hi)))).T
    zc = np.linalg.solve(B, corners)
    zlo = np.floor(zc.min(axis=1)).astype(int) - 1
    zhi = np.ceil(zc.max(axis=1)).astype(int) + 1
    grids = np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(zlo, zhi)], indexing="ij")
    z = np.stack([g.ravel() for g in grids], axis=1)
    x = z @ B.T
    eps = 1e-9
    inside = np.all((x >= lo - eps) & (x <= hi + eps), axis=1)
    z, x = z[inside], x[inside]
    order = np.lexsort(x.T[::-1])
    z, x = z[order], x[order]
    return PointSet(x, _lattice_keys(z))


def integer_lattice(d: int, radius: int) -> PointSet:
    """``Z^d`` intersected with ``[-radius, radius]^d``."""
    return lattice_points(np.eye(d), -radius, radius)


@dataclass(frozen=True)
class CouplingField:
    """Symmetric non-negative coupling constants ``J(u, v)``.

    ``kind="power"`` gives ``J = dist ** -exponent``; ``kind="zero"`` gives
    ``J = 0``; ``kind="custom"`` calls ``func(dist)`` on distance arrays.
    """

    beta: float
    p: float
    kind: str = "power"
    exponent: float = 3.0
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.p > 1:
            raise ValueError("summability exponent p must exceed 1")
        if self.kind not in ("power", "zero", "custom"):
            raise ValueError(f"unknown coupling kind {self.kind!r}")
        if self.kind == "custom" and self.func is None:
            raise ValueError("custom coupling needs func")

    def J(self, dist) -> np.ndarray:
        dist = np.asarray(dist, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(dist)
        if self.kind == "power":
            with np.errstate(divide="ignore"):
                out = np.where(dist > 0, dist ** -self.exponent, 0.0)
            return out
        out = np.asarray(self.func(dist), dtype=float)
        if np.any(out < 0):
            raise ValueError("coupling constants must be non-negative")
        return np.where(dist > 0, out, 0.0)

    def edge_probability(self, dist) -> np.ndarray:
        return -np.expm1(-self.beta * self.J(dist))

    def analytic_sum(self, power: float = 1.0, dim: int = 1) -> float | None:
        """Limiting ``sum_{v != 0} J(0, v) ** power`` over all of ``Z``.

        Known in closed form only for power couplings in one dimension.
        """
        if self.kind == "zero":
            return 0.0
        if self.kind == "power" and dim == 1:
            a = self.exponent * power
            return 2.0 * float(zeta(a)) if a > 1 else math.inf
        return None

    def analytic_p_sum(self, dim: int = 1) -> float | None:
        return self.analytic_sum(1.0 / self.p, dim)


@dataclass(frozen=True)
class RadiusLaw:
    """Grain radius distribution with a declared moment constant ``K``.

    ``kind="uniform"`` is Uniform[0, K]; ``kind="constant"`` is the point
    mass at ``value`` with ``K = max(1, value)``.
    """

    kind: str = "uniform"
    K: float = 3.0
    value: float = 0.0

    def __post_init__(self):
        if self.kind == "uniform":
            if not self.K >= 1:
                raise ValueError("moment constant K must be >= 1")
        elif self.kind == "constant":
            if not (self.value >= 0 and math.isfinite(self.value)):
                raise ValueError("constant radius must be finite and non-negative")
            object.__setattr__(self, "K", max(1.0, float(self.value)))
        else:
            raise ValueError(f"unknown radius law {self.kind!r}")

    def quantile(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "uniform":
            return self.K * u
        return np.full_like(u, self.value)

    def moment(self, n: float) -> float:
        if self.kind == "uniform":
            return self.K ** n / (n + 1)
        return self.value ** n

    def survival(self, r) -> np.ndarray:
        """``P(Z > r)``."""
        r = np.asarray(r, dtype=float)
        if self.kind == "uniform":
            return np.clip(1.0 - r / self.K, 0.0, 1.0)
        return (self.value > r).astype(float)

    @property
    def support_max(self) -> float:
        return self.K if self.kind == "uniform" else self.value


def sample_lrp(points: PointSet, field: CouplingField, seed: int) -> Graph:
    """Long-range percolation: ``u ~ v`` with probability ``1 - exp(-beta J)``."""
    n = len(points)
    if n < 2 or field.kind == "zero":
        return Graph.empty(n)
    edges = []
    # row blocks keep memory linear in n for large windows
    for i in range(n - 1):
        j = np.arange(i + 1, n)
        d = np.linalg.norm(points.coords[j] - points.coords[i], axis=1)
        prob = field.edge_probability(d)
        ki, kj = points.keys[i], points.keys[j]
        lo = np.minimum(ki, kj)
        hi = np.maximum(ki, kj)
        u = keyed_uniform(seed, "lrp", lo, hi)
        for jj in j[u < prob]:
            edges.append((i, int(jj)))
    return Graph.from_edges(n, edges)


def sample_radii(points: PointSet, law: RadiusLaw, seed) -> np.ndarray:
    """Grain radii, one per point; ``seed`` may be an array of replica seeds."""
    s = np.asarray(seed, dtype=np.uint64)
    u = keyed_uniform(s[..., None] if s.ndim else s, "radius", points.keys)
    return law.quantile(u)


def sample_grg(points: PointSet, law: RadiusLaw, seed: int) -> Graph:
    """Geometric random graph: ``u ~ v`` iff ``dist(u, v) < min(R_u, R_v)``."""
    n = len(points)
    R = sample_radii(points, law, seed)
    rmax = float(R.max()) if n else 0.0
    if n < 2 or rmax <= 0:
        return Graph.empty(n)
    tree = cKDTree(points.coords)
    pairs = tree.query_pairs(rmax, output_type="ndarray")
    if len(pairs) == 0:
        return Graph.empty(n)
    d = np.linalg.norm(points.coords[pairs[:, 0]] - points.coords[pairs[:, 1]], axis=1)
    keep = d < np.minimum(R[pairs[:, 0]], R[pairs[:, 1]])
    return Graph.from_edges(n, pairs[keep].tolist())


def _row_sums(points: PointSet, centers, fn, chunk: int = 256) -> np.ndarray:
    idx = np.arange(len(points)) if centers is None else np.asarray(centers, dtype=int)
    out = np.empty(len(idx))
    for s in range(0, len(idx), chunk):
        block = idx[s:s + chunk]
        d = np.linalg.norm(points.coords[None, :, :] - points.coords[block, None, :], axis=2)
        vals = fn(d)
        vals[np.arange(len(block)), block] = 0.0
        out[s:s + chunk] = vals.sum(axis=1)
    return out


def p_sum(field: CouplingField, points: PointSet, centers=None) -> float:
    """Window version of ``sup_u sum_{v != u} J(u, v) ** (1/p)``.

    ``centers`` restricts the supremum to the given point indices.
    """
    if len(points) < 2 or field.kind == "zero":
        return 0.0
    sums = _row_sums(points, centers, lambda d: field.J(d) ** (1.0 / field.p))
    return float(sums.max())


def s_sum(points: PointSet, s: float, centers=None) -> float:
    """Window version of ``sup_v sum_{w != v} dist(v, w) ** -s``."""
    if s <= 1:
        raise ValueError("exponent s must exceed 1")
    if len(points) < 2:
        return 0.0

    def inv(d):
        with np.errstate(divide="ignore"):
            return np.where(d > 0, d ** -s, 0.0)

    return float(_row_sums(points, centers, inv).max())


@dataclass
class DeloneReport:
    discrete: bool
    dense: bool
    min_distance: float
    probes: int
    max_probe_gap: float
    inradius_box: tuple = field(default=())

    @property
    def passed(self) -> bool:
        return self.discrete and self.dense


def delone_check(points: PointSet, r_pack: float, r_cov: float, probes: int = 2000,
                 seed: int = 0) -> DeloneReport:
    """Check uniform discreteness exactly and relative density by probing.

    Discreteness holds when the minimum pairwise distance is at least
    ``2 * r_pack``.  Density probes are drawn in the bounding box shrunk by
    ``r_cov`` so that every probe ball lies inside the window; each must
    have a point within ``r_cov``.
    """
    n = len(points)
    if n >= 2:
        tree = cKDTree(points.coords)
        dd, _ = tree.query(points.coords, k=2)
        min_d = float(dd[:, 1].min())
    else:
        tree = cKDTree(points.coords) if n else None
        min_d = math.inf
    discrete = min_d >= 2 * r_pack
    if n == 0:
        return DeloneReport(discrete, False, min_d, 0, math.inf)
    lo = points.coords.min(axis=0) + r_cov
    hi = points.coords.max(axis=0) - r_cov
    if np.any(hi < lo):
        return DeloneReport(discrete, True, min_d, 0, 0.0, (tuple(lo), tuple(hi)))
    u = keyed_uniform(seed, "probe", np.arange(probes)[:, None], np.arange(points.dim)[None, :])
    centers = lo + u * (hi - lo)
    gap, _ = tree.query(centers, k=1)
    max_gap = float(gap.max())
    return DeloneReport(discrete, max_gap <= r_cov, min_d, probes, max_gap, (tuple(lo), tuple(hi)))


def bilipschitz_constant(a: PointSet, b: PointSet) -> float:
    """Smallest ``K`` with ``d/K <= d' <= K d`` for the index-matched map a -> b."""
    if len(a) != len(b):
        raise ValueError("point sets must have equal size")
    if len(a) < 2:
        return 1.0
    i, j = np.triu_indices(len(a), 1)
    da = np.linalg.norm(a.coords[i] - a.coords[j], axis=1)
    db = np.linalg.norm(b.coords[i] - b.coords[j], axis=1)
    r = db / da
    return float(max(r.max(), 1.0 / r.min()))


# -- Monte Carlo and exact quantities behind the moment / walk-sum bounds --

def _replica_chunks(replicas: int, chunk: int) -> Iterator[np.ndarray]:
    for s in range(0, replicas, chunk):
        yield np.arange(s, min(replicas, s + chunk), dtype=np.int64)


def lrp_degree_samples(points: PointSet, field: CouplingField, v: int, replicas: int,
                       seed: int, chunk: int = 5000) -> np.ndarray:
    """Degree of point ``v`` in ``replicas`` independent LRP samples.

    Replica ``r`` uses ``replica_seed(seed, r)``, so each sample agrees with
    :func:`sample_lrp` run on that seed.
    """
    others = np.array([j for j in range(len(points)) if j != v])
    d = np.linalg.norm(points.coords[others] - points.coords[v], axis=1)
    prob = field.edge_probability(d)
    live = prob > 0
    others, prob = others[live], prob[live]
    kv, ko = points.keys[v], points.keys[others]
    lo, hi = np.minimum(kv, ko), np.maximum(kv, ko)
    out = np.empty(replicas, dtype=np.int64)
    for r in _replica_chunks(replicas, chunk):
        seeds = replica_seed(seed, r)[:, None]
        u = keyed_uniform(seeds, "lrp", lo[None, :], hi[None, :])
        out[r] = (u < prob[None, :]).sum(axis=1)
    return out


def grg_degree_samples(points: PointSet, law: RadiusLaw, v: int, replicas: int, seed: int,
                       chunk: int = 5000) -> np.ndarray:
    """Degree of point ``v`` in ``replicas`` independent GRG samples."""
    d = points.distances_from(v)
    near = np.flatnonzero((d < law.support_max) & (np.arange(len(points)) != v))
    sub_keys = points.keys[near]
    out = np.empty(replicas, dtype=np.int64)
    for r in _replica_chunks(replicas, chunk):
        seeds = replica_seed(seed, r)
        Rv = law.quantile(keyed_uniform(seeds, "radius", points.keys[v]))
        Rw = law.quantile(keyed_uniform(seeds[:, None], "radius", sub_keys[None, :]))
        out[r] = (d[near][None, :] < np.minimum(Rv[:, None], Rw)).sum(axis=1)
    return out


def lrp_saw_sum_exact(points: PointSet, field: CouplingField, v: int, n: int) -> float:
    """``sum over distinct v_1..v_n != v of P(v, v_1, ..., v_n is a SAW) ** (1/p)``.

    Edges are independent, so each probability is a product of edge
    probabilities.  The sum runs over the finite window.
    """
    N = len(points)
    D = np.linalg.norm(points.coords[:, None, :] - points.coords[None, :, :], axis=2)
    A = field.edge_probability(D) ** (1.0 / field.p)
    np.fill_diagonal(A, 0.0)

    def rec(last: int, used: list[int], depth: int) -> float:
        row = A[last].copy()
        row[used] = 0.0
        if depth == 1:
            return float(row.sum())
        total = 0.0
        for w in np.flatnonzero(row):
            total += row[w] * rec(int(w), used + [int(w)], depth - 1)
        return total

    if n < 1:
        raise ValueError("n must be >= 1")
    return rec(v, [v], n) if N > 1 else 0.0


def saw_tuples(points: PointSet, v: int, n: int, reach: float) -> list[tuple[int, ...]]:
    """Ordered tuples ``(v, v_1, .., v_n)`` of distinct points whose
    consecutive distances are below ``reach``."""
    tree = cKDTree(points.coords)
    nbrs = [sorted(set(tree.query_ball_point(points.coords[i], np.nextafter(reach, 0))) - {i})
            for i in range(len(points))]
    out = []

    def rec(walk):
        if len(walk) == n + 1:
            out.append(tuple(walk))
            return
        for w in nbrs[walk[-1]]:
            if w not in walk:
                walk.append(w)
                rec(walk)
                walk.pop()

    rec([v])
    return out


def grg_saw_probability(points: PointSet, law: RadiusLaw, walk: Sequence[int]) -> float:
    """Exact probability that ``walk`` is a path of the GRG.

    Radii are independent, so this is a product over walk vertices of
    ``P(Z > largest distance to a walk neighbour)``.
    """
    walk = list(walk)
    steps = [float(np.linalg.norm(points.coords[a] - points.coords[b]))
             for a, b in zip(walk, walk[1:])]
    prob = 1.0
    for i in range(len(walk)):
        near = [steps[j] for j in (i - 1, i) if 0 <= j < len(steps)]
        prob *= float(law.survival(max(near))) if near else 1.0
    return prob


def grg_saw_probabilities_mc(points: PointSet, law: RadiusLaw, walks: Sequence[Sequence[int]],
                             replicas: int, seed: int, chunk: int = 5000
                             ) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo estimates (and standard errors) of the probability that
    each walk is a path of the GRG.  Radii are shared between edges."""
    W = np.asarray(walks, dtype=int)
    used = np.unique(W)
    pos = {int(u): i for i, u in enumerate(used)}
    Wl = np.vectorize(pos.get)(W)
    a, b = Wl[:, :-1], Wl[:, 1:]
    dist = np.linalg.norm(points.coords[W[:, :-1]] - points.coords[W[:, 1:]], axis=2)
    hits = np.zeros(len(W))
    for r in _replica_chunks(replicas, chunk):
        R = law.quantile(keyed_uniform(replica_seed(seed, r)[:, None], "radius",
                                       points.keys[used][None, :]))
        ok = (dist[None] < np.minimum(R[:, a], R[:, b])).all(axis=2)
        hits += ok.sum(axis=0)
    p = hits / replicas
    return p, np.sqrt(p * (1 - p) / replicas)


def lrp_degree_bound(beta: float, J: float, n: int) -> float:
    return (beta * J) ** n


def lrp_saw_bound(beta: float, p: float, J: float, n: int) -> float:
    return (beta ** (1.0 / p) * J) ** n


def grg_degree_bound(K: float, s: float, S: float, n: int) -> float:
    return (K ** (2 * s) * S) ** n


def grg_saw_bound(K: float, s: float, p: float, S: float, n: int) -> float:
    e = math.ceil(s * p) / p
    return K ** e * (S * K ** e) ** n
