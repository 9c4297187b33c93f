"""Exact continuous-time Markov chain oracle for tiny windows.

The state space is the full product of finite local state lists.  The rate
matrix is assembled from :func:`apply_generator` on indicator observables,
so the oracle shares only the kernels with the simulator, never the
sampling path.  Kernels whose jumps can leave the finite lists (sandpiles)
get one extra absorbing overflow state.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import expm_multiply
from scipy.stats import poisson

from ..graph import Graph
from ..ips.engine import Cylinder, apply_generator, check_kernel
from ..ips.kernels import JumpKernel, sites

__all__ = ["StateSpaceTooLarge", "CtmcOracle", "OracleCheck"]

MAX_STATES = 50_000
DENSE_LIMIT = 3_000


class StateSpaceTooLarge(ValueError):
    pass


@dataclass
class OracleCheck:
    max_row_sum: float
    max_prob_row_error: float
    min_entry: float
    chapman_kolmogorov: float

    def passed(self, row_tol=1e-10, prob_tol=1e-9, neg_tol=1e-12, ck_tol=1e-8) -> bool:
        return (self.max_row_sum <= row_tol and self.max_prob_row_error <= prob_tol
                and self.min_entry >= -neg_tol and self.chapman_kolmogorov <= ck_tol)


class CtmcOracle:
    """Generator matrix and transition probabilities of a tiny system."""

    def __init__(self, g: Graph, kernel: JumpKernel, values=None, cap: int | None = None,
                 max_states: int = MAX_STATES):
        self.g = g
        self.kernel = kernel
        if values is None:
            values = kernel.state_values(cap)
        self.values = list(values)
        size = len(self.values) ** g.n
        if size > max_states:
            raise StateSpaceTooLarge(f"{size} states exceed the oracle limit of {max_states}")
        self.states = [tuple(s) for s in itertools.product(self.values, repeat=g.n)]
        self.index = {s: i for i, s in enumerate(self.states)}
        self._build()

    def _build(self) -> None:
        g, kernel = self.g, self.kernel
        st = sites(g)
        allv = tuple(range(g.n))
        rows, cols, vals = [], [], []
        overflow_rate = np.zeros(len(self.states))
        for i, x in enumerate(self.states):
            reach = set()
            for site in st:
                local = tuple(x[u] for u in site.nbhd)
                tg, _, _ = check_kernel(kernel, site, local)
                for y, r in tg:
                    full = list(x)
                    for u, s in zip(site.nbhd, y):
                        full[u] = s
                    full = tuple(full)
                    if full in self.index:
                        if full != x:
                            reach.add(full)
                    else:
                        overflow_rate[i] += r
            for y in sorted(reach, key=self.index.get):
                ind = Cylinder(allv, lambda s, y=y: float(s == y))
                q = apply_generator(g, kernel, ind, x)
                rows.append(i)
                cols.append(self.index[y])
                vals.append(q)
        self.truncated = bool(np.any(overflow_rate > 0))
        N = len(self.states) + (1 if self.truncated else 0)
        self.overflow = len(self.states) if self.truncated else None
        if self.truncated:
            for i in np.flatnonzero(overflow_rate):
                rows.append(int(i))
                cols.append(self.overflow)
                vals.append(float(overflow_rate[i]))
        Q = csr_matrix((vals, (rows, cols)), shape=(N, N)).toarray() if N <= DENSE_LIMIT else None
        if Q is not None:
            np.fill_diagonal(Q, 0.0)
            Q[np.diag_indices(N)] = -Q.sum(axis=1)
            self.Q = Q
        else:
            off = csr_matrix((vals, (rows, cols)), shape=(N, N))
            diag = -np.asarray(off.sum(axis=1)).ravel()
            self.Q = (off + csr_matrix((diag, (range(N), range(N))), shape=(N, N))).tocsr()
        self.size = N

    @property
    def dense(self) -> bool:
        return isinstance(self.Q, np.ndarray)

    def state_index(self, x) -> int:
        return self.index[tuple(x)]

    def P(self, t: float) -> np.ndarray:
        if not self.dense:
            raise StateSpaceTooLarge("full transition matrix only for dense oracles")
        return expm(t * self.Q)

    def row(self, x, t: float) -> np.ndarray:
        """Distribution at time ``t`` started from ``x``."""
        e = np.zeros(self.size)
        e[self.state_index(x)] = 1.0
        if self.dense:
            return e @ expm(t * self.Q)
        return expm_multiply(self.Q.T * t, e)

    def observable(self, f: Cylinder, overflow_value: float = 0.0) -> np.ndarray:
        vec = np.array([f(s) for s in self.states], dtype=float)
        if self.truncated:
            vec = np.append(vec, overflow_value)
        return vec

    def expectation(self, f: Cylinder, x, t: float) -> float:
        return float(self.row(x, t) @ self.observable(f))

    def overflow_probability(self, x, t: float) -> float:
        return float(self.row(x, t)[self.overflow]) if self.truncated else 0.0

    def generator(self, f: Cylinder, x) -> float:
        return float(self.Q[self.state_index(x)] @ self.observable(f)) if self.dense else \
            float((self.Q @ self.observable(f))[self.state_index(x)])

    def uniformized(self, x, t: float, tol: float = 1e-14) -> np.ndarray:
        """Independent transient solution by uniformization."""
        Q = self.Q if self.dense else self.Q.toarray()
        lam = float(-np.min(np.diag(Q)))
        e = np.zeros(self.size)
        e[self.state_index(x)] = 1.0
        if lam == 0:
            return e
        Pu = np.eye(self.size) + Q / lam
        kmax = int(poisson.isf(tol, lam * t)) + 2
        weights = poisson.pmf(np.arange(kmax + 1), lam * t)
        out = np.zeros(self.size)
        vec = e
        for k in range(kmax + 1):
            out += weights[k] * vec
            vec = vec @ Pu
        return out

    def self_check(self, s: float = 0.3, t: float = 0.2) -> OracleCheck:
        Q = self.Q if self.dense else self.Q.toarray()
        rs = float(np.max(np.abs(Q.sum(axis=1))))
        Ps, Pt, Pst = expm(s * Q), expm(t * Q), expm((s + t) * Q)
        prob_err = max(float(np.max(np.abs(M.sum(axis=1) - 1))) for M in (Ps, Pt, Pst))
        mn = min(float(M.min()) for M in (Ps, Pt, Pst))
        ck = float(np.max(np.abs(Ps @ Pt - Pst)))
        return OracleCheck(rs, prob_err, mn, ck)

