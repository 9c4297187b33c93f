"""Event-driven construction of particle system trajectories.

Each clock tick at a core vertex ``v`` applies the thinning kernel
``mu_v = (alpha*_v + (c_v - alpha*_v(x)) delta_x) / c_v`` to the local
configuration on the closed neighborhood of ``v``.  The event mark is the
only randomness consumed, so two runs that share clocks agree wherever their
inputs agree.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from ..graph import Graph, Window, set_neighborhood
from ..graphical import ClockRealization, generations
from ..rng import MarkStream
from .kernels import JumpKernel, KernelContractError, Site, sites

__all__ = [
    "mu_step",
    "TrajectoryEvent",
    "Trajectory",
    "run",
    "run_by_generation",
    "final_state",
    "Cylinder",
    "NonCylinderError",
    "apply_generator",
    "check_kernel",
]

_REL = 1e-12


def check_kernel(kernel: JumpKernel, site: Site, local) -> tuple[list, float, float]:
    """Targets, total rate and bound at ``site``; raises on contract breaches."""
    tg = kernel.targets(site, local)
    c = kernel.rate_bound(site)
    alpha = math.fsum(r for _, r in tg)
    if alpha > c * (1 + _REL) + 1e-300:
        raise KernelContractError(
            f"{kernel.name} at vertex {site.v}: total rate {alpha!r} exceeds bound {c!r} "
            f"for local configuration {local!r}")
    for y, r in tg:
        if not r > 0 or len(y) != len(local):
            raise KernelContractError(f"{kernel.name} at vertex {site.v}: bad target {y!r} rate {r!r}")
        if kernel.self_updating and any(a != b for i, (a, b) in enumerate(zip(y, local))
                                        if i != site.center):
            raise KernelContractError(
                f"{kernel.name} is self-updating but a target at {site.v} changes a neighbor")
    return tg, alpha, c


def mu_step(kernel: JumpKernel, site: Site, local, stream: MarkStream | float):
    """One tick of the thinned clock at ``site``.

    Draws a single uniform ``U`` from the mark stream and walks the targets'
    cumulative rates up to ``U * c_v``; past ``alpha*`` the site stays put.
    """
    if not isinstance(stream, MarkStream):
        stream = MarkStream(stream)
    tg, alpha, c = check_kernel(kernel, site, local)
    if c <= 0:
        raise KernelContractError(f"clock tick at vertex {site.v} whose rate bound is 0")
    if not tg:
        return local
    threshold = stream.uniform() * c
    acc = 0.0
    for y, r in tg:
        acc += r
        if threshold < acc:
            return y
    return local


@dataclass(frozen=True)
class TrajectoryEvent:
    time: float
    v: int
    index: int
    nbhd: tuple[int, ...]
    old: tuple
    new: tuple

    @property
    def patch(self) -> dict[int, object]:
        return {u: b for u, a, b in zip(self.nbhd, self.old, self.new) if a != b}

    @property
    def jumped(self) -> bool:
        return self.old != self.new


@dataclass
class Trajectory:
    """Piecewise-constant path of a (window-truncated) particle system."""

    initial: dict[int, object]
    events: list[TrajectoryEvent]
    core: frozenset[int]
    clock_seed: int | None = None
    horizon: float = math.inf

    def state_at(self, t: float) -> dict[int, object]:
        x = dict(self.initial)
        for e in self.events:
            if e.time > t:
                break
            x.update(e.patch)
        return x

    def final(self) -> dict[int, object]:
        return self.state_at(math.inf)

    def events_at(self, v: int) -> list[TrajectoryEvent]:
        return [e for e in self.events if e.v == v]

    def history(self, v: int) -> list[tuple[float, object]]:
        """``(time, value)`` pairs at ``v``, starting with time 0."""
        out = [(0.0, self.initial[v])]
        for e in self.events:
            p = e.patch
            if v in p:
                out.append((e.time, p[v]))
        return out

    def to_jsonl(self) -> str:
        def enc(s):
            return list(s) if isinstance(s, tuple) else s

        head = {"initial": {str(u): enc(s) for u, s in sorted(self.initial.items())},
                "core": sorted(self.core), "clock_seed": self.clock_seed,
                "horizon": None if math.isinf(self.horizon) else self.horizon}
        lines = [json.dumps(head, separators=(",", ":"))]
        for e in self.events:
            lines.append(json.dumps({"t": e.time, "v": e.v,
                                     "patch": {str(u): enc(s) for u, s in sorted(e.patch.items())}},
                                    separators=(",", ":")))
        return "\n".join(lines) + "\n"


def _initial(x0, ambient) -> dict[int, object]:
    if isinstance(x0, Mapping):
        missing = [u for u in ambient if u not in x0]
        if missing:
            raise ValueError(f"initial configuration misses vertices {sorted(missing)[:5]}")
        return {u: x0[u] for u in sorted(ambient)}
    return {u: x0[u] for u in sorted(ambient)}


def _prepare(g: Graph, window: Window | None, kernel: JumpKernel, x0, clocks: ClockRealization,
             horizon: float | None):
    if window is None:
        window = Window.full(g)
    if window.graph is not g and window.graph != g:
        raise ValueError("window belongs to a different graph")
    if clocks.n != g.n:
        raise ValueError("clock realization and graph disagree on the vertex count")
    t_end = clocks.horizon if horizon is None else float(horizon)
    if t_end > clocks.horizon:
        raise ValueError("horizon beyond the clock realization")
    state = _initial(x0, window.ambient)
    for u, s in state.items():
        if not kernel.in_domain(s):
            raise ValueError(f"state {s!r} at {u} outside the {kernel.name} state domain")
    st = sites(g)
    for v in window.core:
        if not set(st[v].nbhd) <= window.ambient:
            raise ValueError(f"neighborhood of {v} not inside the window ambient set")
    events = [e for e in clocks.chronological(window.core) if e[0] <= t_end]
    return window, state, st, events, t_end


def run(g: Graph, window: Window | None, kernel: JumpKernel, x0, clocks: ClockRealization,
        horizon: float | None = None) -> Trajectory:
    """Chronological sweep over the clock events of the window core.

    Clocks outside the core are ignored, states outside the ambient set are
    never read or written.  Every tick is recorded, thinned ones included.
    """
    window, state, st, events, t_end = _prepare(g, window, kernel, x0, clocks, horizon)
    initial = dict(state)
    out = []
    for t, v, i in events:
        site = st[v]
        old = tuple(state[u] for u in site.nbhd)
        new = mu_step(kernel, site, old, MarkStream(clocks.marks[v][i]))
        for u, b in zip(site.nbhd, new):
            state[u] = b
        out.append(TrajectoryEvent(t, v, i, site.nbhd, old, new))
    return Trajectory(initial, out, window.core, clocks.seed, t_end)


def final_state(g: Graph, kernel: JumpKernel, x0: Sequence, clocks: ClockRealization,
                st: list[Site] | None = None) -> tuple:
    """Configuration at the clock horizon on the whole graph, without
    recording a trajectory (the fast path for replica sweeps)."""
    st = sites(g) if st is None else st
    state = list(x0)
    for t, v, i in clocks.chronological():
        site = st[v]
        old = tuple(state[u] for u in site.nbhd)
        new = mu_step(kernel, site, old, clocks.marks[v][i])
        for u, b in zip(site.nbhd, new):
            state[u] = b
    return tuple(state)


def run_by_generation(g: Graph, window: Window | None, kernel: JumpKernel, x0,
                      clocks: ClockRealization, horizon: float | None = None,
                      mode: str | None = None) -> Trajectory:
    """Evaluate the events generation by generation instead of by time.

    Each vertex keeps its full value history and an event reads the values
    in force just before its time.  Every event that can write into the
    neighborhood of ``v`` before ``T`` has a smaller generation than
    ``(v, T)``, so the result must match :func:`run` exactly.
    """
    window, state, st, events, t_end = _prepare(g, window, kernel, x0, clocks, horizon)
    if mode is None:
        mode = "one-step" if kernel.self_updating else "two-step"
    part = generations(g, clocks, mode, vertices=window.core)
    order = sorted(events, key=lambda e: (part.of(e[1], e[2]), e[0], e[1]))
    hist_t: dict[int, list[float]] = {u: [0.0] for u in state}
    hist_x: dict[int, list] = {u: [s] for u, s in state.items()}

    def value(u: int, t: float):
        # latest write strictly before t (time 0 holds the initial value)
        j = bisect_left(hist_t[u], t) - 1
        return hist_x[u][max(j, 0)]

    out = []
    for t, v, i in order:
        site = st[v]
        old = tuple(value(u, t) for u in site.nbhd)
        new = mu_step(kernel, site, old, MarkStream(clocks.marks[v][i]))
        for u, a, b in zip(site.nbhd, old, new):
            if a == b:
                continue
            j = bisect_left(hist_t[u], t)
            hist_t[u].insert(j, t)
            hist_x[u].insert(j, b)
        out.append(TrajectoryEvent(t, v, i, site.nbhd, old, new))
    out.sort(key=lambda e: (e.time, e.v))
    return Trajectory(dict(state), out, window.core, clocks.seed, t_end)


class NonCylinderError(TypeError):
    pass


@dataclass(frozen=True)
class Cylinder:
    """Observable depending only on the states of the finite ``base``.

    ``func`` receives the tuple of states on ``base`` (in the given order).
    """

    base: tuple[int, ...]
    func: Callable[[tuple], float]
    name: str = field(default="f", compare=False)

    def __call__(self, x) -> float:
        return float(self.func(tuple(x[u] for u in self.base)))


def apply_generator(g: Graph, kernel: JumpKernel, f: Cylinder, x, window: Window | None = None
                    ) -> float:
    """Exact ``G f(x) = sum_v sum_y (f(x^{v,y}) - f(x)) * rate(y)``.

    Only sites in the closed neighborhood of ``f``'s base (and in the window
    core when one is given) contribute.
    """
    if not isinstance(f, Cylinder):
        raise NonCylinderError("apply_generator needs a Cylinder observable")
    st = sites(g)
    support = set_neighborhood(g, f.base)
    if window is not None:
        support = support & window.core
    fx = f(x)
    total = []
    for v in sorted(support):
        site = st[v]
        local = tuple(x[u] for u in site.nbhd)
        tg, _, _ = check_kernel(kernel, site, local)
        for y, r in tg:
            patched = _Patched(x, site.nbhd, y)
            total.append((f(patched) - fx) * r)
    return math.fsum(total)


class _Patched:
    __slots__ = ("x", "patch")

    def __init__(self, x, nbhd, y):
        self.x = x
        self.patch = dict(zip(nbhd, y))

    def __getitem__(self, u):
        return self.patch[u] if u in self.patch else self.x[u]
