"""Jump rate kernels of the concrete particle systems.

A kernel sees the local configuration on the closed neighborhood of a site,
as a tuple aligned with ``Site.nbhd`` (sorted vertex ids).  It lists the
possible target local configurations with their rates; the total is the
jump rate ``alpha*`` and must not exceed the clock intensity ``c_v``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

from ..graph import Graph, neighborhood

__all__ = [
    "KernelContractError",
    "Site",
    "sites",
    "JumpKernel",
    "Voter",
    "Contact",
    "DiscreteSandpile",
    "DivisibleSandpile",
    "Urn",
    "BirthDeath",
    "make_kernel",
]

Local = tuple


class KernelContractError(RuntimeError):
    """A kernel produced a total rate above its declared bound, or an
    invalid target."""


@dataclass(frozen=True)
class Site:
    v: int
    nbhd: tuple[int, ...]
    center: int          # position of v inside nbhd
    deg: int


def sites(g: Graph) -> list[Site]:
    out = []
    for v in range(g.n):
        nb = neighborhood(g, v)
        out.append(Site(v, nb, nb.index(v), len(g.adj[v])))
    return out


def _with(local: Local, i: int, value) -> Local:
    return local[:i] + (value,) + local[i + 1:]


def _power(base: float, k: float) -> float:
    return float(base) ** k if base > 0 else 0.0


class JumpKernel(ABC):
    """Rates of the jumps available at a site."""

    name: str = "kernel"
    self_updating: bool = False
    illustrative: bool = False

    @abstractmethod
    def rate_bound(self, site: Site) -> float:
        """``c_v``: supremum of the total rate over local configurations."""

    @abstractmethod
    def targets(self, site: Site, local: Local) -> list[tuple[Local, float]]:
        """Targets with positive rates, in a fixed deterministic order."""

    def total_rate(self, site: Site, local: Local) -> float:
        return math.fsum(r for _, r in self.targets(site, local))

    def state_values(self, cap: int | None = None) -> list:
        """Finite list of local states (for exact oracles)."""
        raise NotImplementedError(f"{self.name} has no finite state list")

    def in_domain(self, state) -> bool:
        return True

    def params(self) -> dict:
        return {}


def _check_k(k) -> float:
    if not (k >= 0 and math.isfinite(k)):
        raise ValueError("degree exponent k must be finite and non-negative")
    return float(k)


class Voter(JumpKernel):
    """Two-state voter model.  Site ``v`` adopts state ``s`` at rate
    ``(#neighbors in state s) ** k``; ``c_v = deg(v) ** k``."""

    name = "voter"
    self_updating = True

    def __init__(self, k: float = 1):
        self.k = _check_k(k)

    def rate_bound(self, site):
        return _power(site.deg, self.k)

    def targets(self, site, local):
        x = local[site.center]
        s = 1 - x
        m = sum(1 for i, y in enumerate(local) if i != site.center and y == s)
        if m == 0:
            return []
        return [(_with(local, site.center, s), _power(m, self.k))]

    def state_values(self, cap=None):
        return [0, 1]

    def in_domain(self, state):
        return state in (0, 1)

    def params(self):
        return {"k": self.k}


class Contact(JumpKernel):
    """Contact process: recovery at rate 1, infection at rate
    ``lam * (#infected neighbors) ** k``; ``c_v = max(1, lam * deg ** k)``."""

    name = "contact"
    self_updating = True

    def __init__(self, lam: float, k: float = 1):
        if not lam > 0:
            raise ValueError("infection parameter must be positive")
        self.lam = float(lam)
        self.k = _check_k(k)

    def rate_bound(self, site):
        return max(1.0, self.lam * _power(site.deg, self.k))

    def targets(self, site, local):
        if local[site.center] == 1:
            return [(_with(local, site.center, 0), 1.0)]
        m = sum(1 for i, y in enumerate(local) if i != site.center and y == 1)
        if m == 0:
            return []
        return [(_with(local, site.center, 1), self.lam * _power(m, self.k))]

    def state_values(self, cap=None):
        return [0, 1]

    def in_domain(self, state):
        return state in (0, 1)

    def params(self):
        return {"lam": self.lam, "k": self.k}


class DiscreteSandpile(JumpKernel):
    """A site holding more grains than its degree topples at rate
    ``deg ** k``, sending one grain to each neighbor."""

    name = "discrete_sandpile"

    def __init__(self, k: float = 1):
        self.k = _check_k(k)

    def rate_bound(self, site):
        return _power(site.deg, self.k)

    def targets(self, site, local):
        d = site.deg
        if d == 0 or local[site.center] <= d:
            return []
        new = tuple(y - d if i == site.center else y + 1 for i, y in enumerate(local))
        return [(new, _power(d, self.k))]

    def state_values(self, cap=None):
        if cap is None:
            raise ValueError("grain counts need a cap for enumeration")
        return list(range(cap + 1))

    def in_domain(self, state):
        return isinstance(state, int) and state >= 0

    def params(self):
        return {"k": self.k}


class DivisibleSandpile(JumpKernel):
    """A site with mass above ``lam`` sends ``lam / deg`` to each neighbor
    at rate ``deg ** k``."""

    name = "divisible_sandpile"

    def __init__(self, k: float = 1, lam: float = 1.0):
        if not lam > 0:
            raise ValueError("threshold must be positive")
        self.k = _check_k(k)
        self.lam = float(lam)

    def rate_bound(self, site):
        return _power(site.deg, self.k)

    def targets(self, site, local):
        d = site.deg
        if d == 0 or not local[site.center] > self.lam:
            return []
        share = self.lam / d
        new = tuple(y - self.lam if i == site.center else y + share for i, y in enumerate(local))
        return [(new, _power(d, self.k))]

    def in_domain(self, state):
        return state >= 0

    def params(self):
        return {"k": self.k, "lam": self.lam}


class Urn(JumpKernel):
    """Interacting urns with local state ``(white, black)``.

    The clock runs at ``deg ** k``.  A tick draws a ball uniformly; a white
    draw adds ``alpha`` white and ``m - alpha`` black balls to every
    neighbor, a black draw adds ``m - beta`` white and ``beta`` black.  An
    empty urn has nothing to draw and never jumps.
    """

    name = "urn"

    def __init__(self, alpha: int, beta: int, m: int, k: float = 1):
        if not (0 <= alpha <= m and 0 <= beta <= m):
            raise ValueError("need 0 <= alpha, beta <= m")
        self.alpha, self.beta, self.m = int(alpha), int(beta), int(m)
        self.k = _check_k(k)

    def rate_bound(self, site):
        return _power(site.deg, self.k)

    def targets(self, site, local):
        d = site.deg
        w, b = local[site.center]
        if d == 0 or w + b == 0:
            return []
        c = _power(d, self.k)
        out = []
        for count, (dw, db) in ((w, (self.alpha, self.m - self.alpha)),
                                (b, (self.m - self.beta, self.beta))):
            if count == 0:
                continue
            new = tuple(y if i == site.center else (y[0] + dw, y[1] + db)
                        for i, y in enumerate(local))
            out.append((new, c * count / (w + b)))
        return out

    def in_domain(self, state):
        return len(state) == 2 and state[0] >= 0 and state[1] >= 0

    def params(self):
        return {"alpha": self.alpha, "beta": self.beta, "m": self.m, "k": self.k}


class BirthDeath(JumpKernel):
    """Illustrative birth-death process on counts ``0..cap``.

    Immigrants arrive at rate ``b0`` and are accepted while the count is
    below ``cap``.  An occupied site loses an organism at rate
    ``d0 + lam * (sum of neighbor counts)``.
    """

    name = "birth_death"
    self_updating = True
    illustrative = True

    def __init__(self, b0: float, d0: float, lam: float, cap: int):
        if min(b0, d0, lam) < 0 or cap < 1:
            raise ValueError("rates must be non-negative and cap >= 1")
        self.b0, self.d0, self.lam, self.cap = float(b0), float(d0), float(lam), int(cap)

    def rate_bound(self, site):
        return self.b0 + self.d0 + self.lam * site.deg * self.cap

    def targets(self, site, local):
        x = local[site.center]
        out = []
        if x < self.cap and self.b0 > 0:
            out.append((_with(local, site.center, x + 1), self.b0))
        if x > 0:
            pressure = sum(y for i, y in enumerate(local) if i != site.center)
            r = self.d0 + self.lam * pressure
            if r > 0:
                out.append((_with(local, site.center, x - 1), r))
        return out

    def state_values(self, cap=None):
        return list(range(self.cap + 1))

    def in_domain(self, state):
        return isinstance(state, int) and 0 <= state <= self.cap

    def params(self):
        return {"b0": self.b0, "d0": self.d0, "lam": self.lam, "cap": self.cap}


_MODELS = {
    "voter": Voter,
    "contact": Contact,
    "discrete_sandpile": DiscreteSandpile,
    "divisible_sandpile": DivisibleSandpile,
    "urn": Urn,
    "birth_death": BirthDeath,
}


def make_kernel(name: str, **params) -> JumpKernel:
    try:
        cls = _MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(_MODELS)}") from None
    return cls(**params)
