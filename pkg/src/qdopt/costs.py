"""Smooth strongly convex local objectives over a scalar decision variable."""

from __future__ import annotations

import abc
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ._rational import as_rational


class Unsupported(ValueError):
    pass


class Cost(abc.ABC):
    """Local cost ``f_i`` with Lipschitz-gradient constant ``L`` and strong-convexity constant ``mu``."""

    @abc.abstractmethod
    def evaluate(self, x): ...

    @abc.abstractmethod
    def gradient(self, x): ...

    @property
    @abc.abstractmethod
    def L(self): ...

    @property
    @abc.abstractmethod
    def mu(self): ...


@dataclass(frozen=True)
class QuadraticCost(Cost):
    """``f(x) = beta/2 * (x - center)**2``; ``L = mu = beta``.

    ``beta`` and ``center`` are stored as exact rationals so evaluating on
    rational inputs stays exact.
    """

    beta: Fraction
    center: Fraction

    def __post_init__(self):
        b = as_rational(self.beta)
        if b <= 0:
            raise ValueError(f"curvature must be positive, got {self.beta}")
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "center", as_rational(self.center))

    def evaluate(self, x):
        d = x - self.center
        return self.beta * d * d / 2

    def gradient(self, x):
        return self.beta * (x - self.center)

    @property
    def L(self):
        return self.beta

    @property
    def mu(self):
        return self.beta


class CostEnsemble:
    """The per-node costs of a network together with the global constants.

    ``L_global`` is the sum of the local Lipschitz constants and ``mu_global``
    the smallest local strong-convexity constant; ``alpha_max`` is the largest
    admissible step size ``2n / (mu + L)``.
    """

    def __init__(self, costs: Sequence[Cost]):
        if not costs:
            raise ValueError("ensemble needs at least one cost")
        self.costs = tuple(costs)
        self.L_global = sum(c.L for c in self.costs)
        self.mu_global = min(c.mu for c in self.costs)
        self.alpha_max = max_stepsize(self, len(self.costs))

    def __len__(self):
        return len(self.costs)

    def __getitem__(self, i):
        return self.costs[i]

    def __iter__(self):
        return iter(self.costs)

    def total(self, x):
        return sum(c.evaluate(x) for c in self.costs)

    def total_gradient(self, x):
        return sum(c.gradient(x) for c in self.costs)

    def global_optimum(self):
        return global_optimum(self)


def evaluate(c: Cost, x):
    return c.evaluate(x)


def gradient(c: Cost, x):
    return c.gradient(x)


def max_stepsize(e: CostEnsemble, n: int):
    """``2n / (mu + L)``; exact when the constants are rationals."""
    return 2 * n / (e.mu_global + e.L_global)


def global_optimum(e: CostEnsemble, tol: float = 1e-12):
    """Minimizer of the summed cost.

    Closed form ``sum(beta_i * c_i) / sum(beta_i)`` (exact) when every cost is
    quadratic, otherwise bisection on the summed gradient.
    """
    if all(isinstance(c, QuadraticCost) for c in e.costs):
        return sum(c.beta * c.center for c in e.costs) / sum(c.beta for c in e.costs)
    return _bisect_gradient(e, tol)


def _bisect_gradient(e: CostEnsemble, tol: float) -> float:
    g = lambda x: float(e.total_gradient(x))
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if g(lo) <= 0:
            break
        lo *= 2
    for _ in range(200):
        if g(hi) >= 0:
            break
        hi *= 2
    if g(lo) > 0 or g(hi) < 0:
        raise Unsupported("could not bracket the minimizer of the ensemble")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):  # float resolution exhausted
            break
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
