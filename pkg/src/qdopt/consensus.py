"""Finite-time quantized average consensus on digraphs, plus max/min flooding.

The averaging protocol moves integer tokens. Node ``i`` starts holding two
tokens of total value ``2*rho_i + 1``, which is twice its mid-rise payload
``rho_i + 1/2``. In every synchronous round each node

1. resets ``M_i = ceil(y_i/z_i)``, ``m_i = floor(y_i/z_i)`` at the start of a
   window of ``D`` rounds (``D`` = diameter),
2. floods ``(M_i, m_i)`` one hop (max / min over in-neighbours and itself),
3. splits its mass into ``z_i`` near-equal integer tokens, keeps one and sends
   each of the others to a uniformly random member of its out-neighbours plus
   itself,

after which all tokens are delivered at once. At the last round of a window a
node whose ``M_i - m_i <= 1`` outputs ``m_i * delta`` and stops; since every
node holds the network-wide extremes by then, all nodes stop together.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ._rational import as_rational
from .graph import Digraph

DEFAULT_MAX_ROUNDS = 10**6


class NonConvergence(RuntimeError):
    """The round cap was hit; indicates a broken protocol invariant."""


class ProtocolViolation(AssertionError):
    """Mass conservation or agreement failed during a run."""


@dataclass(frozen=True)
class ConsensusResult:
    value: Fraction
    level: int
    rounds: int
    transmissions: int
    self_sends: int
    mm_messages: int

    @property
    def token_sends(self) -> int:
        """All split tokens, including the ones a node addressed to itself."""
        return self.transmissions + self.self_sends


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def run_consensus(
    g: Digraph,
    rho: Sequence[int],
    delta=1,
    seed: int | None = None,
    *,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    trace: list | None = None,
) -> ConsensusResult:
    """Run the token protocol on integer floor levels ``rho``.

    Args:
        g: strongly connected digraph; its diameter sets the window length
        rho: per-node integer levels ``floor(x_i / delta)``
        delta: quantization level used to scale the output
        seed: seed of the single generator driving all destination draws
        max_rounds: cap raising :class:`NonConvergence`
        trace: if given, one dict per node and round is appended
            (``round, node, y, z, M, m, sends``)

    Returns:
        A :class:`ConsensusResult`; ``value`` is the common output ``m * delta``.
    """
    n = g.n
    if len(rho) != n:
        raise ValueError(f"expected {n} node values, got {len(rho)}")
    delta = as_rational(delta)
    window = max(g.diameter, 1)
    rng = random.Random(seed)
    rnd = rng.random

    y = [2 * int(r) + 1 for r in rho]
    z = [2] * n
    mass_y, mass_z = sum(y), 2 * n
    outs = g.out_neighbors
    ins = g.in_neighbors
    targets = [(i,) + tuple(outs[i]) for i in range(n)]
    edge_count = g.num_edges

    M = [0] * n
    m = [0] * n
    transmissions = self_sends = mm_messages = 0

    for lam in range(1, max_rounds + 1):
        if (lam - 1) % window == 0:
            M = [_ceil_div(y[i], z[i]) for i in range(n)]
            m = [y[i] // z[i] for i in range(n)]
        if edge_count:
            M = [max(M[i], *(M[j] for j in ins[i])) if ins[i] else M[i] for i in range(n)]
            m = [min(m[i], *(m[j] for j in ins[i])) if ins[i] else m[i] for i in range(n)]
            mm_messages += edge_count

        inbox_y = [0] * n
        inbox_z = [0] * n
        sends = [0] * n
        for i in range(n):
            zi = z[i]
            if zi <= 1:
                continue
            yi = y[i]
            t = targets[i]
            k = len(t)
            while zi > 1:
                c = yi // zi
                yi -= c
                zi -= 1
                dest = t[int(rnd() * k)]
                inbox_y[dest] += c
                inbox_z[dest] += 1
                if dest == i:
                    self_sends += 1
                else:
                    transmissions += 1
            sends[i] = z[i] - 1
            y[i] = yi
            z[i] = zi
        for i in range(n):
            y[i] += inbox_y[i]
            z[i] += inbox_z[i]

        if sum(y) != mass_y or sum(z) != mass_z:
            raise ProtocolViolation(f"mass not conserved in round {lam}")
        if trace is not None:
            trace.extend(
                {"round": lam, "node": i, "y": y[i], "z": z[i], "M": M[i], "m": m[i], "sends": sends[i]}
                for i in range(n)
            )

        if lam % window == 0:
            done = [M[i] - m[i] <= 1 for i in range(n)]
            if all(done):
                if len(set(m)) != 1:
                    raise ProtocolViolation(f"nodes halted with different outputs {sorted(set(m))}")
                return ConsensusResult(
                    value=m[0] * delta,
                    level=m[0],
                    rounds=lam,
                    transmissions=transmissions,
                    self_sends=self_sends,
                    mm_messages=mm_messages,
                )
            if any(done):
                raise ProtocolViolation(f"only some nodes met the stopping rule in round {lam}")
    raise NonConvergence(f"no termination within {max_rounds} rounds")


def quantized_average_level(rho: Sequence[int]) -> int:
    """Level every run of :func:`run_consensus` returns: ``floor(mean(rho) + 1/2)``.

    Stopping needs ``M - m <= 1`` over node averages whose mass-weighted mean
    is ``sum(y) / sum(z)``, which pins ``m`` to ``floor(sum(y) / sum(z))``.
    """
    n = len(rho)
    return (2 * sum(rho) + n) // (2 * n)


def _flood(g: Digraph, values, rounds: int | None, pick):
    vals = list(values)
    if len(vals) != g.n:
        raise ValueError(f"expected {g.n} node values, got {len(vals)}")
    if rounds is None:
        rounds = g.diameter
    ins = g.in_neighbors
    for _ in range(rounds):
        vals = [pick(vals[i], *(vals[j] for j in ins[i])) if ins[i] else vals[i] for i in range(g.n)]
    return vals


def max_consensus(g: Digraph, votes, rounds: int | None = None) -> list:
    """``rounds`` (default: diameter) synchronous rounds of ``v_i <- max`` over in-neighbours and self."""
    return _flood(g, votes, rounds, max)


def min_consensus(g: Digraph, values, rounds: int | None = None) -> list:
    return _flood(g, values, rounds, min)


def flood_messages(g: Digraph, rounds: int | None = None) -> int:
    """Point-to-point messages used by ``rounds`` flooding rounds (one per edge per round)."""
    return (g.diameter if rounds is None else rounds) * g.num_edges
