"""Error metric and communication accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from ._rational import as_rational

# mean token transmissions per consensus run quoted for the 20-node experiments
REFERENCE_N_TT = Fraction("211.88")


class DegenerateStart(ValueError):
    """Some node started exactly at the optimum, so the normalized error is undefined."""


def error_metric(x_per_node: Sequence, x0_per_node: Sequence, x_star) -> float:
    """``sqrt(sum_i (x_i - x*)^2 / (x_i^0 - x*)^2)``."""
    if len(x_per_node) != len(x0_per_node):
        raise ValueError("x and x0 must have one entry per node")
    total = Fraction(0) if _all_exact(x_per_node, x0_per_node, [x_star]) else 0.0
    for xi, x0i in zip(x_per_node, x0_per_node):
        d0 = x0i - x_star
        if d0 == 0:
            raise DegenerateStart("initial estimate coincides with the optimum")
        total += (xi - x_star) ** 2 / d0**2
    return math.sqrt(total)


def _all_exact(*groups) -> bool:
    return all(isinstance(v, (int, Fraction)) for g in groups for v in g)


def table2_row(c_s, b_pm, n_tt) -> Fraction:
    """Closed-form total bits ``c_s * b_pm * n_tt`` (exact)."""
    return as_rational(c_s) * as_rational(b_pm) * as_rational(n_tt)


@dataclass
class BitLedger:
    """Per outer step: token transmissions, message width and the stopping-message columns."""

    n_tt: list[int] = field(default_factory=list)
    b_pm: list[int] = field(default_factory=list)
    mm_messages: list[int] = field(default_factory=list)
    vote_messages: list[int] = field(default_factory=list)

    def add(self, n_tt: int, b_pm: int, mm_messages: int = 0, vote_messages: int = 0) -> None:
        self.n_tt.append(int(n_tt))
        self.b_pm.append(int(b_pm))
        self.mm_messages.append(int(mm_messages))
        self.vote_messages.append(int(vote_messages))

    @classmethod
    def from_records(cls, records) -> "BitLedger":
        led = cls()
        for r in records:
            if r.step == 0:
                continue
            led.add(r.n_tt, r.b_pm, r.mm_messages, r.vote_messages)
        return led

    def __len__(self):
        return len(self.n_tt)

    def step_bits(self) -> list[int]:
        return [b * t for b, t in zip(self.b_pm, self.n_tt)]

    def cumulative(self) -> list[int]:
        out, acc = [], 0
        for b in self.step_bits():
            acc += b
            out.append(acc)
        return out

    def bits_until(self, steps: int) -> int:
        """Token bits spent in the first ``steps`` outer steps."""
        return sum(self.step_bits()[:steps])

    def vote_bits(self) -> int:
        # a vote is a single bit
        return sum(self.vote_messages)


def total_bits(ledger: BitLedger) -> int:
    return sum(ledger.step_bits())


def measured_avg_transmissions(runs: Iterable) -> Fraction:
    """Mean token-transmission count over consensus results (or plain counts)."""
    counts = [r if isinstance(r, int) else r.transmissions for r in runs]
    if not counts:
        raise ValueError("need at least one run")
    return Fraction(sum(counts), len(counts))
