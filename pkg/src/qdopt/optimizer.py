"""Quantized averaged gradient descent drivers.

Every outer step performs one local gradient step followed by one run of the
token consensus on the quantized results:

* ``alg1``: infinite-range mid-rise quantizer at a fixed level.
* ``alg3``: as ``alg1``, but at each convergence point (the shared estimate
  repeats exactly) the nodes vote on local stopping conditions, flood the
  votes with max-consensus and either stop or divide the level by ``c_r``.
* ``alg4``: ``n_bits``-bit bounded quantizer with a movable basis; at each
  non-terminating convergence point the basis moves to the estimate and the
  level grows by ``c_out`` (estimate saturated) or shrinks by ``c_in``.

State is kept in exact rationals so the convergence-point equality test is
exact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._rational import as_rational
from .consensus import DEFAULT_MAX_ROUNDS, flood_messages, max_consensus, run_consensus
from .costs import CostEnsemble
from .graph import Digraph, NotStronglyConnected, is_strongly_connected
from .quantizer import BoundedMidRise, MidRiseInfinite, bits_for_infinite_message

log = logging.getLogger(__name__)

ALGORITHMS = ("alg1", "alg3", "alg4")


class StepSizeTooLarge(ValueError):
    pass


def _threshold(v):
    if isinstance(v, float) and math.isinf(v):
        if v < 0:
            raise ValueError("stopping thresholds must be nonnegative")
        return v
    if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    r = as_rational(v)
    if r < 0:
        raise ValueError("stopping thresholds must be nonnegative")
    return r


@dataclass
class OptimizerConfig:
    alpha: Fraction = Fraction(3, 25)
    delta0: Fraction = Fraction(1, 10)
    eps_s1: Fraction | float = Fraction(1, 1000)
    eps_s2: Fraction | float = Fraction(1, 1000)
    c_r: int = 2
    c_in: Fraction = Fraction(4, 3)
    c_out: Fraction = Fraction(2)
    n_bits: int = 3
    b_q0: Fraction = Fraction(0)
    max_outer_steps: int = 60
    unsafe_alpha: bool = False
    # alg1 only: stop once the shared estimate has not moved for this many steps
    patience: int | None = None
    # bit width of infinite-range messages: fixed width, else standard table, else range formula
    message_bits: int | None = None
    value_range: Fraction | None = Fraction(5)
    # keep the alg4 basis at b_q0 during zoom events
    freeze_basis: bool = False
    max_consensus_rounds: int = DEFAULT_MAX_ROUNDS

    def __post_init__(self):
        self.alpha = as_rational(self.alpha)
        self.delta0 = as_rational(self.delta0)
        self.eps_s1 = _threshold(self.eps_s1)
        self.eps_s2 = _threshold(self.eps_s2)
        self.c_in = as_rational(self.c_in)
        self.c_out = as_rational(self.c_out)
        self.b_q0 = as_rational(self.b_q0)
        if self.value_range is not None:
            self.value_range = as_rational(self.value_range)
        if self.alpha <= 0:
            raise ValueError(f"step size must be positive, got {self.alpha}")
        if self.delta0 <= 0:
            raise ValueError(f"initial quantization level must be positive, got {self.delta0}")
        if int(self.c_r) != self.c_r or self.c_r < 2:
            raise ValueError(f"refinement constant must be an integer >= 2, got {self.c_r}")
        self.c_r = int(self.c_r)
        if self.c_in <= 1 or self.c_out <= 1:
            raise ValueError("zoom constants must exceed 1")
        if self.n_bits < 1:
            raise ValueError("n_bits must be >= 1")
        if self.max_outer_steps < 0:
            raise ValueError("max_outer_steps must be >= 0")


@dataclass
class StepRecord:
    """State after ``step`` consensus runs.

    ``delta`` and ``b_q`` are the quantizer parameters that produced ``x``
    (for step 0: the initial parameters). ``events`` holds tags raised at this
    step: ``converged``, ``refine``, ``zoom-in``, ``zoom-out``, ``terminate``.
    """

    step: int
    x: tuple
    x_hat: Fraction
    delta: Fraction
    b_q: Fraction
    x_hat_prev: Fraction | None = None
    z_hat: Fraction | None = None
    b_pm: int = 0
    n_tt: int = 0
    self_sends: int = 0
    mm_messages: int = 0
    vote_messages: int = 0
    consensus_rounds: int = 0
    events: tuple = ()


@dataclass
class ConvergencePoint:
    step: int  # gamma_beta
    x: Fraction
    prev_x: tuple  # per-node estimate at the previous convergence point
    votes: tuple
    flag: int


@dataclass
class RunResult:
    algorithm: str
    records: list[StepRecord]
    x0: tuple
    x_star: Fraction
    cause: str  # "terminate", "max_steps" or "patience"
    nu_in: int = 0
    nu_out: int = 0
    S: list[int] = field(default_factory=lambda: [0])
    convergence_points: list[ConvergencePoint] = field(default_factory=list)
    plateau_step: int | None = None

    @property
    def termination_step(self) -> int:
        return self.records[-1].step

    @property
    def nu_total(self) -> int:
        return len(self.convergence_points)

    @property
    def trajectory(self) -> list[Fraction]:
        return [r.x_hat for r in self.records]

    @property
    def total_transmissions(self) -> int:
        return sum(r.n_tt for r in self.records)

    @property
    def total_bits(self) -> int:
        return sum(r.b_pm * r.n_tt for r in self.records)

    @property
    def vote_bits(self) -> int:
        return sum(r.vote_messages for r in self.records)


def validate(g: Digraph, costs: CostEnsemble, cfg: OptimizerConfig) -> None:
    """Raise if the run would break strong connectivity, node count or the step-size bound."""
    if not is_strongly_connected(g):
        raise NotStronglyConnected("communication graph is not strongly connected")
    if len(costs) != g.n:
        raise ValueError(f"{len(costs)} costs for {g.n} nodes")
    if not cfg.unsafe_alpha and cfg.alpha > costs.alpha_max:
        raise StepSizeTooLarge(
            f"alpha={cfg.alpha} exceeds 2n/(mu+L)={costs.alpha_max} ({float(costs.alpha_max):.6g})"
        )


def step_seed(seed: int | None, k: int) -> int | None:
    """Seed of the consensus run at outer step ``k``."""
    if seed is None:
        return None
    return int(np.random.SeedSequence([int(seed), int(k)]).generate_state(2, np.uint64)[0])


def _mean(values) -> Fraction:
    return sum(values, Fraction(0)) / len(values)


def _run(
    algorithm: str, g: Digraph, costs: CostEnsemble, x0: Sequence, cfg: OptimizerConfig, seed, trace=None
) -> RunResult:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    validate(g, costs, cfg)
    n = g.n
    if len(x0) != n:
        raise ValueError(f"{len(x0)} initial values for {n} nodes")
    x = tuple(as_rational(v) for v in x0)
    delta = cfg.delta0
    b_q = cfg.b_q0
    bounded = algorithm == "alg4"
    result = RunResult(
        algorithm=algorithm,
        records=[StepRecord(step=0, x=x, x_hat=_mean(x), delta=delta, b_q=b_q)],
        x0=x,
        x_star=costs.global_optimum(),
        cause="max_steps",
    )
    prev_conv_x = x  # x at gamma_0 = 0
    still = 0

    for k in range(cfg.max_outer_steps):
        z = [xi - cfg.alpha * c.gradient(xi) for xi, c in zip(x, costs)]
        if bounded:
            q = BoundedMidRise.for_bits(b_q, delta, cfg.n_bits)
            levels = [q.index(zi) for zi in z]
            b_pm = q.bits_per_symbol
        else:
            q = MidRiseInfinite(delta)
            levels = [q.level(zi) for zi in z]
            b_pm = bits_for_infinite_message(delta, cfg.message_bits, cfg.value_range)
        rounds_log = [] if trace is not None else None
        res = run_consensus(
            g, levels, delta, seed=step_seed(seed, k), max_rounds=cfg.max_consensus_rounds, trace=rounds_log
        )
        if trace is not None:
            trace.extend({"step": k + 1, **row} for row in rounds_log)
        x_new = (b_q + res.value) if bounded else res.value
        rec = StepRecord(
            step=k + 1,
            x=(x_new,) * n,
            x_hat=x_new,
            delta=delta,
            b_q=b_q,
            x_hat_prev=_mean(x),
            z_hat=_mean(z),
            b_pm=b_pm,
            n_tt=res.transmissions,
            self_sends=res.self_sends,
            mm_messages=res.mm_messages,
            consensus_rounds=res.rounds,
        )
        result.records.append(rec)
        converged = all(xi == x_new for xi in x)
        x = rec.x
        events = []

        if converged:
            events.append("converged")
            if result.plateau_step is None:
                result.plateau_step = k
            still += 1
        else:
            still = 0

        if converged and algorithm != "alg1":
            result.S.append(k)
            votes = []
            for i, c in enumerate(costs):
                improved = abs(c.evaluate(prev_conv_x[i]) - c.evaluate(x_new))
                grad = abs(c.gradient(x_new))
                votes.append(0 if improved <= cfg.eps_s1 and grad <= cfg.eps_s2 else 1)
            flags = max_consensus(g, votes)
            if len(set(flags)) != 1:
                raise AssertionError("max-consensus left nodes with different flags")
            flag = flags[0]
            rec.vote_messages = flood_messages(g)
            result.convergence_points.append(
                ConvergencePoint(step=k, x=x_new, prev_x=prev_conv_x, votes=tuple(votes), flag=flag)
            )
            prev_conv_x = x
            if flag == 0:
                events.append("terminate")
                rec.events = tuple(events)
                result.cause = "terminate"
                break
            if algorithm == "alg3":
                delta = delta / cfg.c_r
                events.append("refine")
            else:
                if q.is_saturated(x_new):
                    result.nu_out += 1
                    delta = delta * cfg.c_out
                    events.append("zoom-out")
                else:
                    result.nu_in += 1
                    delta = delta / cfg.c_in
                    events.append("zoom-in")
                if not cfg.freeze_basis:
                    b_q = x_new
        rec.events = tuple(events)

        if algorithm == "alg1" and cfg.patience is not None and still >= cfg.patience:
            result.cause = "patience"
            break

    log.debug("%s finished after %d steps (%s)", algorithm, result.termination_step, result.cause)
    return result


def run_alg1(
    g: Digraph, costs: CostEnsemble, x0: Sequence, cfg: OptimizerConfig, seed: int | None = None, trace=None
) -> RunResult:
    return _run("alg1", g, costs, x0, cfg, seed, trace)


def run_alg3(
    g: Digraph, costs: CostEnsemble, x0: Sequence, cfg: OptimizerConfig, seed: int | None = None, trace=None
) -> RunResult:
    return _run("alg3", g, costs, x0, cfg, seed, trace)


def run_alg4(
    g: Digraph, costs: CostEnsemble, x0: Sequence, cfg: OptimizerConfig, seed: int | None = None, trace=None
) -> RunResult:
    return _run("alg4", g, costs, x0, cfg, seed, trace)


def run(
    algorithm: str, g: Digraph, costs: CostEnsemble, x0: Sequence, cfg: OptimizerConfig, seed=None, trace=None
) -> RunResult:
    """Dispatch to one of :data:`ALGORITHMS`. ``trace`` collects per-round consensus rows tagged with ``step``."""
    return _run(algorithm, g, costs, x0, cfg, seed, trace)


def noise_term(alpha, L, n: int, delta):
    """``(4*alpha*L/n + 2) * delta``, the quantization term of the contraction envelope."""
    return (4 * alpha * L / n + 2) * delta


def contraction_bound(x_hat_prev, x_star, alpha, mu, L, n: int, delta):
    return (1 - alpha * mu / n) * abs(x_hat_prev - x_star) + noise_term(alpha, L, n, delta)


def check_contraction(rec: StepRecord, costs: CostEnsemble, cfg: OptimizerConfig, x_star=None) -> bool:
    """Whether ``|x_hat - x*| <= (1 - alpha*mu/n) |x_hat_prev - x*| + (4 alpha L/n + 2) delta`` at this step."""
    if rec.x_hat_prev is None:
        return True
    if x_star is None:
        x_star = costs.global_optimum()
    bound = contraction_bound(rec.x_hat_prev, x_star, cfg.alpha, costs.mu_global, costs.L_global, len(costs), rec.delta)
    return abs(rec.x_hat - x_star) <= bound


def check_band(rec: StepRecord) -> bool:
    """Whether the consensus output is within ``2*delta`` of the mean pre-consensus value."""
    if rec.z_hat is None:
        return True
    return abs(rec.x_hat - rec.z_hat) <= 2 * rec.delta


def limit_radius(costs: CostEnsemble, cfg: OptimizerConfig, delta):
    """``n/(alpha*mu) * (4 alpha L/n + 2) * delta``, the radius the envelope settles into."""
    n = len(costs)
    return n / (cfg.alpha * costs.mu_global) * noise_term(cfg.alpha, costs.L_global, n, delta)


def recheck_termination(result: RunResult, costs: CostEnsemble, cfg: OptimizerConfig) -> bool:
    """Centrally re-verify both stopping conditions at every node for a vote-terminated run."""
    if result.cause != "terminate":
        return False
    cp = result.convergence_points[-1]
    for i, c in enumerate(costs):
        if abs(c.evaluate(cp.prev_x[i]) - c.evaluate(cp.x)) > cfg.eps_s1:
            return False
        if abs(c.gradient(cp.x)) > cfg.eps_s2:
            return False
    return True


def zoom_ledger_delta(cfg: OptimizerConfig, nu_in: int, nu_out: int) -> Fraction:
    return cfg.delta0 * cfg.c_out**nu_out / cfg.c_in**nu_in
