"""Trial execution, output files, batch bound checks and the bit-count table.

Output directory layout after ``run_experiment``::

    trial_<seed>.csv     one row per outer step (column contract in TRIAL_COLUMNS)
    trial_<seed>.json    instance + run metadata (exact rationals as "p/q" strings)
    graph_<seed>.txt     edge list of the trial's digraph
    trace_<seed>.csv     per-round consensus state (only with trace enabled)
    aggregate.csv        step, mean_e_k, n_trials
    bits_summary.csv     per-trial communication totals
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..costs import CostEnsemble, QuadraticCost
from ..graph import (
    Digraph,
    GraphFormatError,
    NotStronglyConnected,
    format_edge_list,
    random_strongly_connected,
    read_edge_list,
)
from ..metrics import REFERENCE_N_TT, BitLedger, error_metric
from ..optimizer import StepSizeTooLarge, contraction_bound, run, validate
from .config import ConfigError, ExperimentConfig

log = logging.getLogger(__name__)

TRIAL_COLUMNS = (
    "step", "e_k", "delta", "b_q", "b_pm", "n_tt_step", "bits_step", "bits_cum", "event",
    "x_hat", "z_hat", "x_hat_prev", "mm_messages", "vote_messages", "self_sends", "consensus_rounds",
)
TRACE_COLUMNS = ("step", "round", "node", "y", "z", "M", "m", "sends")
SUMMARY_COLUMNS = (
    "seed", "algorithm", "steps", "cause", "n_tt_total", "n_tt_mean", "token_bits",
    "bits_at_reference_n_tt", "mm_messages", "vote_bits", "self_sends", "nu_in", "nu_out",
)
TABLE2_THRESHOLDS = (1e-2, 1e-3, 1e-5)
# float round trip of exact values in the CSVs
_TOL = 1e-9


class MissingTrajectory(OSError):
    pass


@dataclass
class Instance:
    seed: int
    graph: Digraph
    costs: CostEnsemble
    x0: tuple
    x_star: Fraction


@dataclass
class TrialOutput:
    seed: int
    trajectory_csv: str
    meta_json: str
    graph_txt: str
    trace_csv: str | None
    e_k: list[float]
    summary: dict


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _frac(v) -> str:
    return str(Fraction(v))


def _pick(rng, pool: list[Fraction], n: int) -> list[Fraction]:
    return [pool[int(i)] for i in rng.integers(0, len(pool), size=n)]


def build_instance(cfg: ExperimentConfig, seed: int) -> Instance:
    """Deterministic instance for one trial: digraph, quadratic costs and starting estimates."""
    if cfg.graph.file is not None:
        try:
            g = read_edge_list(cfg.graph.file)
        except GraphFormatError as exc:
            raise ConfigError(f"graph.file: {exc}") from None
    else:
        g_seed = cfg.graph.seed if cfg.graph.seed is not None else seed
        g = random_strongly_connected(cfg.graph.n, cfg.graph.p, seed=g_seed)
    n = g.n
    c = cfg.costs
    rng = np.random.default_rng([seed, 1])
    for name in ("beta", "center", "x0"):
        v = getattr(c, name)
        if v is not None and len(v) != n:
            raise ConfigError(f"costs.{name} lists {len(v)} values for {n} nodes")
    betas = list(c.beta) if c.beta is not None else _pick(rng, c.beta_set, n)
    centers = list(c.center) if c.center is not None else _pick(rng, c.center_set, n)
    try:
        costs = CostEnsemble([QuadraticCost(b, ctr) for b, ctr in zip(betas, centers)])
    except ValueError as exc:
        raise ConfigError(f"[smooth strongly convex costs] {exc}") from None
    x_star = costs.global_optimum()
    if c.x0 is not None:
        x0 = tuple(c.x0)
    else:
        # uniform draws snapped to a 1e-6 grid so the start is an exact rational;
        # redraw the rare sample that lands on the optimum
        x0 = []
        while len(x0) < n:
            u = rng.uniform(float(c.x0_low), float(c.x0_high))
            v = Fraction(round(u * 10**6), 10**6)
            if v != x_star:
                x0.append(v)
        x0 = tuple(x0)
    return Instance(seed=seed, graph=g, costs=costs, x0=x0, x_star=x_star)


def check_assumptions(cfg: ExperimentConfig, inst: Instance) -> None:
    """Translate optimizer validation failures into ConfigError naming the broken assumption."""
    try:
        validate(inst.graph, inst.costs, cfg.optimizer)
    except NotStronglyConnected as exc:
        raise ConfigError(f"[strong connectivity] trial {inst.seed}: {exc}") from None
    except StepSizeTooLarge as exc:
        raise ConfigError(f"[step-size bound] trial {inst.seed}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"[node count] trial {inst.seed}: {exc}") from None
    if any(x == inst.x_star for x in inst.x0):
        raise ConfigError(f"trial {inst.seed}: a starting estimate equals the optimum, error metric undefined")


def _write_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def run_trial(cfg: ExperimentConfig, seed: int) -> TrialOutput:
    inst = build_instance(cfg, seed)
    check_assumptions(cfg, inst)
    trace = [] if cfg.trace else None
    res = run(cfg.algorithm, inst.graph, inst.costs, inst.x0, cfg.optimizer, seed=seed, trace=trace)

    ledger = BitLedger.from_records(res.records)
    cum = [0] + ledger.cumulative()
    rows, errors = [], []
    for k, rec in enumerate(res.records):
        e = error_metric(rec.x, inst.x0, inst.x_star)
        errors.append(e)
        rows.append([
            rec.step, repr(e), _num(rec.delta), _num(rec.b_q), rec.b_pm, rec.n_tt,
            rec.b_pm * rec.n_tt, cum[k], "+".join(rec.events),
            _num(rec.x_hat), _num(rec.z_hat), _num(rec.x_hat_prev),
            rec.mm_messages, rec.vote_messages, rec.self_sends, rec.consensus_rounds,
        ])

    costs = inst.costs
    meta = {
        "seed": seed,
        "algorithm": cfg.algorithm,
        "n": inst.graph.n,
        "num_edges": inst.graph.num_edges,
        "diameter": inst.graph.diameter,
        "alpha": _frac(cfg.optimizer.alpha),
        "delta0": _frac(cfg.optimizer.delta0),
        "mu": _frac(costs.mu_global),
        "L": _frac(costs.L_global),
        "x_star": _frac(inst.x_star),
        "beta": [_frac(c.beta) for c in costs],
        "center": [_frac(c.center) for c in costs],
        "x0": [_frac(v) for v in inst.x0],
        "cause": res.cause,
        "termination_step": res.termination_step,
        "convergence_points": [cp.step for cp in res.convergence_points],
        "plateau_step": res.plateau_step,
        "nu_in": res.nu_in,
        "nu_out": res.nu_out,
    }
    n_steps = len(ledger)
    summary = {
        "seed": seed,
        "algorithm": cfg.algorithm,
        "steps": n_steps,
        "cause": res.cause,
        "n_tt_total": res.total_transmissions,
        "n_tt_mean": _num(Fraction(res.total_transmissions, n_steps)) if n_steps else "",
        "token_bits": res.total_bits,
        "bits_at_reference_n_tt": _num(sum(ledger.b_pm) * REFERENCE_N_TT),
        "mm_messages": sum(ledger.mm_messages),
        "vote_bits": ledger.vote_bits(),
        "self_sends": sum(r.self_sends for r in res.records),
        "nu_in": res.nu_in,
        "nu_out": res.nu_out,
    }
    graph_txt = format_edge_list(inst.graph)
    trace_csv = None
    if trace is not None:
        trace_csv = _write_csv(TRACE_COLUMNS, ([row[c] for c in TRACE_COLUMNS] for row in trace))
    return TrialOutput(
        seed=seed,
        trajectory_csv=_write_csv(TRIAL_COLUMNS, rows),
        meta_json=json.dumps(meta, indent=2) + "\n",
        graph_txt=graph_txt,
        trace_csv=trace_csv,
        e_k=errors,
        summary=summary,
    )


def aggregate_rows(per_trial: list[list[float]]) -> list[tuple[int, float, int]]:
    """Mean error per step over the trials still running at that step."""
    out = []
    horizon = max((len(e) for e in per_trial), default=0)
    for k in range(horizon):
        vals = [e[k] for e in per_trial if len(e) > k]
        out.append((k, math.fsum(vals) / len(vals), len(vals)))
    return out


def run_experiment(cfg: ExperimentConfig) -> list[Path]:
    """Run every trial seed and write the output directory; returns the written paths."""
    cfg.validate()
    # check every instance before spending time on any run
    for seed in cfg.seeds:
        check_assumptions(cfg, build_instance(cfg, seed))

    if cfg.jobs > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outputs = list(pool.map(run_trial, [cfg] * len(cfg.seeds), cfg.seeds))
    else:
        outputs = [run_trial(cfg, s) for s in cfg.seeds]

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name: str, text: str):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)

    for t in outputs:
        put(f"trial_{t.seed}.csv", t.trajectory_csv)
        put(f"trial_{t.seed}.json", t.meta_json)
        put(f"graph_{t.seed}.txt", t.graph_txt)
        if t.trace_csv is not None:
            put(f"trace_{t.seed}.csv", t.trace_csv)
        log.info("trial %d: %d steps, cause=%s", t.seed, t.summary["steps"], t.summary["cause"])
    agg = aggregate_rows([t.e_k for t in outputs])
    put("aggregate.csv", _write_csv(("step", "mean_e_k", "n_trials"), ((k, repr(m), c) for k, m, c in agg)))
    put("bits_summary.csv", _write_csv(SUMMARY_COLUMNS, ([t.summary[c] for c in SUMMARY_COLUMNS] for t in outputs)))
    return written


# ---- batch readers ---------------------------------------------------------


@dataclass
class Trial:
    seed: int
    meta: dict
    rows: list[dict]


def load_trials(in_dir: str | Path) -> list[Trial]:
    d = Path(in_dir)
    if not d.is_dir():
        raise MissingTrajectory(f"no such directory: {d}")
    paths = sorted(d.glob("trial_*.csv"), key=lambda p: int(p.stem.split("_", 1)[1]))
    if not paths:
        raise MissingTrajectory(f"no trial_*.csv files in {d}")
    trials = []
    for p in paths:
        meta_path = p.with_suffix(".json")
        if not meta_path.exists():
            raise MissingTrajectory(f"{p.name} has no metadata file {meta_path.name}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        with p.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        trials.append(Trial(seed=int(meta["seed"]), meta=meta, rows=rows))
    return trials


@dataclass
class StepCheck:
    seed: int
    step: int
    envelope_ok: bool
    band_ok: bool


@dataclass
class VerifyReport:
    checks: list[StepCheck] = field(default_factory=list)

    @property
    def steps_checked(self) -> int:
        return len(self.checks)

    @property
    def failures(self) -> list[StepCheck]:
        return [c for c in self.checks if not (c.envelope_ok and c.band_ok)]

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        out = [
            f"seed={c.seed} step={c.step} envelope={'pass' if c.envelope_ok else 'FAIL'} "
            f"band={'pass' if c.band_ok else 'FAIL'}"
            for c in self.checks
        ]
        out.append(f"{self.steps_checked} steps checked, {len(self.failures)} failing")
        return out


def verify_bounds(in_dir: str | Path) -> VerifyReport:
    """Re-check the contraction envelope and the consensus band on every stored step."""
    report = VerifyReport()
    for t in load_trials(in_dir):
        m = t.meta
        alpha, mu, L = Fraction(m["alpha"]), Fraction(m["mu"]), Fraction(m["L"])
        x_star = float(Fraction(m["x_star"]))
        n = int(m["n"])
        for row in t.rows:
            if row["x_hat_prev"] == "":
                continue  # step 0 has nothing to check
            delta = float(row["delta"])
            x_hat = float(row["x_hat"])
            bound = float(contraction_bound(float(row["x_hat_prev"]), x_star, float(alpha), float(mu), float(L), n, delta))
            env = abs(x_hat - x_star) <= bound + _TOL * (1 + abs(bound))
            band = abs(x_hat - float(row["z_hat"])) <= 2 * delta + _TOL * (1 + delta)
            report.checks.append(StepCheck(t.seed, int(row["step"]), env, band))
    return report


@dataclass
class Table2Cell:
    algorithm: str
    threshold: float
    trials_reached: int
    trials_total: int
    mean_c_s: float | None
    mean_bits_measured: float | None
    mean_bits_reference: float | None
    mean_n_tt: float | None


def table2(in_dir: str | Path, thresholds=TABLE2_THRESHOLDS) -> list[Table2Cell]:
    """Steps and bits needed to bring the error to each threshold.

    For each trial ``c_s`` is the first step with ``e_k <= threshold``. Measured
    bits sum ``b_pm * n_tt`` over those steps; reference bits use the fixed
    mean transmission count ``REFERENCE_N_TT`` instead of the measured one, so
    for a constant word length they equal ``c_s * b_pm * REFERENCE_N_TT``.
    """
    trials = load_trials(in_dir)
    cells = []
    algos = sorted({t.meta["algorithm"] for t in trials})
    for algo in algos:
        group = [t for t in trials if t.meta["algorithm"] == algo]
        for thr in thresholds:
            c_s, measured, reference, ntt = [], [], [], []
            for t in group:
                hit = next((r for r in t.rows if int(r["step"]) >= 1 and float(r["e_k"]) <= thr), None)
                if hit is None:
                    continue
                s = int(hit["step"])
                used = [r for r in t.rows if 1 <= int(r["step"]) <= s]
                c_s.append(s)
                measured.append(int(hit["bits_cum"]))
                reference.append(sum(int(r["b_pm"]) for r in used) * REFERENCE_N_TT)
                ntt.append(Fraction(sum(int(r["n_tt_step"]) for r in used), s))
            k = len(c_s)
            mean = (lambda v: float(sum(v, Fraction(0)) / k)) if k else (lambda v: None)
            cells.append(Table2Cell(algo, thr, k, len(group), mean(c_s), mean(measured), mean(reference), mean(ntt)))
    return cells


TABLE2_COLUMNS = (
    "algorithm", "threshold", "trials_reached", "trials_total",
    "mean_c_s", "mean_bits_measured", "mean_bits_reference", "mean_n_tt",
)


def table2_csv(cells: list[Table2Cell]) -> str:
    def f(v):
        return "" if v is None else repr(v)

    return _write_csv(
        TABLE2_COLUMNS,
        (
            [c.algorithm, f"{c.threshold:g}", c.trials_reached, c.trials_total,
             f(c.mean_c_s), f(c.mean_bits_measured), f(c.mean_bits_reference), f(c.mean_n_tt)]
            for c in cells
        ),
    )
