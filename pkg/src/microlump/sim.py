"""Monte Carlo execution of a model and empirical validation of the exact
transition matrix.

Each step samples one (agent tuple, option) draw and applies the update
table, exactly the process the matrix encodes. Sampling runs on numpy's
counter-based Philox generator: one master seed, with per-state child
streams spawned for matrix estimation, so runs are reproducible and
stream order never matters. Draw probabilities are converted to floats
once, for sampling speed only; the exact path is the matrix itself.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from .chain import build_micro_chain
from .errors import ValidationError
from .lumping import Partition
from .model import ModelSpec, model_fingerprint
from .space import Config, ConfigSpace


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


class Sampler:
    """Precomputed draw table for repeated stepping of one model."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.choices = spec.joint_choices()
        self.weights = np.array([float(p) for _, _, p in self.choices])
        self.cum = list(np.cumsum(self.weights))
        self.cum[-1] = 1.0  # guard against float round-off at the top end

    def draw(self, rng: np.random.Generator) -> int:
        return bisect.bisect_right(self.cum, rng.random())

    def apply(self, which: int, config: Config) -> Config:
        tup, opt, _ = self.choices[which]
        rule = self.spec.rule
        args = tuple(config[a] for a in tup) + (opt,)
        new = rule.table[args]
        focal = tup[0]
        if new == config[focal]:
            return config
        return config[:focal] + (new,) + config[focal + 1:]

    def step(self, config: Config, rng: np.random.Generator) -> Config:
        return self.apply(self.draw(rng), config)


def step(spec: ModelSpec, config: Sequence[int], rng: np.random.Generator) -> Config:
    """One sampled update; build a Sampler instead when stepping in a loop."""
    return Sampler(spec).step(tuple(config), rng)


@dataclass(frozen=True)
class SimRun:
    seed: int
    steps: int
    start: int
    states: Tuple[int, ...]               # visited indices, start included
    counts: Dict[Tuple[int, int], int]    # (from, to) -> times taken
    fingerprint: str


def simulate(spec: ModelSpec, start: Sequence[int], steps: int, seed: int,
             cap: Optional[int] = None) -> SimRun:
    """Run one trajectory; identical (model, seed, steps) reproduce it."""
    sampler = Sampler(spec)
    space = ConfigSpace(spec.n_agents, spec.delta,
                        labels=spec.alphabet.symbols, cap=cap)
    config = space.check_config(start)
    rng = _rng(seed)
    visited = [space.index_of(config)]
    counts: Dict[Tuple[int, int], int] = {}
    for _ in range(steps):
        nxt = sampler.step(config, rng)
        pair = (visited[-1], space.index_of(nxt))
        counts[pair] = counts.get(pair, 0) + 1
        visited.append(pair[1])
        config = nxt
    return SimRun(seed=seed, steps=steps, start=visited[0],
                  states=tuple(visited), counts=counts,
                  fingerprint=model_fingerprint(spec))


def project_trajectory(run: SimRun, part: Partition) -> List[str]:
    """Visited block labels, in trajectory order."""
    return [part.label_of(x) for x in run.states]


def write_trajectory(run: SimRun, space: ConfigSpace, fh: TextIO,
                     part: Optional[Partition] = None) -> None:
    fh.write(f"# seed={run.seed} steps={run.steps} start={run.start} "
             f"model={run.fingerprint}\n")
    if part is None:
        for x in run.states:
            fh.write(space.format_index(x) + "\n")
    else:
        for label in project_trajectory(run, part):
            fh.write(label + "\n")


# ---------------------------------------------------------------------------
# matrix estimation

@dataclass(frozen=True)
class Deviation:
    x: int
    y: int
    empirical: float
    exact: float
    bound: float


@dataclass(frozen=True)
class EstimateReport:
    samples_per_state: int
    seed: int
    counts: Tuple[Dict[int, int], ...]   # per source state: target -> count
    max_abs_dev: float
    violations: Tuple[Deviation, ...]    # entries beyond their 3-sigma bound

    def empirical(self, x: int, y: int) -> float:
        return self.counts[x].get(y, 0) / self.samples_per_state


def estimate_matrix(spec: ModelSpec, steps_per_state: int, seed: int,
                    cap: Optional[int] = None):
    """Empirical one-step frequencies from every state versus the exact
    matrix.

    From each state the target of every draw is fixed, so sampling
    steps_per_state independent draws is done as one multinomial over the
    draw distribution, on that state's own child stream. Returns the
    report and the exact chain it was checked against.
    """
    if steps_per_state < 1:
        raise ValidationError("need at least one sample per state")
    chain = build_micro_chain(spec, cap=cap)
    space = chain.space
    sampler = Sampler(spec)
    pvals = sampler.weights / sampler.weights.sum()
    streams = np.random.SeedSequence(seed).spawn(space.size)
    counts: List[Dict[int, int]] = []
    max_dev = 0.0
    violations: List[Deviation] = []
    for x in range(space.size):
        config = space.config_of(x)
        targets = [space.index_of(sampler.apply(w, config))
                   for w in range(len(sampler.choices))]
        rng = np.random.Generator(np.random.Philox(streams[x]))
        drawn = rng.multinomial(steps_per_state, pvals)
        tally: Dict[int, int] = {}
        for tgt, cnt in zip(targets, drawn):
            if cnt:
                tally[tgt] = tally.get(tgt, 0) + int(cnt)
        counts.append(tally)
        exact_row = dict(chain.rows[x])
        for y in tally.keys() | exact_row.keys():
            p = float(exact_row.get(y, 0))
            emp = tally.get(y, 0) / steps_per_state
            dev = abs(emp - p)
            max_dev = max(max_dev, dev)
            bound = 3.0 * (p * (1.0 - p) / steps_per_state) ** 0.5
            if dev > bound:
                violations.append(Deviation(x, y, emp, p, bound))
    report = EstimateReport(samples_per_state=steps_per_state, seed=seed,
                            counts=tuple(counts), max_abs_dev=max_dev,
                            violations=tuple(violations))
    return report, chain


def estimate_text(report: EstimateReport) -> str:
    lines = [f"samples_per_state={report.samples_per_state} seed={report.seed}",
             f"max_abs_deviation={report.max_abs_dev:.6g}",
             f"entries_beyond_3sigma={len(report.violations)}"]
    for v in report.violations:
        lines.append(f"  ({v.x},{v.y}): empirical {v.empirical:.6g} vs exact "
                     f"{v.exact:.6g}, bound {v.bound:.6g}")
    return "\n".join(lines)
