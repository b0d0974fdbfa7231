"""Enumeration and mixed-radix indexing of the joint state space of N agents.

A configuration assigns each of the N agents one of delta attribute codes.
Configurations are plain tuples of ints; the space object maps them to and
from dense integer indices (agent 0 is the least significant digit) and
exposes the single-change adjacency structure.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from .errors import CapExceededError, ValidationError

Config = Tuple[int, ...]

DEFAULT_CAP = 1 << 24
CAP_ENV_VAR = "MICROLUMP_CAP"


def default_cap() -> int:
    """Enumeration cap: MICROLUMP_CAP from the environment, else 2**24."""
    raw = os.environ.get(CAP_ENV_VAR)
    if raw is None:
        return DEFAULT_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValidationError(f"{CAP_ENV_VAR} must be an integer, got {raw!r}")
    if cap < 1:
        raise ValidationError(f"{CAP_ENV_VAR} must be positive, got {cap}")
    return cap


@dataclass(frozen=True)
class ConfigSpace:
    """The set of all delta**n_agents configurations, densely indexed.

    `labels` are display names for the attribute codes; they default to the
    code digits and never influence any computation.
    """

    n_agents: int
    delta: int
    labels: Optional[Tuple[str, ...]] = None
    cap: Optional[int] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValidationError(f"need at least one agent, got {self.n_agents}")
        if self.delta < 2:
            raise ValidationError(f"need at least two attribute codes, got {self.delta}")
        cap = self.cap if self.cap is not None else default_cap()
        if self.delta ** self.n_agents > cap:
            raise CapExceededError(
                f"state space has {self.delta}**{self.n_agents} = "
                f"{self.delta ** self.n_agents} configurations, above the cap {cap}"
            )
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(str(s) for s in range(self.delta)))
        if len(self.labels) != self.delta or len(set(self.labels)) != self.delta:
            raise ValidationError("labels must be distinct and one per attribute code")

    @property
    def size(self) -> int:
        return self.delta ** self.n_agents

    def check_config(self, config: Sequence[int]) -> Config:
        config = tuple(config)
        if len(config) != self.n_agents:
            raise ValidationError(
                f"configuration has {len(config)} entries, expected {self.n_agents}"
            )
        for code in config:
            if not 0 <= code < self.delta:
                raise ValidationError(f"attribute code {code} out of range 0..{self.delta - 1}")
        return config

    def index_of(self, config: Sequence[int]) -> int:
        """Mixed-radix index, agent 0 least significant."""
        config = self.check_config(config)
        idx = 0
        base = 1
        for code in config:
            idx += code * base
            base *= self.delta
        return idx

    def config_of(self, idx: int) -> Config:
        if not 0 <= idx < self.size:
            raise ValidationError(f"state index {idx} out of range 0..{self.size - 1}")
        codes = []
        for _ in range(self.n_agents):
            idx, code = divmod(idx, self.delta)
            codes.append(code)
        return tuple(codes)

    def configs(self) -> Iterator[Config]:
        """All configurations in index order."""
        for idx in range(self.size):
            yield self.config_of(idx)

    def neighbors(self, config: Sequence[int]):
        """All (agent, configuration) pairs reachable by changing one agent.

        Exactly (delta-1)*n_agents pairs, ordered by agent then by new code.
        """
        config = self.check_config(config)
        out = []
        for i, current in enumerate(config):
            for code in range(self.delta):
                if code == current:
                    continue
                out.append((i, config[:i] + (code,) + config[i + 1:]))
        return out

    def counts(self, config: Sequence[int]) -> Tuple[int, ...]:
        """Number of agents holding each attribute code, indexed by code."""
        config = self.check_config(config)
        tally = [0] * self.delta
        for code in config:
            tally[code] += 1
        return tuple(tally)

    @cached_property
    def radix(self) -> np.ndarray:
        return np.array([self.delta ** i for i in range(self.n_agents)], dtype=np.int64)

    @cached_property
    def codes_matrix(self) -> np.ndarray:
        """(size, n_agents) array of attribute codes, row i = config_of(i)."""
        dtype = np.min_scalar_type(self.delta - 1)
        out = np.empty((self.size, self.n_agents), dtype=dtype)
        idx = np.arange(self.size, dtype=np.int64)
        for i in range(self.n_agents):
            idx, rem = np.divmod(idx, self.delta)
            out[:, i] = rem
        return out

    @cached_property
    def counts_matrix(self) -> np.ndarray:
        """(size, delta) array; row i = counts(config_of(i))."""
        codes = self.codes_matrix
        out = np.empty((self.size, self.delta), dtype=np.int64)
        for s in range(self.delta):
            out[:, s] = (codes == s).sum(axis=1)
        return out

    def format_config(self, config: Sequence[int]) -> str:
        config = self.check_config(config)
        return "(" + ",".join(self.labels[code] for code in config) + ")"

    def format_index(self, idx: int) -> str:
        return self.format_config(self.config_of(idx))
