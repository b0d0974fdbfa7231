"""Partitions of the state space, the block-sum lumpability test, and
construction of the reduced chain.

A partition passes the test when, block by block, every member state sends
the same total probability into each other block; those common sums are the
reduced chain's entries. Rows are exactly stochastic, so the sum into a
state's own block is implied by the others and the exact test skips it
(tolerance mode, meant for imported float chains, checks every pair).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

from .errors import DocumentParseError, NotLumpableError, ValidationError
from .space import ConfigSpace

ONE = Fraction(1)
Row = Tuple[Tuple[int, Fraction], ...]


@dataclass(frozen=True)
class Partition:
    """Disjoint blocks of state indices covering 0..n_states-1, labeled."""

    blocks: Tuple[Tuple[int, ...], ...]
    labels: Tuple[str, ...]

    def __post_init__(self):
        if len(self.blocks) != len(self.labels):
            raise ValidationError("need exactly one label per block")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("block labels must be distinct")
        seen: Dict[int, int] = {}
        for bid, block in enumerate(self.blocks):
            if not block:
                raise ValidationError(f"block {self.labels[bid]!r} is empty")
            for x in block:
                if x in seen:
                    raise ValidationError(f"state {x} appears in two blocks")
                seen[x] = bid
        n = len(seen)
        if set(seen) != set(range(n)):
            raise ValidationError("blocks must cover exactly the states 0..n-1")

    @property
    def n_states(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @cached_property
    def block_of(self) -> Tuple[int, ...]:
        out = [0] * self.n_states
        for bid, block in enumerate(self.blocks):
            for x in block:
                out[x] = bid
        return tuple(out)

    def label_of(self, state: int) -> str:
        return self.labels[self.block_of[state]]

    def same_blocks(self, other: "Partition") -> bool:
        """Equality as set partitions, ignoring labels and block order."""
        return ({frozenset(b) for b in self.blocks}
                == {frozenset(b) for b in other.blocks})


def singleton_partition(n_states: int) -> Partition:
    return Partition(tuple((x,) for x in range(n_states)),
                     tuple(str(x) for x in range(n_states)))


def _angle_label(counts: Sequence[int]) -> str:
    return "⟨" + ",".join(str(int(k)) for k in counts) + "⟩"


def frequency_partition(space: ConfigSpace) -> Partition:
    """States grouped by their attribute-count vector.

    Block count is the number of ways to split N agents over delta codes,
    C(N+delta-1, delta-1); blocks are ordered by smallest member state.
    """
    counts = space.counts_matrix
    blocks: List[List[int]] = []
    labels: List[str] = []
    where: Dict[bytes, int] = {}
    for x in range(space.size):
        key = counts[x].tobytes()
        bid = where.get(key)
        if bid is None:
            bid = len(blocks)
            where[key] = bid
            blocks.append([])
            labels.append(_angle_label(counts[x]))
        blocks[bid].append(x)
    return Partition(tuple(tuple(b) for b in blocks), tuple(labels))


def moran_partition(space: ConfigSpace, distinguished: int = 0) -> Partition:
    """N+1 line states X_k, k = number of agents holding the distinguished
    code; coincides with the count partition when there are two codes."""
    if not 0 <= distinguished < space.delta:
        raise ValidationError(f"attribute code {distinguished} out of range")
    tallies = space.counts_matrix[:, distinguished]
    n = space.n_agents
    blocks: List[List[int]] = [[] for _ in range(n + 1)]
    for x in range(space.size):
        blocks[int(tallies[x])].append(x)
    labels = tuple(f"X_{k}" for k in range(n + 1))
    return Partition(tuple(tuple(b) for b in blocks), labels)


def half_hypercube_partition(space: ConfigSpace) -> Partition:
    """Binary only: Y_k joins the count classes with k and N-k agents in
    one state, folding the state flip away."""
    if space.delta != 2:
        raise ValidationError("half-hypercube reduction needs exactly two codes")
    n = space.n_agents
    tallies = space.counts_matrix[:, 0]
    blocks: List[List[int]] = [[] for _ in range(n // 2 + 1)]
    for x in range(space.size):
        k = int(tallies[x])
        blocks[min(k, n - k)].append(x)
    labels = tuple(f"Y_{k}" for k in range(n // 2 + 1))
    return Partition(tuple(tuple(b) for b in blocks), labels)


def induced_partition(fine: Partition, coarse: Partition) -> Partition:
    """The coarse partition expressed over the fine partition's blocks.

    Requires coarse to be a union of fine blocks; block b of the result
    collects the fine block ids inside coarse block b.
    """
    if fine.n_states != coarse.n_states:
        raise ValidationError("partitions cover different state counts")
    groups: List[List[int]] = [[] for _ in coarse.blocks]
    for fid, block in enumerate(fine.blocks):
        targets = {coarse.block_of[x] for x in block}
        if len(targets) != 1:
            raise ValidationError(
                f"fine block {fine.labels[fid]!r} straddles coarse blocks; not a refinement")
        groups[targets.pop()].append(fid)
    return Partition(tuple(tuple(g) for g in groups), coarse.labels)


# ---------------------------------------------------------------------------
# lumpability test

@dataclass(frozen=True)
class LumpWitness:
    block_from: str
    block_to: str
    state: int
    state_sum: Fraction
    ref_state: int
    ref_sum: Fraction

    def __str__(self):
        return (f"block {self.block_from} → {self.block_to}: state "
                f"{self.ref_state} sums to {self.ref_sum} but state "
                f"{self.state} sums to {self.state_sum}")


@dataclass(frozen=True)
class LumpVerdict:
    lumpable: bool
    witness: Optional[LumpWitness] = None
    violations: Tuple[LumpWitness, ...] = ()

    def __bool__(self):
        return self.lumpable


def block_row_sums(chain, part: Partition, state: int) -> Dict[int, Fraction]:
    """Total probability the state sends into each block, by block id."""
    agg: Dict[int, Fraction] = {}
    for y, p in chain.rows[state]:
        b = part.block_of[y]
        agg[b] = agg.get(b, Fraction(0)) + p
    return agg


def check_lumpable(chain, part: Partition, tol: Optional[float] = None,
                   exhaustive: bool = False) -> LumpVerdict:
    """Block-sum test against the first member of each block.

    Exact mode compares rationals and skips each state's own block (its sum
    is one minus the rest). `tol` switches to absolute-difference
    comparison including the own block, for chains imported from floats.
    `exhaustive` collects every violating (state, block) pair instead of
    stopping at the first.
    """
    if part.n_states != chain.n_states:
        raise ValidationError(
            f"partition covers {part.n_states} states, chain has {chain.n_states}")
    tol_frac = None if tol is None else Fraction(tol)
    ref: List[Optional[Dict[int, Fraction]]] = [None] * part.n_blocks
    ref_state: List[int] = [0] * part.n_blocks
    violations: List[LumpWitness] = []
    for x in range(chain.n_states):
        agg = block_row_sums(chain, part, x)
        k = part.block_of[x]
        if tol_frac is None:
            agg.pop(k, None)
        if ref[k] is None:
            ref[k] = agg
            ref_state[k] = x
            continue
        base = ref[k]
        for l in base.keys() | agg.keys():
            a = base.get(l, Fraction(0))
            b = agg.get(l, Fraction(0))
            bad = abs(a - b) > tol_frac if tol_frac is not None else a != b
            if bad:
                witness = LumpWitness(part.labels[k], part.labels[l],
                                      x, b, ref_state[k], a)
                if not exhaustive:
                    return LumpVerdict(False, witness, (witness,))
                violations.append(witness)
    if violations:
        return LumpVerdict(False, violations[0], tuple(violations))
    return LumpVerdict(True)


@dataclass(frozen=True)
class MacroChain:
    """The reduced chain over a partition's blocks."""

    partition: Partition
    rows: Tuple[Row, ...]
    origin: object = None

    @property
    def n_states(self) -> int:
        return self.partition.n_blocks

    def row(self, idx: int) -> Row:
        return self.rows[idx]

    def entry(self, k: int, l: int) -> Fraction:
        for col, p in self.rows[k]:
            if col == l:
                return p
        return Fraction(0)


def lump(chain, part: Partition, tol: Optional[float] = None) -> MacroChain:
    """Reduce the chain; raises NotLumpableError (with the witness) if the
    partition fails the test."""
    verdict = check_lumpable(chain, part, tol=tol)
    if not verdict:
        raise NotLumpableError(verdict.witness)
    rows: List[Row] = []
    for k, block in enumerate(part.blocks):
        agg = block_row_sums(chain, part, block[0])
        row = tuple((l, p) for l, p in sorted(agg.items()) if p != 0)
        rows.append(row)
    return MacroChain(partition=part, rows=tuple(rows), origin=chain)


# ---------------------------------------------------------------------------
# partition file format: one line per block, `label: idx idx ...`

def write_partition(part: Partition, fh: TextIO) -> None:
    for label, block in zip(part.labels, part.blocks):
        fh.write(f"{label}: {' '.join(str(x) for x in block)}\n")


def read_partition(text: str) -> Partition:
    blocks: List[Tuple[int, ...]] = []
    labels: List[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        label, sep, body = line.partition(":")
        if not sep:
            raise DocumentParseError("expected 'label: idx idx ...'", lineno)
        try:
            members = tuple(int(tok) for tok in body.split())
        except ValueError:
            raise DocumentParseError("state indices must be integers", lineno)
        labels.append(label.strip())
        blocks.append(members)
    if not blocks:
        raise DocumentParseError("partition file defines no blocks")
    return Partition(tuple(blocks), tuple(labels))


def load_partition(path) -> Partition:
    with open(path, "r", encoding="utf-8") as fh:
        return read_partition(fh.read())
