"""Permutations acting on configurations, orbit partitions, and the
invariance test that certifies a generator set as chain symmetries.

A space permutation reorders agents and relabels attribute codes at the
same time: position i of the image holds the relabeled code the source
kept at the preimage of i. Groups are never enumerated; orbits come from
union-find over the generators and the invariance check on generators
extends to the whole generated group by closure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DocumentParseError, ValidationError
from .lumping import Partition
from .space import Config, ConfigSpace


def _check_perm(p: Tuple[int, ...], what: str) -> None:
    if sorted(p) != list(range(len(p))):
        raise ValidationError(f"{what} {p} is not a permutation of 0..{len(p) - 1}")


@dataclass(frozen=True)
class SpacePermutation:
    """agents[i] is the image position of agent i; attrs[s] the image code."""

    agents: Tuple[int, ...]
    attrs: Tuple[int, ...]

    def __post_init__(self):
        _check_perm(self.agents, "agent permutation")
        _check_perm(self.attrs, "attribute permutation")

    @classmethod
    def identity(cls, n_agents: int, delta: int) -> "SpacePermutation":
        return cls(tuple(range(n_agents)), tuple(range(delta)))

    def is_identity(self) -> bool:
        return (self.agents == tuple(range(len(self.agents)))
                and self.attrs == tuple(range(len(self.attrs))))

    def apply(self, config: Sequence[int]) -> Config:
        out = [0] * len(self.agents)
        for i, code in enumerate(config):
            out[self.agents[i]] = self.attrs[code]
        return tuple(out)

    def compose(self, other: "SpacePermutation") -> "SpacePermutation":
        """self after other: (self * other)(x) = self(other(x))."""
        agents = tuple(self.agents[a] for a in other.agents)
        attrs = tuple(self.attrs[s] for s in other.attrs)
        return SpacePermutation(agents, attrs)

    def inverse(self) -> "SpacePermutation":
        inv_a = [0] * len(self.agents)
        for i, j in enumerate(self.agents):
            inv_a[j] = i
        inv_s = [0] * len(self.attrs)
        for s, t in enumerate(self.attrs):
            inv_s[t] = s
        return SpacePermutation(tuple(inv_a), tuple(inv_s))

    def index_map(self, space: ConfigSpace) -> np.ndarray:
        """Vector m with m[index_of(x)] = index_of(apply(x)) for all x."""
        if len(self.agents) != space.n_agents or len(self.attrs) != space.delta:
            raise ValidationError("permutation dimensions do not match the space")
        codes = space.codes_matrix
        attr_lut = np.array(self.attrs, dtype=codes.dtype)
        relabeled = attr_lut[codes]
        inv = self.inverse().agents
        image = relabeled[:, list(inv)]
        return image.astype(np.int64) @ space.radix


def apply(perm: SpacePermutation, config: Sequence[int]) -> Config:
    return perm.apply(config)


@dataclass(frozen=True)
class GeneratorSet:
    name: str
    perms: Tuple[SpacePermutation, ...]

    def __post_init__(self):
        if not self.perms:
            raise ValidationError("generator set is empty")


def _agent_transposition(n: int, delta: int, i: int, j: int) -> SpacePermutation:
    agents = list(range(n))
    agents[i], agents[j] = agents[j], agents[i]
    return SpacePermutation(tuple(agents), tuple(range(delta)))


def _attr_transposition(n: int, delta: int, s: int, t: int) -> SpacePermutation:
    attrs = list(range(delta))
    attrs[s], attrs[t] = attrs[t], attrs[s]
    return SpacePermutation(tuple(range(n)), tuple(attrs))


def agent_symmetric_group(n: int, delta: int) -> GeneratorSet:
    """Adjacent agent transpositions; they generate every agent reordering."""
    if n == 1:
        return GeneratorSet("SN", (SpacePermutation.identity(n, delta),))
    gens = tuple(_agent_transposition(n, delta, i, i + 1) for i in range(n - 1))
    return GeneratorSet("SN", gens)


def attr_symmetric_group(n: int, delta: int) -> GeneratorSet:
    """Adjacent attribute-code transpositions."""
    gens = tuple(_attr_transposition(n, delta, s, s + 1) for s in range(delta - 1))
    return GeneratorSet("Sdelta", gens)


def attr_group_fixing(n: int, delta: int, fixed: int) -> GeneratorSet:
    """Transpositions among all codes except `fixed`."""
    if not 0 <= fixed < delta:
        raise ValidationError(f"attribute code {fixed} out of range")
    moving = [s for s in range(delta) if s != fixed]
    if len(moving) < 2:
        return GeneratorSet(f"Sdelta-1:{fixed}", (SpacePermutation.identity(n, delta),))
    gens = tuple(_attr_transposition(n, delta, moving[k], moving[k + 1])
                 for k in range(len(moving) - 1))
    return GeneratorSet(f"Sdelta-1:{fixed}", gens)


def flip_generator(n: int, delta: int) -> GeneratorSet:
    """Simultaneous binary state flip; only defined for two codes."""
    if delta != 2:
        raise ValidationError("flip is only defined for two attribute codes")
    return GeneratorSet("flip", (_attr_transposition(n, 2, 0, 1),))


def parse_presets(text: str, n: int, delta: int) -> GeneratorSet:
    """Comma-separated presets: SN, Sdelta, Sdelta-1[:k], flip, full."""
    perms: List[SpacePermutation] = []
    names: List[str] = []
    for token in (t.strip() for t in text.split(",")):
        if not token:
            continue
        if token == "SN":
            part = agent_symmetric_group(n, delta)
        elif token == "Sdelta":
            part = attr_symmetric_group(n, delta)
        elif token == "flip":
            part = flip_generator(n, delta)
        elif token == "full":
            part = GeneratorSet("full", agent_symmetric_group(n, delta).perms
                                + attr_symmetric_group(n, delta).perms)
        elif token.startswith("Sdelta-1"):
            fixed = 0
            if ":" in token:
                _, _, tail = token.partition(":")
                try:
                    fixed = int(tail)
                except ValueError:
                    raise DocumentParseError(f"bad preset {token!r}")
            part = attr_group_fixing(n, delta, fixed)
        else:
            raise DocumentParseError(f"unknown generator preset {token!r}")
        perms.extend(part.perms)
        names.append(token)
    if not perms:
        raise DocumentParseError("no generator presets given")
    return GeneratorSet(",".join(names), tuple(perms))


def _parse_cycles(text: str, size: int, one_based: bool, what: str) -> Tuple[int, ...]:
    perm = list(range(size))
    text = text.strip()
    if text in ("", "()"):
        return tuple(perm)
    if not (text.startswith("(") and text.endswith(")")):
        raise DocumentParseError(f"{what} cycles must look like (a b)(c d)")
    seen = set()
    for cycle in text[1:-1].split(")("):
        try:
            members = [int(tok) - (1 if one_based else 0) for tok in cycle.split()]
        except ValueError:
            raise DocumentParseError(f"bad cycle entry in {what} cycles {text!r}")
        if len(members) < 2:
            raise DocumentParseError(f"cycle in {what} needs at least two entries")
        for m in members:
            if not 0 <= m < size:
                raise DocumentParseError(f"{what} cycle entry out of range in {text!r}")
            if m in seen:
                raise DocumentParseError(f"{what} cycles reuse an entry in {text!r}")
            seen.add(m)
        for k, m in enumerate(members):
            perm[m] = members[(k + 1) % len(members)]
    return tuple(perm)


def parse_generator_file(text: str, n: int, delta: int) -> GeneratorSet:
    """One generator per line. `agents: (1 2)(3 4)` uses 1-based agent
    numbers, `attrs: (0 1)` uses 0-based codes; a line may carry both parts
    and the omitted part is the identity."""
    perms: List[SpacePermutation] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        agents = tuple(range(n))
        attrs = tuple(range(delta))
        seen = False
        for part in line.split(";"):
            part = part.strip()
            if not part:
                continue
            key, _, value = part.partition(":")
            key = key.strip()
            if key == "agents":
                agents = _parse_cycles(value, n, one_based=True, what="agent")
            elif key == "attrs":
                attrs = _parse_cycles(value, delta, one_based=False, what="attribute")
            else:
                raise DocumentParseError(f"expected 'agents:' or 'attrs:', got {key!r}", lineno)
            seen = True
        if not seen:
            raise DocumentParseError("empty generator line", lineno)
        perms.append(SpacePermutation(agents, attrs))
    if not perms:
        raise DocumentParseError("generator file defines no generators")
    return GeneratorSet("file", tuple(perms))


# ---------------------------------------------------------------------------
# orbits

class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            if rx > ry:
                rx, ry = ry, rx
            self.parent[ry] = rx


def orbits(space: ConfigSpace, gens: GeneratorSet) -> Partition:
    """Orbit partition of the generated group, via union-find on the edges
    x ~ g(x) over the generators only.

    Blocks are ordered by smallest member; a block whose members all share
    one attribute-count vector is labeled with it, others get `O<i>`.
    """
    uf = _UnionFind(space.size)
    for perm in gens.perms:
        image = perm.index_map(space)
        moved = np.nonzero(image != np.arange(space.size, dtype=np.int64))[0]
        union = uf.union
        for x in moved.tolist():
            union(x, int(image[x]))
    block_ids: dict[int, int] = {}
    blocks: List[List[int]] = []
    find = uf.find
    for x in range(space.size):
        root = find(x)
        bid = block_ids.get(root)
        if bid is None:
            bid = len(blocks)
            block_ids[root] = bid
            blocks.append([])
        blocks[bid].append(x)
    counts = space.counts_matrix
    class_size: dict[bytes, int] = {}
    for x in range(space.size):
        key = counts[x].tobytes()
        class_size[key] = class_size.get(key, 0) + 1
    labels = []
    for bid, members in enumerate(blocks):
        first = counts[members[0]]
        # count labels only for blocks that are a whole count class, so
        # labels stay unique and mean what they say
        whole_class = (bool((counts[members] == first).all())
                       and len(members) == class_size[first.tobytes()])
        if whole_class:
            labels.append("⟨" + ",".join(str(int(k)) for k in first) + "⟩")
        else:
            labels.append(f"O{bid}")
    return Partition(tuple(tuple(b) for b in blocks), tuple(labels))


# ---------------------------------------------------------------------------
# chain invariance

@dataclass(frozen=True)
class SymmetryWitness:
    generator: int
    x: int
    y: int
    p_xy: Fraction
    image_x: int
    image_y: int
    p_image: Fraction

    def __str__(self):
        return (f"generator {self.generator}: P({self.x},{self.y}) = {self.p_xy} "
                f"but P({self.image_x},{self.image_y}) = {self.p_image}")


@dataclass(frozen=True)
class SymmetryVerdict:
    symmetric: bool
    witness: Optional[SymmetryWitness] = None

    def __bool__(self):
        return self.symmetric


def is_chain_symmetric(chain, gens: GeneratorSet) -> SymmetryVerdict:
    """Does every generator preserve all transition probabilities?

    Checking generators suffices for the generated group: the invariance
    property survives composition and inversion. On failure the witness
    names the generator, the entry, and both probabilities.
    """
    space = chain.space
    rows = chain.rows
    for gi, perm in enumerate(gens.perms):
        image = perm.index_map(space)
        for x in range(space.size):
            row = rows[x]
            ix = int(image[x])
            mapped = sorted((int(image[y]), p) for y, p in row)
            if tuple(mapped) != rows[ix]:
                target = dict(rows[ix])
                for y, p in row:
                    iy = int(image[y])
                    pi = target.get(iy, Fraction(0))
                    if pi != p:
                        witness = SymmetryWitness(gi, x, y, p, ix, iy, pi)
                        return SymmetryVerdict(False, witness)
    return SymmetryVerdict(True)
