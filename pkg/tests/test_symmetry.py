import random
from fractions import Fraction

import pytest

from microlump import (ConfigSpace, Partition, SpacePermutation,
                       ValidationError, agent_symmetric_group,
                       build_micro_chain, builtin_voter,
                       is_chain_symmetric, lump, orbits, parse_generator_file,
                       parse_presets)
from microlump.errors import DocumentParseError
from conftest import LETTERS, letter_index


def test_agent_swap_two_agents():
    swap = SpacePermutation((1, 0), (0, 1, 2))
    assert swap.apply((0, 2)) == (2, 0)
    assert swap.apply((1, 1)) == (1, 1)


def test_attr_swap_reverses_labels():
    # swap the first and third attribute codes: abc -> cba pattern-wise
    perm = SpacePermutation((0, 1, 2), (2, 1, 0))
    assert perm.apply((0, 1, 2)) == (2, 1, 0)


def test_identity_fixes_everything():
    ident = SpacePermutation.identity(3, 2)
    for cfg in LETTERS.values():
        assert ident.apply(cfg) == cfg


def rand_perm(rng, n):
    p = list(range(n))
    rng.shuffle(p)
    return tuple(p)


def test_compose_matches_sequential_application():
    rng = random.Random(11)
    for _ in range(50):
        g = SpacePermutation(rand_perm(rng, 4), rand_perm(rng, 3))
        h = SpacePermutation(rand_perm(rng, 4), rand_perm(rng, 3))
        cfg = tuple(rng.randrange(3) for _ in range(4))
        assert g.compose(h).apply(cfg) == g.apply(h.apply(cfg))


def test_inverse_roundtrip():
    rng = random.Random(13)
    for _ in range(50):
        g = SpacePermutation(rand_perm(rng, 5), rand_perm(rng, 2))
        cfg = tuple(rng.randrange(2) for _ in range(5))
        assert g.inverse().apply(g.apply(cfg)) == cfg


def test_index_map_matches_apply():
    space = ConfigSpace(3, 3)
    rng = random.Random(17)
    for _ in range(20):
        g = SpacePermutation(rand_perm(rng, 3), rand_perm(rng, 3))
        image = g.index_map(space)
        for idx in range(space.size):
            assert int(image[idx]) == space.index_of(g.apply(space.config_of(idx)))


def test_orbits_agent_group_binary():
    space = ConfigSpace(3, 2)
    part = orbits(space, agent_symmetric_group(3, 2))
    blocks = {frozenset(b) for b in part.blocks}
    expect = {
        frozenset({letter_index("a")}),
        frozenset({letter_index(l) for l in "bcd"}),
        frozenset({letter_index(l) for l in "efg"}),
        frozenset({letter_index("h")}),
    }
    assert blocks == expect
    assert part.labels == ("⟨3,0⟩", "⟨2,1⟩",
                           "⟨1,2⟩", "⟨0,3⟩")


def test_orbits_full_group_binary():
    space = ConfigSpace(3, 2)
    part = orbits(space, parse_presets("SN,flip", 3, 2))
    blocks = {frozenset(b) for b in part.blocks}
    assert blocks == {
        frozenset({letter_index("a"), letter_index("h")}),
        frozenset({letter_index(l) for l in "bcdefg"}),
    }


@pytest.mark.parametrize("n", range(2, 7))
def test_orbit_counts_three_attrs(n):
    space = ConfigSpace(n, 3)
    part = orbits(space, agent_symmetric_group(n, 3))
    assert part.n_blocks == (n + 1) * (n + 2) // 2


def test_orbits_identity_generators_are_singletons():
    from microlump import GeneratorSet
    space = ConfigSpace(3, 2)
    ident = GeneratorSet("id", (SpacePermutation.identity(3, 2),))
    part = orbits(space, ident)
    assert part.n_blocks == space.size
    assert len(set(part.labels)) == space.size
    # whole-class singletons keep the count label, the rest are numbered
    assert part.labels[letter_index("a")] == "⟨3,0⟩"
    assert part.labels[letter_index("c")].startswith("O")


def test_orbit_blocks_closed_under_generators():
    space = ConfigSpace(4, 2)
    gens = parse_presets("SN,flip", 4, 2)
    part = orbits(space, gens)
    for perm in gens.perms:
        image = perm.index_map(space)
        for block in part.blocks:
            assert {int(image[x]) for x in block} == set(block)


def test_chain_symmetric_complete_voter(voter3_chain):
    assert is_chain_symmetric(voter3_chain, agent_symmetric_group(3, 2))


def test_chain_not_symmetric_path(path3_chain):
    verdict = is_chain_symmetric(path3_chain, agent_symmetric_group(3, 2))
    assert not verdict
    w = verdict.witness
    # the witness must name a genuinely differing entry
    assert path3_chain.entry(w.x, w.y) == w.p_xy
    assert path3_chain.entry(w.image_x, w.image_y) == w.p_image
    assert w.p_xy != w.p_image
    # the known mismatch pair: swapping agents 1,2 fixes b but moves e to f
    b, e, f = (letter_index(l) for l in "bef")
    assert path3_chain.entry(b, e) == Fraction(1, 6)
    assert path3_chain.entry(b, f) == 0


def test_identity_generators_always_symmetric(path3_chain):
    from microlump import GeneratorSet
    ident = GeneratorSet("id", (SpacePermutation.identity(3, 2),))
    assert is_chain_symmetric(path3_chain, ident)


def test_symmetry_extends_to_composed_words(voter3_chain):
    """Generator invariance carries over to arbitrary words of generators."""
    gens = parse_presets("full", 3, 2)
    assert is_chain_symmetric(voter3_chain, gens)
    rng = random.Random(3)
    space = voter3_chain.space
    for _ in range(20):
        word = SpacePermutation.identity(3, 2)
        for _ in range(rng.randrange(1, 6)):
            word = word.compose(rng.choice(gens.perms))
        image = word.index_map(space)
        for x in range(space.size):
            for y, p in voter3_chain.rows[x]:
                assert voter3_chain.entry(int(image[x]), int(image[y])) == p


def test_attr_merge_reduces_three_attrs_to_binary(imitation3x3):
    """Under a rule symmetric in two of three attributes, grouping states
    by the pattern 'distinguished or not' is lumpable and the reduced chain
    is exactly the binary imitation chain."""
    chain = build_micro_chain(imitation3x3)
    space = chain.space
    binary_space = ConfigSpace(3, 2)
    blocks = [[] for _ in range(binary_space.size)]
    for idx in range(space.size):
        cfg = space.config_of(idx)
        image = tuple(1 if c == 1 else 0 for c in cfg)  # code 1 = 'b'
        blocks[binary_space.index_of(image)].append(idx)
    part = Partition(tuple(tuple(b) for b in blocks),
                     tuple(str(i) for i in range(8)))
    macro = lump(chain, part)
    binary = build_micro_chain(builtin_voter(imitation3x3.topology))
    assert macro.rows == binary.rows


def test_presets():
    gens = parse_presets("Sdelta", 2, 3)
    assert len(gens.perms) == 2
    gens = parse_presets("Sdelta-1:1", 2, 3)
    assert all(p.attrs[1] == 1 for p in gens.perms)
    with pytest.raises(DocumentParseError):
        parse_presets("bogus", 3, 2)
    with pytest.raises(ValidationError):
        parse_presets("flip", 3, 3)


def test_generator_file_parsing():
    text = """
    # agent cycles are 1-based, attribute cycles 0-based
    agents: (1 2)
    attrs: (0 1)
    agents: (1 2 3); attrs: (0 1)
    """
    gens = parse_generator_file(text, 3, 2)
    assert len(gens.perms) == 3
    assert gens.perms[0].agents == (1, 0, 2)
    assert gens.perms[1].attrs == (1, 0)
    assert gens.perms[2].agents == (1, 2, 0)
    assert gens.perms[2].attrs == (1, 0)
    with pytest.raises(DocumentParseError):
        parse_generator_file("agents: (1 9)\n", 3, 2)
    with pytest.raises(DocumentParseError):
        parse_generator_file("", 3, 2)


def test_permutation_validation():
    with pytest.raises(ValidationError):
        SpacePermutation((0, 0), (0, 1))
    with pytest.raises(ValidationError):
        SpacePermutation((0, 1), (1, 1))
