import io
from fractions import Fraction

import pytest

from microlump import (AnalysisError, Topology, ValidationError,
                       absorption_analysis, aggregate, build_micro_chain,
                       builtin_voter, classify_states, commutation_check,
                       commutation_profile, frequency_partition, lump,
                       moran_partition, point_mass, propagate, read_sparse)
from microlump.analysis import (absorption_kv, absorption_text,
                                read_distribution, write_distribution)
from conftest import letter_index


def test_classify_voter(voter3_chain):
    cls = classify_states(voter3_chain)
    assert set(cls.absorbing) == {letter_index("a"), letter_index("h")}
    assert len(cls.transient) == 6
    assert all(len(c) == 1 for c in cls.recurrent_classes)


def test_classify_moran(voter3_chain):
    macro = lump(voter3_chain, moran_partition(voter3_chain.space, 0))
    cls = classify_states(macro)
    assert cls.absorbing == (0, 3)


def test_classify_uniform_chain():
    p = Fraction(1, 3)
    rows = tuple(tuple((y, p) for y in range(3)) for _ in range(3))
    chain = read_sparse("states=3 nnz=9\n" + "\n".join(
        f"{x} {y} 1/3" for x in range(3) for y in range(3)))
    cls = classify_states(chain)
    assert cls.absorbing == ()
    assert cls.transient == ()
    assert cls.recurrent_classes == ((0, 1, 2),)


@pytest.mark.parametrize("n", range(2, 7))
def test_fixation_is_black_share(n):
    spec = builtin_voter(Topology.complete(n))
    chain = build_micro_chain(spec)
    report = absorption_analysis(chain)
    all_black = 0
    for x in range(chain.n_states):
        k = chain.space.counts(chain.space.config_of(x))[0]
        assert abs(report.fixation_prob(x, all_black) - k / n) < 1e-9


def test_micro_and_line_fixation_agree(voter3_chain):
    mor = moran_partition(voter3_chain.space, 0)
    macro = lump(voter3_chain, mor)
    micro_rep = absorption_analysis(voter3_chain)
    macro_rep = absorption_analysis(macro)
    for x in range(voter3_chain.n_states):
        k = mor.block_of[x]
        assert abs(micro_rep.fixation_prob(x, 0)
                   - macro_rep.fixation_prob(k, mor.n_blocks - 1)) < 1e-9


def test_absorbing_start_trivial(voter3_chain):
    report = absorption_analysis(voter3_chain)
    a = letter_index("a")
    assert report.fixation_prob(a, a) == 1.0
    assert report.steps_from(a) == 0.0


def test_expected_steps_positive(voter3_chain):
    report = absorption_analysis(voter3_chain)
    assert all(s > 0 for s in report.expected_steps)
    assert report.residual_probs <= 1e-9
    assert report.residual_steps <= 1e-9


def test_no_absorbing_state_reported():
    chain = read_sparse("states=2 nnz=2\n0 1 1/1\n1 0 1/1\n")
    with pytest.raises(AnalysisError, match="state 0"):
        absorption_analysis(chain)


def test_propagate_point_mass_absorbing(voter3_chain):
    mu = point_mass(8, letter_index("a"))
    for t in (0, 1, 5):
        assert propagate(voter3_chain, mu, t) == mu


def test_propagate_one_step_from_d(voter3_chain):
    mu1 = propagate(voter3_chain, point_mass(8, letter_index("d")), 1)
    expect = {letter_index("a"): Fraction(1, 3),
              letter_index("d"): Fraction(1, 3),
              letter_index("f"): Fraction(1, 6),
              letter_index("g"): Fraction(1, 6)}
    assert {i: p for i, p in enumerate(mu1) if p} == expect


def test_propagate_zero_steps_identity(voter3_chain):
    mu = [Fraction(1, 8)] * 8
    assert propagate(voter3_chain, mu, 0) == mu


def test_propagate_conserves_mass(voter3_chain):
    mu = [Fraction(1, 8)] * 8
    for t in range(1, 15):
        mu = propagate(voter3_chain, mu, 1)
        assert sum(mu) == 1


def test_absorbed_mass_monotone(voter3_chain):
    absorbing = (letter_index("a"), letter_index("h"))
    mu = point_mass(8, letter_index("d"))
    last = sum(mu[a] for a in absorbing)
    for _ in range(20):
        mu = propagate(voter3_chain, mu, 1)
        now = sum(mu[a] for a in absorbing)
        assert now >= last
        last = now


def test_commutation_zero_for_lumpable(voter3_chain):
    part = frequency_partition(voter3_chain.space)
    for start in range(8):
        assert commutation_check(voter3_chain, part,
                                 point_mass(8, start), 10) == 0


def test_commutation_nonzero_when_forced(path3_chain):
    part = frequency_partition(path3_chain.space)
    hit = Fraction(0)
    for start in range(8):
        prof = commutation_profile(path3_chain, part, point_mass(8, start),
                                   5, force=True)
        hit = max(hit, max(prof))
    assert hit > 0


def test_commutation_requires_lumpable(path3_chain):
    from microlump import NotLumpableError
    part = frequency_partition(path3_chain.space)
    with pytest.raises(NotLumpableError):
        commutation_check(path3_chain, part, point_mass(8, 1), 3)


def test_aggregate(voter3_chain):
    part = frequency_partition(voter3_chain.space)
    mu = [Fraction(1, 8)] * 8
    nu = aggregate(mu, part)
    assert nu == [Fraction(1, 8), Fraction(3, 8), Fraction(3, 8), Fraction(1, 8)]


def test_distribution_io(voter3_chain):
    mu = propagate(voter3_chain, point_mass(8, letter_index("d")), 2)
    buf = io.StringIO()
    write_distribution(mu, buf)
    again = read_distribution(buf.getvalue(), 8)
    assert again == mu
    with pytest.raises(ValidationError):
        read_distribution("0 1/2\n", 8)  # mass missing


def test_report_formats(voter3_chain):
    report = absorption_analysis(voter3_chain)
    text = absorption_text(report)
    assert "absorbing states: 0 7" in text
    kv = absorption_kv(report)
    assert "values=float" in kv
    assert any(line.startswith("absorb[1][0]=") for line in kv.splitlines())


def test_validate_distribution_errors(voter3_chain):
    with pytest.raises(ValidationError):
        propagate(voter3_chain, [Fraction(1, 2)] * 8, 1)
    with pytest.raises(ValidationError):
        propagate(voter3_chain, point_mass(8, 0), -1)
