import pytest
from hypothesis import assume, given, strategies as st

from sturmkit.cf import ContinuedFraction, word_length
from sturmkit.errors import ConfigError, InternalConsistencyError, LevelTooCoarseError, MembershipError
from sturmkit.partitions import (S_CUR, S_PREV, Partition, coarsest_level, embed_in_sn, frame,
                                 is_member, locate, partition_c_prefix, standard_partition,
                                 two_block_decomposition)
from sturmkit.words import EMPTY, Word, build_sn, c_prefix, factors_of, subwords

FIB = ContinuedFraction.preset("fibonacci")
PRESETS = ["fibonacci", "silver", "one-two"]


def test_partition_of_c_prefix_example():
    p = partition_c_prefix(FIB, 2, 8)
    assert p.a == EMPTY and p.b == EMPTY
    assert p.blocks == (S_CUR, S_PREV, S_CUR, S_CUR, S_PREV)
    assert p.expand(FIB) == "10110101"
    assert p.to_json(FIB)["blocks"][1] == {"tag": S_PREV, "start": 2, "end": 3}


def test_standard_partition_example():
    p = standard_partition(Word("0110"), FIB, 1)
    assert p.blocks == (S_PREV, S_CUR, S_CUR, S_PREV)
    assert p.expand(FIB) == "0110"
    assert coarsest_level(Word("0110"), FIB) == 3
    with pytest.raises(LevelTooCoarseError):
        standard_partition(Word("0110"), FIB, 4)


def test_two_block_example():
    tb = two_block_decomposition(Word("0110"), FIB)
    assert (tb.t, str(tb.x), str(tb.y)) == (3, "01", "10")


def test_two_block_first_level_cases():
    cf = ContinuedFraction((3, 1, 1, 1, 1, 1, 1, 1, 1, 1))
    assert two_block_decomposition(Word("001"), cf) == (1, Word("001"), EMPTY)
    assert two_block_decomposition(Word("00"), cf) == (1, EMPTY, Word("00"))


def test_two_block_falls_back_when_first_coefficient_is_one():
    cf = ContinuedFraction.preset("one-two")
    tb = two_block_decomposition(Word("10"), cf)
    assert tb.x + tb.y == "10"
    assert build_sn(cf, tb.t + 1).startswith(tb.y)
    assert build_sn(cf, tb.t).endswith(tb.x) or build_sn(cf, tb.t - 1).endswith(tb.x)


def test_membership():
    assert locate(Word("0110"), FIB).j == 2
    assert not is_member(Word("00"), FIB)
    with pytest.raises(MembershipError):
        standard_partition(Word("00"), FIB, 1)
    with pytest.raises(MembershipError):
        two_block_decomposition(Word("111"), FIB)


def test_embed_and_frame():
    n, off = embed_in_sn(build_sn(FIB, 2), FIB)
    assert build_sn(FIB, n + 2)[off:off + 2] == "10"
    assert frame(Word("0"), FIB, 0) == (Word("1"), Word("1"))
    with pytest.raises(ConfigError):
        frame(Word("11"), FIB, 2)


def test_validate_rejects_broken_partition():
    bad = Partition(1, Word("11"), (S_CUR,), EMPTY)
    with pytest.raises(InternalConsistencyError):
        bad.validate(FIB)
    ok = standard_partition(Word("0110"), FIB, 1)
    with pytest.raises(InternalConsistencyError):
        ok.validate(FIB, Word("0111"))


@st.composite
def factors(draw, max_len=120):
    name = draw(st.sampled_from(PRESETS))
    cf = ContinuedFraction.preset(name)
    ell = draw(st.integers(1, max_len))
    start = draw(st.integers(0, 3000))
    return cf, c_prefix(cf, start + ell)[start:]


@given(factors())
def test_standard_partitions_reassemble_at_every_valid_level(arg):
    cf, w = arg
    top = coarsest_level(w, cf)
    for n in range(0, top + 1):
        p = standard_partition(w, cf, n)
        assert p.expand(cf) == w
        p.validate(cf, w)
        # blocks sit where the positions say
        cur, prev = p.block_words(cf)
        for tag, (s, e) in zip(p.blocks, p.positions(cf)):
            assert w[s:e] == (cur if tag == S_CUR else prev)
    assert w in build_sn(cf, top + 1)


@given(factors())
def test_locate_is_the_first_occurrence(arg):
    cf, w = arg
    j = locate(w, cf).j
    long = c_prefix(cf, 20 * len(w) + 5000)
    assert long.find(w) == j - 1


@given(factors(max_len=200))
def test_two_block_matches_split_search(arg):
    cf, w = arg
    tb = two_block_decomposition(w, cf)
    assert tb.x + tb.y == w
    st_, sp, sn = (build_sn(cf, k) for k in (tb.t, tb.t - 1, tb.t + 1))
    assert sn.startswith(tb.y)
    assert st_.endswith(tb.x) or sp.endswith(tb.x)
    if w in build_sn(cf, 1):
        return
    # no split with a shorter x exists at the same level
    for i in range(len(tb.x)):
        x, y = w[:i], w[i:]
        assert not (sn.startswith(y) and (st_.endswith(x) or sp.endswith(x)))


@pytest.mark.parametrize("name", PRESETS)
def test_frame_margins_for_all_factors(name):
    cf = ContinuedFraction.preset(name)
    for n in range(0, 6):
        s = build_sn(cf, n)
        for ell in range(1, len(s) + 1):
            for w in factors_of(s, ell):
                x, y = frame(w, cf, n)
                assert x + w + y == build_sn(cf, n + 3)
                assert min(len(x), len(y)) >= word_length(cf, n + 1)


def test_exhaustive_short_words_have_partitions():
    for name in PRESETS:
        cf = ContinuedFraction.preset(name)
        for ell in range(1, 13):
            for w in subwords(cf, ell):
                for n in range(0, coarsest_level(w, cf) + 1):
                    assert standard_partition(w, cf, n).expand(cf) == w
