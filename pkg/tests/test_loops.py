from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebpd.loops import (CnlcpEntry, cnlcp, cnlcp_table, detect_and_roll, format_tables, nlcp_array,
                        nlcp_pair, rolled_string, segment, suffix_array, unroll_tokens)
from ebpd.model import EnrichedOperator, KeyProperty, Loop, Temporal, atom

from oracles import brute_cnlcp, naive_suffix_array

GOLDEN = "abacacacdedfdfgh"

small_strings = st.text(alphabet="abcd", max_size=10)


def test_golden_suffix_array():
    assert suffix_array(GOLDEN) == [0, 2, 4, 6, 1, 3, 5, 7, 8, 10, 12, 9, 11, 13, 14, 15]


def test_golden_nlcp():
    assert nlcp_array(GOLDEN) == [0, 1, 2, 2, 0, 0, 2, 1, 0, 1, 2, 0, 0, 1, 0, 0]


def test_golden_cnlcp_and_rolling():
    assert cnlcp_table(GOLDEN) == {"ac": [2, 4, 6], "df": [10, 12]}
    assert rolled_string(GOLDEN) == "ab(ac)*de(df)*gh"


@pytest.mark.parametrize("s, sa", [("", []), ("aaaa", [3, 2, 1, 0]), ("a", [0])])
def test_suffix_array_small(s, sa):
    assert suffix_array(s) == sa


@pytest.mark.parametrize("a, b, n", [
    ("acacacdedfdfgh", "acacdedfdfgh", 2), ("xyz", "xyz", 0), ("ab", "cd", 0), ("aaaa", "aa", 2)])
def test_nlcp_pair(a, b, n):
    assert nlcp_pair(a, b) == n


@pytest.mark.parametrize("s, expected", [("", []), ("a", [0]), ("aaaa", [0, 1, 1, 1])])
def test_nlcp_array_small(s, expected):
    assert nlcp_array(s) == expected


def test_cnlcp_small():
    assert cnlcp("abcdef") == []
    # every occurrence of the run is listed, the same convention as the golden table
    assert cnlcp_table("ababab") == {"ab": [0, 2, 4]}


def test_cnlcp_entry_checks_spacing():
    with pytest.raises(ValueError):
        CnlcpEntry(("a", "b"), (0, 3))


@given(small_strings)
def test_suffix_array_is_sorted_permutation(s):
    sa = suffix_array(s)
    assert sorted(sa) == list(range(len(s)))
    suffixes = [s[i:] for i in sa]
    assert suffixes == sorted(suffixes)
    assert sa == naive_suffix_array(s)


@given(small_strings)
def test_nlcp_matches_pairwise_definition(s):
    sa = suffix_array(s)
    nl = nlcp_array(s, sa)
    assert nl == ([0] + [nlcp_pair(s[sa[i - 1]:], s[sa[i]:]) for i in range(1, len(s))] if s else [])
    for i in range(1, len(s)):
        assert nl[i] <= abs(sa[i] - sa[i - 1])


@given(small_strings)
def test_cnlcp_matches_brute_force_sampled(s):
    got = {(e.pattern, e.starts) for e in cnlcp(s)}
    assert got == brute_cnlcp(s)


def test_cnlcp_matches_brute_force_exhaustive():
    """Every string up to length 7 over three letters, plus length 10 over four
    for a fixed sample of 2000 strings."""
    count = 0
    for n in range(0, 8):
        for t in itertools.product("abc", repeat=n):
            s = "".join(t)
            assert {(e.pattern, e.starts) for e in cnlcp(s)} == brute_cnlcp(s), s
            count += 1
    import random
    rng = random.Random(7)
    for _ in range(2000):
        s = "".join(rng.choice("abcd") for _ in range(10))
        assert {(e.pattern, e.starts) for e in cnlcp(s)} == brute_cnlcp(s), s
    assert count == sum(3 ** n for n in range(8))


@given(st.lists(st.sampled_from(["pick", "stack", "put", "unstack"]), max_size=14))
def test_segments_tile_and_repeat(tokens):
    segs = segment(tokens)
    pos = 0
    for seg in segs:
        assert seg.start == pos
        body = tokens[seg.start:seg.start + seg.body]
        for k in range(seg.iterations):
            assert tokens[seg.start + k * seg.body: seg.start + (k + 1) * seg.body] == body
        pos = seg.end
    assert pos == len(tokens)


def _ops(names, arg_base=0):
    return [EnrichedOperator(atom(f"{n} ?x{i + arg_base} ?t")) for i, n in enumerate(names)]


@given(st.lists(st.sampled_from(["pick", "stack", "put"]), max_size=12))
def test_unrolling_recovers_tokens(names):
    ops = _ops(names)
    rolled = detect_and_roll(ops)
    assert unroll_tokens(rolled) == [f"{n}/2" for n in names]


def test_roll_without_repeats_is_identity():
    ops = _ops(["pick", "stack", "put"])
    assert detect_and_roll(ops) == ops


def test_roll_intersects_features_across_iterations():
    # pick ?bK ?t ; stack ?bK ?p  three times; every block is blue, only some on the table
    def kp(t, text):
        return KeyProperty(Temporal(t), atom(text))

    ops = []
    per_iter = [
        {kp("static", "blue ?b1"), kp("init", "ontable ?b1 ?t"), kp("end", "on ?b1 ?p")},
        {kp("static", "blue ?b2"), kp("init", "ontable ?b2 ?t")},
        {kp("static", "blue ?b3"), kp("init", "ontable ?b3 ?t"), kp("init", "clear ?b3")},
    ]
    for k, feats in enumerate(per_iter, start=1):
        ops.append(EnrichedOperator(atom(f"pick ?b{k} ?t"), tuple(sorted(feats))))
        ops.append(EnrichedOperator(atom(f"stack ?b{k} ?p"), (kp("static", "pile ?p"),)))
    bindings = {}
    rolled = detect_and_roll(ops, bindings=bindings)
    assert len(rolled) == 1 and isinstance(rolled[0], Loop)
    loop = rolled[0]
    assert loop.iterations == 3
    assert [op.head.predicate for op in loop.body] == ["pick", "stack"]
    (lv,) = bindings
    assert bindings[lv] == ("?b1", "?b2", "?b3")

    # oracle: rename each iteration's block to the loop variable and intersect
    common = None
    for k, feats in enumerate(per_iter, start=1):
        renamed = {f.substitute({f"?b{k}": lv}) for f in feats}
        common = renamed if common is None else common & renamed
    assert set(loop.body[0].features) == common
    assert loop.body[0].head == atom(f"pick {lv} ?t")
    assert loop.body[1].features == (kp("static", "pile ?p"),)


def test_format_tables_layout():
    text = format_tables(GOLDEN)
    lines = text.splitlines()
    assert lines[0].split() == ["i", "SA[i]", "NLCP[i]", "suffix"]
    assert lines[1].split() == ["0", "0", "0", GOLDEN]
    assert "ac           [2, 4, 6]" in text and "df           [10, 12]" in text


@settings(max_examples=50)
@given(small_strings)
def test_rolled_string_reexpands(s):
    # expanding every (body)* group by the recorded iteration count gives s back
    out = []
    for seg in segment(s):
        out.append(s[seg.start:seg.start + seg.body] * seg.iterations)
    assert "".join(out) == s
