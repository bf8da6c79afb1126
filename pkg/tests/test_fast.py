import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import engine_batch, frames
from oracles import fig1_mask, subtree_sc
from polarflip import (Kind, build_code, classify_tree, decode_rate1, decode_rep, decode_spc,
                       fast_flip_decode, fast_sc_decode, flip_candidates_rate1,
                       flip_candidates_rep, flip_candidates_spc, full_tree, sc_decode,
                       steps_per_iteration)
from polarflip.fast import FastDecoder
from polarflip.tree import node_kind

masks = st.integers(1, 7).flatmap(
    lambda n: st.lists(st.booleans(), min_size=1 << n, max_size=1 << n))


def test_fig1_classification_with_size_cap():
    t = classify_tree(fig1_mask(), max_node_size=4)
    units = [(nd.span, nd.kind) for nd in t.units()]
    assert units == [((0, 4), Kind.RATE0), ((4, 8), Kind.REP), ((8, 12), Kind.SPC),
                     ((12, 16), Kind.RATE1)]
    assert t.count(Kind.BRANCH) == 3
    assert t.steps_per_iteration() == 10


def test_fig1_maximal_classification():
    t = classify_tree(fig1_mask())
    assert [(nd.span, nd.kind) for nd in t.units()] == [((0, 8), Kind.REP), ((8, 16), Kind.SPC)]
    assert t.steps_per_iteration() == 4


def test_trivial_trees():
    assert [nd.kind for nd in classify_tree(np.zeros(64, bool)).units()] == [Kind.RATE1]
    assert steps_per_iteration(classify_tree(np.zeros(64, bool))) == 1
    assert classify_tree(np.array([True, False])).root.kind == Kind.REP
    assert steps_per_iteration(full_tree(build_code(10, 512))) == 2046
    for n in range(1, 8):
        assert full_tree(np.zeros(1 << n, bool)).steps_per_iteration() == 2 * (1 << n) - 2


def test_tree_dump_format():
    d = classify_tree(fig1_mask(), 4).dump()
    assert d[0] == {"stage": 4, "span": [0, 16], "kind": "BRANCH"}
    assert len(d) == 7


@given(masks)
def test_classification_invariants(mask):
    frozen = np.array(mask, dtype=bool)
    t = classify_tree(frozen)
    spans = [nd.span for nd in t.units()]
    assert spans[0][0] == 0 and spans[-1][1] == frozen.size
    assert all(a[1] == b[0] for a, b in zip(spans, spans[1:]))
    for nd in t.units():
        seg = frozen[nd.lo:nd.lo + nd.size]
        assert node_kind(seg) == nd.kind or nd.size == 1
    for nd in t.nodes():
        if nd.children:
            # maximality: a branch never matches a special pattern itself
            assert node_kind(frozen[nd.lo:nd.lo + nd.size]) == Kind.BRANCH


def test_node_decoder_examples():
    assert decode_rate1([1, -2, 3, -4]).tolist() == [0, 1, 0, 1]
    assert not decode_rate1([1, 2, 3]).any()
    assert decode_rep([1, 1, -3, 0.5]).tolist() == [1, 1, 1, 1]
    assert decode_rep([1, -1]).tolist() == [0, 0]
    assert decode_spc([1, -2, 3]).tolist() == [1, 1, 0]
    assert decode_spc([1, -2, -3, 4]).tolist() == [0, 1, 1, 0]


def spc_mask(nv):
    m = np.zeros(nv, bool)
    m[0] = True
    return m


def rep_mask(nv):
    m = np.ones(nv, bool)
    m[-1] = False
    return m


@pytest.mark.parametrize("nv", [2, 4, 8, 16])
def test_node_decoders_match_subtree_sc(nv):
    rng = np.random.default_rng(nv)
    for _ in range(1000):
        a = rng.normal(0.5, 2.0, nv)
        assert np.array_equal(decode_rate1(a), subtree_sc(a, np.zeros(nv, bool)))
        assert np.array_equal(decode_rep(a), subtree_sc(a, rep_mask(nv)))
        b = decode_spc(a)
        assert np.array_equal(b, subtree_sc(a, spc_mask(nv)))
        assert b.sum() % 2 == 0


def test_candidate_examples():
    c = flip_candidates_rate1([3, -1, 4], 2)
    assert c.eta == (1,) and c.metric == 1
    assert flip_candidates_rate1([3, -1, 4], 0.5) is None
    assert flip_candidates_rate1([2, -1, 1, 5], 9).eta == (1,)
    c = flip_candidates_rep([1, 1, -1.5, 0.2], 2)
    assert c.eta == (0, 1, 2, 3) and c.metric == pytest.approx(0.7)
    assert flip_candidates_rep([5, 5, 5, 5], 2) is None
    assert flip_candidates_rep([1, -1], 0).metric == 0


def test_spc_candidates_hand_example():
    # signs [0,1,0,0], odd parity; |alpha| order 0.5, 1, 2, 4 at indices 0, 1, 2, 3
    c1, c2 = flip_candidates_spc([0.5, -1, 2, 4], 11)
    assert c1.eta == (1,) and c1.metric == 1
    assert c2.eta == (2,) and c2.metric == 2
    assert flip_candidates_spc([0.5, -1, 2, 4], 1.5) == [c1]


def test_spc_candidates_even_parity():
    c1, c2 = flip_candidates_spc([0.5, 1, 2, 4], 11)
    assert c1.eta == (0, 1) and c1.metric == 1.5
    assert c2.eta == (0, 2) and c2.metric == 2.5
    assert flip_candidates_spc([3, 4, 5, 6], 6.5) == []
    assert flip_candidates_spc([1, -1], 10) == []


def apply_spc(alpha, cand):
    """Invert the candidate's sign decisions, then fix parity as decode_spc would."""
    alpha = np.asarray(alpha, dtype=float)
    b = (alpha < 0).astype(np.uint8)
    b[list(cand.eta)] ^= 1
    if b.sum() % 2:
        b[np.argmin(np.abs(alpha))] ^= 1
    return b


def test_spc_candidates_parity_exhaustive_n4():
    mags = np.array([0.3, 1.1, 2.0, 0.7])
    for signs in itertools.product([1, -1], repeat=4):
        a = mags * np.array(signs)
        base = decode_spc(a)
        for cand in flip_candidates_spc(a, np.inf):
            raw = (a < 0).astype(np.uint8)
            raw[list(cand.eta)] ^= 1
            # the inverted decisions already satisfy parity, so no fix is applied
            assert raw.sum() % 2 == 0
            assert np.array_equal(apply_spc(a, cand), raw)
            assert not np.array_equal(raw, base)


@settings(max_examples=50)
@given(st.lists(st.floats(-20, 20, allow_nan=False), min_size=4, max_size=16),
       st.floats(0, 40), st.floats(0, 40))
def test_candidate_containment(alpha, o1, o2):
    lo, hi = min(o1, o2), max(o1, o2)
    for fn in (flip_candidates_rate1, flip_candidates_rep):
        if fn(alpha, lo) is not None:
            assert fn(alpha, hi) is not None
    small = {c.eta for c in flip_candidates_spc(alpha, lo)}
    big = {c.eta for c in flip_candidates_spc(alpha, hi)}
    assert small <= big


CODES = [(6, 32), (7, 96), (8, 128), (10, 512)]


@pytest.mark.parametrize("n,K", CODES)
def test_fast_sc_matches_sc(n, K):
    code = build_code(n, K, crc_len=0)
    tree = classify_tree(code)
    u, llr = frames(code, 300, 0.9, n)
    for f in range(300):
        hard, steps = fast_sc_decode(tree, llr[f])
        assert np.array_equal(hard, sc_decode(code, llr[f]).hard_out)
        assert steps == tree.steps_per_iteration()


def test_fast_flip_degenerate_modes():
    code = build_code(8, 144, crc_len=16)
    tree = classify_tree(code)
    _, llr = frames(code, 200, 0.95, 11)
    for f in range(200):
        hard, _ = fast_sc_decode(tree, llr[f])
        for r in (fast_flip_decode(tree, llr[f], 0, "TSCF", 11.0),
                  fast_flip_decode(tree, llr[f], 0, "SCF"),
                  fast_flip_decode(tree, llr[f], 10, "TSCF", 0.0)):
            assert np.array_equal(r.hard_out, hard) and r.iterations == 1


def test_fast_flip_errors():
    code = build_code(6, 32, crc_len=0)
    with pytest.raises(ValueError):
        fast_flip_decode(classify_tree(code), np.ones(64), 4)
    code = build_code(6, 40, crc_len=16)
    with pytest.raises(ValueError):
        fast_flip_decode(classify_tree(code), np.ones(64), 4, "XX")


@pytest.mark.parametrize("mode,omega,name", [("SCF", np.inf, "FAST_SCF"),
                                              ("TSCF", 11.0, "FAST_TSCF"),
                                              ("TSCF", 5.0, "FAST_TSCF")])
def test_python_route_matches_compiled_engine(mode, omega, name):
    code = build_code(8, 144, crc_len=16)
    tree = classify_tree(code)
    u, llr = frames(code, 400, 0.9, 12)
    it, ok, good = engine_batch(code, name, llr, u, 10, None if mode == "SCF" else omega)
    for f in range(400):
        r = fast_flip_decode(tree, llr[f], 10, mode, omega)
        assert r.iterations == it[f] and r.success == ok[f]
        assert r.steps == r.iterations * tree.steps_per_iteration()
        assert np.array_equal(r.hard_out[code.info_positions],
                              u[f][code.info_positions]) == good[f]
    assert (it > 1).sum() > 10


def test_applied_flips_respect_node_constraints():
    code = build_code(8, 144, crc_len=16)
    tree = classify_tree(code)
    dec = FastDecoder(tree)
    _, llr = frames(code, 30, 1.0, 13)
    from polarflip import polar_transform

    for f in range(30):
        dec.decode(llr[f])
        for cand in dec.candidates(np.inf):
            u_hat = dec.decode(llr[f], cand)
            # a flipped node still emits a codeword of its sub-code
            assert not u_hat[code.frozen_mask].any()
            nd = dec.units[cand.unit]
            beta = polar_transform(u_hat[nd.lo:nd.lo + nd.size])
            if nd.kind == Kind.SPC:
                assert beta.sum() % 2 == 0
            if nd.kind == Kind.REP:
                assert beta.min() == beta.max()
