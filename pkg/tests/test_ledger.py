import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nftsim import netsim
from nftsim.ledger import (
    Block,
    Chain,
    MalformedChain,
    MalformedToken,
    MintRecord,
    StandardTx,
    Token,
    TransferRecord,
    balance,
    current_owner,
    decode_token,
    encode_token,
    existing_assets,
    load_chain,
    owner_list,
    save_chain,
)
from nftsim.transactions import (
    Mint,
    Transfer,
    TransferRoyalty,
    TxError,
    apply,
    deposit,
    validate_chain,
    mint,
    ownership_tx,
    standard_tx,
)

from oracles import scan_balance, scan_existing, scan_owner_list

ids = st.text(min_size=1, max_size=12)
ticks = st.integers(min_value=0, max_value=2**40)


def test_encode_is_deterministic():
    assert encode_token("a", "x", 3) == encode_token("a", "x", 3)
    assert encode_token("a", "x", 3).bits == encode_token("a", "x", 3).bits


def test_round_trip_examples():
    assert decode_token(encode_token("a", "x", 3)) == ("a", "x", 3)
    assert decode_token(encode_token("a", "x", 0)) == ("a", "x", 0)


def test_36_triples_give_36_bitstrings():
    triples = list(itertools.product(["a", "b", "c"], ["x", "y", "z"], range(4)))
    assert len(triples) == 36
    assert len({encode_token(*t).bits for t in triples}) == 36


def test_injective_up_to_5x5x10():
    # names chosen so naive concatenation would collide ("ab"+"c" vs "a"+"bc")
    agents = ["a", "ab", "b", "1", "a1"]
    assets = ["c", "bc", "1", "11", "b"]
    seen = {}
    for t in itertools.product(agents, assets, range(10)):
        bits = encode_token(*t).bits
        assert bits not in seen, (t, seen.get(bits))
        seen[bits] = t
    assert len(seen) == 250


@given(ids, ids, ticks)
def test_decode_inverts_encode(agent, asset, t):
    assert decode_token(encode_token(agent, asset, t)) == (agent, asset, t)


@given(st.tuples(ids, ids, ticks), st.tuples(ids, ids, ticks))
def test_encode_injective(x, y):
    if x != y:
        assert encode_token(*x) != encode_token(*y)


@pytest.mark.parametrize("bits", [
    b"",
    b"\x00\x00\x00",                 # empty agent field
    b"\x05ab",                       # agent overruns
    b"\x01a\x01b",                   # missing tick
    b"\x01a\x01b\x03\x00",           # trailing bytes
    b"\x01a\x01b\x80\x00",           # non-minimal varint
    b"\x01\xff\x01b\x01",            # agent not UTF-8
])
def test_malformed_tokens(bits):
    with pytest.raises(MalformedToken):
        decode_token(Token(bits))


@given(st.binary(max_size=24))
def test_decode_accepts_only_canonical(bits):
    try:
        triple = decode_token(Token(bits))
    except MalformedToken:
        return
    assert encode_token(*triple).bits == bits


def test_decode_every_token_of_a_50_block_chain():
    rng = random.Random(5)
    config = netsim.random_config(rng)
    requests = iter(netsim.random_schedule(rng, config, 10_000))
    chain = Chain()
    generated = []
    t = 0
    while chain.height < 50:
        _, req = next(requests)
        try:
            chain = apply(chain, req, t)
        except TxError:
            continue
        if isinstance(req, Mint):
            generated.append((req.orig, req.asset, t + 1))
        elif isinstance(req, (Transfer, TransferRoyalty)):
            generated.append((req.new, req.asset, t + 1))
        t += 1
    decoded = [decode_token(b.token) for b in chain if b.token is not None]
    assert generated and decoded == generated


def test_balance_examples():
    assert balance(Chain(), "u") == 0
    c = deposit(Chain(), "u", 50, 0)
    c = standard_tx(c, "u", "v", 20, 1)
    assert balance(c, "u") == scan_balance(c.blocks, "u") == 30
    assert balance(c, "v") == 20
    assert balance(c, "stranger") == 0


def test_owner_list_examples():
    c = mint(Chain(), "A", "alpha", 0)
    assert owner_list(c, "beta") == []
    assert owner_list(c, "alpha") == ["A"]
    c = deposit(c, "B", 10, 1)
    c = ownership_tx(c, "A", "B", "alpha", 5, 2)
    assert owner_list(c, "alpha") == scan_owner_list(c.blocks, "alpha") == ["A", "B"]


def test_existing_assets_examples():
    assert existing_assets(Chain(), 5) == set()
    c = deposit(Chain(), "u", 1, 0)
    c = mint(c, "A", "alpha", 1)        # token time 2
    assert existing_assets(c, 1) == scan_existing(c.blocks, 1) == set()
    assert existing_assets(c, 2) == scan_existing(c.blocks, 2) == {"alpha"}
    c = mint(c, "B", "beta", 2)
    assert existing_assets(c, 10) == {"alpha", "beta"}


def test_current_owner_examples():
    c = Chain()
    assert current_owner(c, "alpha") is None
    c = mint(c, "A", "alpha", 0)
    assert current_owner(c, "alpha") == "A"
    c = deposit(c, "B", 10, 1)
    c = deposit(c, "C", 10, 2)
    c = ownership_tx(c, "A", "B", "alpha", 1, 3)
    c = ownership_tx(c, "B", "C", "alpha", 1, 4)
    assert current_owner(c, "alpha") == "C"
    assert scan_owner_list(c.blocks, "alpha")[-1] == "C"


def test_append_does_not_touch_receiver():
    c0 = deposit(Chain(), "u", 5, 0)
    before = c0.blocks
    c1 = standard_tx(c0, "u", "v", 5, 1)
    assert c0.blocks == before and c0.height == 1
    assert balance(c0, "u") == 5 and balance(c1, "u") == 0


def test_heights_must_be_consecutive():
    tx = StandardTx(None, "u", 1, 0)
    with pytest.raises(MalformedChain):
        Chain([Block(0, tx), Block(2, tx)])


def test_header_flag_defaults_follow_payload():
    tok = encode_token("a", "x", 1)
    assert Block(0, MintRecord(tok)).has_token
    assert Block(0, TransferRecord(tok, (StandardTx("a", "b", 0, 1),))).has_token
    assert not Block(0, StandardTx(None, "a", 1, 0)).has_token


def test_save_load_round_trip(tmp_path):
    config, schedule = netsim.generate(11)
    chain = netsim.simulate(config, schedule).chain
    path = tmp_path / "chain.jsonl"
    save_chain(chain, path)
    loaded = load_chain(path)
    assert loaded == chain
    again = tmp_path / "again.jsonl"
    save_chain(loaded, again)
    assert path.read_bytes() == again.read_bytes()


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"height": 0, "kind": "mint", "token": "zz"}\n')
    with pytest.raises(MalformedChain):
        load_chain(path)
    path.write_text('{"height": 0, "kind": "warp"}\n')
    with pytest.raises(MalformedChain):
        load_chain(path)


def test_load_accepts_either_royalty_leg_order(tmp_path):
    c = mint(Chain(), "A", "x", 0)
    c = deposit(c, "B", 100, 1)
    c = deposit(c, "C", 100, 2)
    c = ownership_tx(c, "A", "B", "x", 50, 3)
    tok = encode_token("C", "x", 5)
    # originator leg first, then the seller's
    legs = (StandardTx("C", "A", 10, 5), StandardTx("C", "B", 90, 5))
    swapped = Chain(list(c.blocks) + [Block(c.height, TransferRecord(tok, legs))])
    path = tmp_path / "c.jsonl"
    save_chain(swapped, path)
    loaded = load_chain(path)
    assert loaded == swapped
    assert validate_chain(loaded) == []
