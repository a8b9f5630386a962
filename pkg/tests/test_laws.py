import pytest

from nftsim import laws, netsim
from nftsim.laws import History, check_all
from nftsim.ledger import Chain
from nftsim.transactions import deposit, genesis, mint, ownership_tx

import mutants
from oracles import scan_existing, scan_owner_at


def violated(history):
    return [r.law for r in check_all(history) if not r.holds]


def test_empty_history_satisfies_everything():
    assert violated(History([])) == []
    assert violated(History([Chain()])) == []


def test_mint_then_sale_history():
    c = genesis({"B": 10})
    c = mint(c, "A", "x", 0)
    c = ownership_tx(c, "A", "B", "x", 3, 1)
    h = History.from_chain(c)
    assert len(h) == c.last_time + 1
    assert violated(h) == []


def test_from_chain_snapshots_hold_blocks_up_to_tick():
    c = deposit(Chain(), "u", 1, 0)
    c = mint(c, "A", "x", 3)
    h = History.from_chain(c)
    assert [s.height for s in h.snapshots] == [0, 1, 1, 1, 2]


def test_summary_matches_scan():
    config, schedule = netsim.generate(17)
    trace = netsim.simulate(config, schedule)
    hist = trace.history()
    for t, (snap, s) in enumerate(zip(hist.snapshots, hist.summaries)):
        assert s.existing(t) == scan_existing(snap.blocks, t)
        for asset in s.owners:
            assert s.owner(asset) == scan_owner_at(snap.blocks, asset, 10**9)


def test_report_lines_format():
    report = laws.LawReport(3, [(4, "something broke")])
    assert not report.holds
    assert report.lines() == ["tick=4 law=3 something broke"]


def test_subset_of_laws():
    assert [r.law for r in check_all(History([]), (2, 5))] == [2, 5]


@pytest.mark.parametrize("seed", range(40))
def test_generated_histories_are_lawful(seed):
    config, schedule = netsim.generate(seed)
    trace = netsim.simulate(config, schedule)
    assert violated(trace.history()) == []
    assert violated(History.from_chain(trace.chain)) == []


@pytest.fixture(scope="module")
def base():
    return mutants.base_trace()


def test_base_is_clean(base):
    trace, _, _ = base
    assert violated(trace.history()) == []


@pytest.mark.parametrize("law", range(1, 7))
def test_mutant_flagged_by_its_law(base, law):
    history = mutants.all_mutants(*base)[law]
    report = laws.CHECKERS[law](history)
    assert not report.holds
    assert all(line.startswith("tick=") and f" law={law} " in line for line in report.lines())


def test_swap_mutant_breaks_only_the_prefix_law(base):
    assert violated(mutants.swap_owners(base[0], base[2])) == [6]


def test_flag_mutant_breaks_only_existence_of_owner(base):
    assert violated(mutants.drop_token_flag(base[0], base[1])) == [1]
