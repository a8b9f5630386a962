"""Chain data model, the token codec and the derived ownership/balance queries.

A chain is an immutable, append-only tuple of single-transaction blocks.
Each ``Chain`` value carries an index (balances, owner lists, mint times)
built incrementally on ``append`` so queries do not rescan the chain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

__all__ = [
    "MalformedToken",
    "MalformedChain",
    "Token",
    "StandardTx",
    "MintRecord",
    "TransferRecord",
    "Block",
    "Chain",
    "encode_token",
    "decode_token",
    "balance",
    "owner_list",
    "existing_assets",
    "current_owner",
    "ownership_records",
    "dump_block",
    "parse_block",
    "save_chain",
    "load_chain",
]


class MalformedToken(ValueError):
    """Bytes that are not a canonical token encoding."""


class MalformedChain(ValueError):
    """A persisted chain that cannot be reconstructed."""


def _check_id(kind: str, value: str) -> None:
    if not isinstance(value, str) or not value:
        raise ValueError(f"{kind} must be a non-empty string, got {value!r}")


def _check_tick(t: int) -> None:
    if not isinstance(t, int) or isinstance(t, bool) or t < 0:
        raise ValueError(f"tick must be a non-negative integer, got {t!r}")


# -- token codec --------------------------------------------------------------

def _put_varint(n: int, out: bytearray) -> None:
    while True:
        byte = n & 0x7F
        n >>= 7
        if n:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def _get_varint(buf: bytes, pos: int) -> tuple[int, int]:
    value = 0
    shift = 0
    start = pos
    while True:
        if pos >= len(buf):
            raise MalformedToken("truncated varint")
        byte = buf[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        shift += 7
        if not byte & 0x80:
            break
    # a trailing zero group means a non-minimal encoding
    if pos - start > 1 and buf[pos - 1] == 0:
        raise MalformedToken("non-canonical varint")
    return value, pos


@dataclass(frozen=True)
class Token:
    """Bit image of an ownership triple. Compare and hash by ``bits``."""

    bits: bytes

    def decode(self) -> tuple[str, str, int]:
        return decode_token(self)

    @property
    def agent(self) -> str:
        return decode_token(self)[0]

    @property
    def asset(self) -> str:
        return decode_token(self)[1]

    @property
    def time(self) -> int:
        return decode_token(self)[2]

    def hex(self) -> str:
        return self.bits.hex()

    @classmethod
    def fromhex(cls, text: str) -> "Token":
        try:
            tok = cls(bytes.fromhex(text))
        except ValueError as exc:
            raise MalformedToken(f"bad hex: {text!r}") from exc
        decode_token(tok)
        return tok

    def __len__(self) -> int:
        return len(self.bits) * 8


def encode_token(agent: str, asset: str, t: int) -> Token:
    """Encode ``(agent, asset, t)`` as varint-length-prefixed UTF-8 fields."""
    _check_id("agent", agent)
    _check_id("asset", asset)
    _check_tick(t)
    out = bytearray()
    for text in (agent, asset):
        raw = text.encode("utf-8")
        _put_varint(len(raw), out)
        out += raw
    _put_varint(t, out)
    return Token(bytes(out))


_DECODE_CACHE: dict[bytes, tuple[str, str, int]] = {}


def decode_token(tok: Token | bytes) -> tuple[str, str, int]:
    bits = tok.bits if isinstance(tok, Token) else bytes(tok)
    hit = _DECODE_CACHE.get(bits)
    if hit is not None:
        return hit
    if not bits:
        raise MalformedToken("empty token")
    pos = 0
    fields: list[str] = []
    for name in ("agent", "asset"):
        n, pos = _get_varint(bits, pos)
        if n == 0:
            raise MalformedToken(f"empty {name} field")
        if pos + n > len(bits):
            raise MalformedToken(f"{name} field overruns token")
        try:
            fields.append(bits[pos:pos + n].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise MalformedToken(f"{name} field is not UTF-8") from exc
        pos += n
    t, pos = _get_varint(bits, pos)
    if pos != len(bits):
        raise MalformedToken("trailing bytes after tick")
    triple = (fields[0], fields[1], t)
    if len(_DECODE_CACHE) < 1 << 16:
        _DECODE_CACHE[bits] = triple
    return triple


# -- block payloads -----------------------------------------------------------

@dataclass(frozen=True)
class StandardTx:
    """Money moving from ``buyer`` to ``seller``.

    ``buyer=None`` is a deposit or block reward (a sale with no on-chain
    counterparty); ``seller=None`` is a withdrawal.
    """

    buyer: Optional[str]
    seller: Optional[str]
    cost: int
    time: int

    def __post_init__(self):
        if self.buyer is None and self.seller is None:
            raise ValueError("a transaction needs at least one party")
        for party in (self.buyer, self.seller):
            if party is not None:
                _check_id("agent", party)
        if not isinstance(self.cost, int) or isinstance(self.cost, bool) or self.cost < 0:
            raise ValueError(f"cost must be a non-negative integer, got {self.cost!r}")
        _check_tick(self.time)


@dataclass(frozen=True)
class MintRecord:
    token: Token

    @property
    def time(self) -> int:
        return self.token.time


@dataclass(frozen=True)
class TransferRecord:
    """Ownership token plus its payment legs (one for TxO, two with royalty)."""

    token: Token
    txs: tuple[StandardTx, ...]

    def __post_init__(self):
        object.__setattr__(self, "txs", tuple(self.txs))

    @property
    def time(self) -> int:
        return self.token.time


Payload = Union[StandardTx, MintRecord, TransferRecord]


@dataclass(frozen=True)
class Block:
    height: int
    payload: Payload
    # header index: ownership queries only visit blocks with this flag set
    has_token: Optional[bool] = None

    def __post_init__(self):
        if self.has_token is None:
            object.__setattr__(self, "has_token", not isinstance(self.payload, StandardTx))

    @property
    def time(self) -> int:
        return self.payload.time

    @property
    def token(self) -> Optional[Token]:
        return getattr(self.payload, "token", None)

    def transactions(self) -> tuple[StandardTx, ...]:
        p = self.payload
        if isinstance(p, StandardTx):
            return (p,)
        if isinstance(p, TransferRecord):
            return p.txs
        return ()


# -- chain --------------------------------------------------------------------

class Chain:
    """Immutable block sequence with an incrementally maintained index.

    ``append`` returns a new chain; the receiver is never modified.
    """

    __slots__ = ("_blocks", "_balances", "_owners", "_mints")

    def __init__(self, blocks: Iterable[Block] = ()):
        self._blocks: tuple[Block, ...] = ()
        self._balances: dict[str, int] = {}
        self._owners: dict[str, tuple[str, ...]] = {}
        self._mints: dict[str, tuple[int, ...]] = {}
        blocks = tuple(blocks)
        for i, block in enumerate(blocks):
            if block.height != i:
                raise MalformedChain(f"block at position {i} has height {block.height}")
            self._index(block)
        self._blocks = blocks

    def _index(self, block: Block) -> None:
        for tx in block.transactions():
            if tx.seller is not None:
                self._balances[tx.seller] = self._balances.get(tx.seller, 0) + tx.cost
            if tx.buyer is not None:
                self._balances[tx.buyer] = self._balances.get(tx.buyer, 0) - tx.cost
        if isinstance(block.payload, MintRecord):
            asset, t = block.payload.token.asset, block.payload.token.time
            self._mints[asset] = self._mints.get(asset, ()) + (t,)
        if block.has_token and block.token is not None:
            agent, asset, _ = block.token.decode()
            self._owners[asset] = self._owners.get(asset, ()) + (agent,)

    def append(self, payload: Payload) -> "Chain":
        block = Block(len(self._blocks), payload)
        new = Chain.__new__(Chain)
        new._blocks = self._blocks + (block,)
        new._balances = dict(self._balances)
        new._owners = dict(self._owners)
        new._mints = dict(self._mints)
        new._index(block)
        return new

    def prefix(self, height: int) -> "Chain":
        """The chain as it stood with ``height`` blocks."""
        if height >= len(self._blocks):
            return self
        return Chain(self._blocks[:height])

    @property
    def blocks(self) -> tuple[Block, ...]:
        return self._blocks

    @property
    def height(self) -> int:
        return len(self._blocks)

    @property
    def last_time(self) -> int:
        return self._blocks[-1].time if self._blocks else 0

    def token_blocks(self) -> Iterator[Block]:
        return (b for b in self._blocks if b.has_token)

    def __len__(self) -> int:
        return len(self._blocks)

    def __iter__(self) -> Iterator[Block]:
        return iter(self._blocks)

    def __getitem__(self, i):
        return self._blocks[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, Chain) and self._blocks == other._blocks

    def __hash__(self) -> int:
        return hash(self._blocks)

    def __repr__(self) -> str:
        return f"Chain(height={len(self._blocks)})"


# -- queries ------------------------------------------------------------------

def balance(chain: Chain, agent: str) -> int:
    """Sales minus purchases of ``agent`` over every transaction on ``chain``."""
    return chain._balances.get(agent, 0)


def owner_list(chain: Chain, asset: str) -> list[str]:
    """Agents named by the tokens for ``asset``, oldest first."""
    return list(chain._owners.get(asset, ()))


def existing_assets(chain: Chain, t: Optional[int] = None) -> set[str]:
    """Assets minted at some time ``u <= t`` (all minted assets when ``t`` is None)."""
    if t is None:
        return set(chain._mints)
    return {a for a, times in chain._mints.items() if min(times) <= t}


def current_owner(chain: Chain, asset: str) -> Optional[str]:
    owners = chain._owners.get(asset)
    return owners[-1] if owners else None


def originator(chain: Chain, asset: str) -> Optional[str]:
    owners = chain._owners.get(asset)
    return owners[0] if owners else None


def ownership_records(chain: Chain) -> set[tuple[str, str, int]]:
    """Every ``(agent, asset, time)`` triple carried by an indexed token."""
    return {b.token.decode() for b in chain.token_blocks() if b.token is not None}


# -- persistence --------------------------------------------------------------

def _tx_record(tx: StandardTx) -> dict:
    return {"buyer": tx.buyer, "seller": tx.seller, "cost": tx.cost, "time": tx.time}


def dump_block(block: Block) -> dict:
    p = block.payload
    rec: dict = {"height": block.height, "has_token": block.has_token}
    if isinstance(p, StandardTx):
        rec["kind"] = "tx"
        rec.update(_tx_record(p))
    elif isinstance(p, MintRecord):
        rec["kind"] = "mint"
        rec["token"] = p.token.hex()
    else:
        rec["kind"] = "transfer"
        rec["token"] = p.token.hex()
        rec["txs"] = [_tx_record(tx) for tx in p.txs]
    return rec


def _parse_tx(rec: dict) -> StandardTx:
    return StandardTx(rec["buyer"], rec["seller"], rec["cost"], rec["time"])


def parse_block(rec: dict) -> Block:
    try:
        kind = rec["kind"]
        if kind == "tx":
            payload: Payload = _parse_tx(rec)
        elif kind == "mint":
            payload = MintRecord(Token.fromhex(rec["token"]))
        elif kind == "transfer":
            txs = tuple(_parse_tx(t) for t in rec["txs"])
            if len(txs) not in (1, 2):
                raise MalformedChain(f"transfer block carries {len(txs)} payments")
            payload = TransferRecord(Token.fromhex(rec["token"]), txs)
        else:
            raise MalformedChain(f"unknown block kind {kind!r}")
        return Block(rec["height"], payload, rec.get("has_token"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedChain):
            raise
        raise MalformedChain(f"bad block record {rec!r}: {exc}") from exc


def dumps_record(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def save_chain(chain: Chain, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for block in chain:
            fh.write(dumps_record(dump_block(block)) + "\n")


def load_chain(path: Union[str, Path]) -> Chain:
    blocks = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedChain(f"line {lineno}: {exc}") from exc
            # trace files interleave other records with the blocks
            if isinstance(rec, dict) and rec.get("record", "block") != "block":
                continue
            blocks.append(parse_block(rec))
    return Chain(blocks)
