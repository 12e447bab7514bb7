"""Simulated blockchain running the repository-registry contract.

The contract state machine tracks, per repository id (the blob's content
address rendered as text): the owner, the access list, and one escrowed
key share. Transactions are validated when they confirm, not when they are
submitted, so a submission always succeeds and invalid operations surface
as rejected receipts after the confirmation delay, the way a real chain
behaves. View calls are free, instant, and never see half-applied state.

Confirmations are applied lazily: whenever the chain is consulted it first
settles every pending transaction whose due time has passed, in due-time
order (submission order breaks ties). On a virtual clock this makes the
whole lifecycle deterministic and instantaneous to test.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .clock import Clock, RealClock, VirtualClock

# Modeled execution cost of a confirmed registration, in gas units.
REGISTER_GAS = 206_886

# Modeled cost of a confirmed collaborator grant. Arbitrary positive
# constant: no measured figure exists for this operation.
DEFAULT_ADD_COLLABORATOR_GAS = 50_000

PENDING = "pending"
CONFIRMED = "confirmed"
REJECTED = "rejected"

REASON_ALREADY_REGISTERED = "already-registered"
REASON_NOT_OWNER = "not-owner"


class AccessDeniedError(PermissionError):
    """Caller lacks access to a confirmed repository registration."""


class ClockModeError(RuntimeError):
    """Operation requires a virtual clock but the chain runs on a real one."""


@dataclass(frozen=True)
class Address:
    """20-byte account identifier, rendered `0x` + 40 lowercase hex chars."""

    identity: bytes

    def __post_init__(self) -> None:
        if len(self.identity) != 20:
            raise ValueError(f"address must be 20 bytes, got {len(self.identity)}")

    @property
    def text(self) -> str:
        return "0x" + self.identity.hex()

    def __str__(self) -> str:
        return self.text

    @classmethod
    def from_text(cls, text: str) -> "Address":
        if not text.startswith("0x"):
            raise ValueError(f"address must start with 0x: {text!r}")
        hexpart = text[2:]
        if len(hexpart) != 40 or hexpart != hexpart.lower():
            raise ValueError(f"address must be 40 lowercase hex chars: {text!r}")
        return cls(bytes.fromhex(hexpart))

    @classmethod
    def from_label(cls, label: str) -> "Address":
        """Deterministic address for a human-readable name (test/bench aid)."""
        return cls(hashlib.sha256(label.encode()).digest()[:20])


@dataclass(frozen=True)
class ChainConfig:
    """Confirmation-delay sampling rule plus modeled per-operation gas."""

    confirmation_delay_min_s: float = 12.0
    confirmation_delay_max_s: float = 16.0
    add_collaborator_gas: int = DEFAULT_ADD_COLLABORATOR_GAS

    def __post_init__(self) -> None:
        if self.confirmation_delay_min_s < 0 or self.confirmation_delay_max_s < 0:
            raise ValueError("confirmation delay bounds must be >= 0")
        if self.confirmation_delay_min_s > self.confirmation_delay_max_s:
            raise ValueError("confirmation delay min must not exceed max")

    @classmethod
    def constant(cls, delay_s: float, **kw) -> "ChainConfig":
        return cls(confirmation_delay_min_s=delay_s, confirmation_delay_max_s=delay_s, **kw)


@dataclass
class TxReceipt:
    """Live handle to a submitted transaction; mutates in place on settlement."""

    tx_id: str
    submitted_at: float
    status: str = PENDING
    gas_used: int = 0
    confirmed_at: Optional[float] = None
    rejection_reason: Optional[str] = None

    @property
    def settled(self) -> bool:
        return self.status != PENDING

    def to_json(self) -> str:
        return json.dumps(
            {
                "tx_id": self.tx_id,
                "status": self.status,
                "gas_used": self.gas_used,
                "submitted_at": self.submitted_at,
                "confirmed_at": self.confirmed_at,
                "rejection_reason": self.rejection_reason,
            }
        )


@dataclass
class _PendingTx:
    receipt: TxReceipt
    kind: str  # "register" | "add_collaborator"
    sender: Address
    repo: str
    share_text: Optional[str]
    collaborator: Optional[Address]
    due_at: float
    seq: int


class SimulatedChain:
    """Deterministic single-contract chain with delayed settlement."""

    def __init__(
        self,
        config: ChainConfig | None = None,
        clock: Clock | None = None,
        rng=None,
        receipt_log: str | Path | None = None,
    ):
        import random

        self.config = config if config is not None else ChainConfig()
        self.clock = clock if clock is not None else RealClock()
        self._rng = rng if rng is not None else random.Random()
        self._receipt_log = Path(receipt_log) if receipt_log is not None else None
        self._lock = threading.RLock()
        self._owners: dict[str, Address] = {}
        self._has_access: dict[str, set[Address]] = {}
        self._shares: dict[str, str] = {}
        self._pending: list[_PendingTx] = []
        self._next_seq = 0

    # -- settlement core ---------------------------------------------------

    def _sample_delay(self) -> float:
        lo, hi = self.config.confirmation_delay_min_s, self.config.confirmation_delay_max_s
        if lo == hi:
            return lo
        return self._rng.uniform(lo, hi)

    def _log(self, receipt: TxReceipt) -> None:
        if self._receipt_log is not None:
            with self._receipt_log.open("a") as fh:
                fh.write(receipt.to_json() + "\n")

    def _apply(self, tx: _PendingTx) -> None:
        r = tx.receipt
        r.confirmed_at = tx.due_at
        if tx.kind == "register":
            if tx.repo in self._owners:
                r.status = REJECTED
                r.rejection_reason = REASON_ALREADY_REGISTERED
            else:
                self._owners[tx.repo] = tx.sender
                self._has_access.setdefault(tx.repo, set()).add(tx.sender)
                self._shares[tx.repo] = tx.share_text
                r.status = CONFIRMED
                r.gas_used = REGISTER_GAS
        elif tx.kind == "add_collaborator":
            if self._owners.get(tx.repo) != tx.sender:
                r.status = REJECTED
                r.rejection_reason = REASON_NOT_OWNER
            else:
                self._has_access[tx.repo].add(tx.collaborator)
                r.status = CONFIRMED
                r.gas_used = self.config.add_collaborator_gas
        else:  # pragma: no cover - enqueue is the only producer
            raise AssertionError(f"unknown tx kind {tx.kind!r}")
        self._log(r)

    def _sync(self) -> list[TxReceipt]:
        """Settle every pending transaction whose due time has passed."""
        now = self.clock.now()
        due = [tx for tx in self._pending if tx.due_at <= now]
        if not due:
            return []
        due.sort(key=lambda tx: (tx.due_at, tx.seq))
        for tx in due:
            self._apply(tx)
        settled = {tx.seq for tx in due}
        self._pending = [tx for tx in self._pending if tx.seq not in settled]
        return [tx.receipt for tx in due]

    def _enqueue(self, kind: str, sender: Address, repo: str,
                 share_text: str | None = None, collaborator: Address | None = None) -> TxReceipt:
        now = self.clock.now()
        receipt = TxReceipt(tx_id=f"tx-{self._next_seq:06d}", submitted_at=now)
        self._pending.append(
            _PendingTx(
                receipt=receipt,
                kind=kind,
                sender=sender,
                repo=repo,
                share_text=share_text,
                collaborator=collaborator,
                due_at=now + self._sample_delay(),
                seq=self._next_seq,
            )
        )
        self._next_seq += 1
        return receipt

    # -- transactions ------------------------------------------------------

    def submit_register(self, sender: Address, repo: str, share_text: str) -> TxReceipt:
        """Enqueue a registration; validity is judged at confirmation time."""
        with self._lock:
            self._sync()
            return self._enqueue("register", sender, repo, share_text=share_text)

    def submit_add_collaborator(self, sender: Address, repo: str, collaborator: Address) -> TxReceipt:
        with self._lock:
            self._sync()
            return self._enqueue("add_collaborator", sender, repo, collaborator=collaborator)

    # -- view calls (no gas, no delay) ---------------------------------------

    def check_access(self, repo: str, user: Address) -> bool:
        with self._lock:
            self._sync()
            return user in self._has_access.get(repo, set())

    def get_on_chain_share(self, caller: Address, repo: str) -> Optional[str]:
        """Stored share for confirmed repos; None while pending or unknown."""
        with self._lock:
            self._sync()
            if repo not in self._owners:
                return None
            if caller not in self._has_access.get(repo, set()):
                raise AccessDeniedError(f"{caller.text} has no access to {repo}")
            return self._shares[repo]

    def registered_owner(self, repo: str) -> Optional[Address]:
        """Public owner-mapping readback; None while pending or unknown."""
        with self._lock:
            self._sync()
            return self._owners.get(repo)

    def pending_count(self) -> int:
        with self._lock:
            self._sync()
            return len(self._pending)

    def due_at(self, tx_id: str) -> Optional[float]:
        """Scheduled settlement time of a still-pending transaction.

        Harness plumbing: lets a benchmark place operations relative to the
        confirmation instant without guessing the sampled delay.
        """
        with self._lock:
            for tx in self._pending:
                if tx.receipt.tx_id == tx_id:
                    return tx.due_at
            return None

    # -- time driver ----------------------------------------------------------

    def advance_clock(self, delta_s: float) -> list[TxReceipt]:
        """Advance virtual time and return the receipts settled by doing so."""
        if not getattr(self.clock, "is_virtual", False):
            raise ClockModeError("advance_clock requires a virtual clock")
        with self._lock:
            assert isinstance(self.clock, VirtualClock)
            self.clock.advance(delta_s)
            return self._sync()

    # -- persistence (CLI state dir) -------------------------------------------

    def snapshot(self) -> dict:
        with self._lock:
            self._sync()
            return {
                "next_seq": self._next_seq,
                "owners": {repo: addr.text for repo, addr in self._owners.items()},
                "access": {repo: sorted(a.text for a in users) for repo, users in self._has_access.items()},
                "shares": dict(self._shares),
                "pending": [
                    {
                        "tx_id": tx.receipt.tx_id,
                        "kind": tx.kind,
                        "sender": tx.sender.text,
                        "repo": tx.repo,
                        "share_text": tx.share_text,
                        "collaborator": tx.collaborator.text if tx.collaborator else None,
                        "submitted_at": tx.receipt.submitted_at,
                        "due_at": tx.due_at,
                        "seq": tx.seq,
                    }
                    for tx in self._pending
                ],
            }

    def restore(self, state: dict) -> None:
        with self._lock:
            self._next_seq = state["next_seq"]
            self._owners = {repo: Address.from_text(a) for repo, a in state["owners"].items()}
            self._has_access = {
                repo: {Address.from_text(a) for a in users} for repo, users in state["access"].items()
            }
            self._shares = dict(state["shares"])
            self._pending = [
                _PendingTx(
                    receipt=TxReceipt(tx_id=p["tx_id"], submitted_at=p["submitted_at"]),
                    kind=p["kind"],
                    sender=Address.from_text(p["sender"]),
                    repo=p["repo"],
                    share_text=p["share_text"],
                    collaborator=Address.from_text(p["collaborator"]) if p["collaborator"] else None,
                    due_at=p["due_at"],
                    seq=p["seq"],
                )
                for p in state["pending"]
            ]
