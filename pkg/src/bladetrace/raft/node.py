"""Single-threaded Raft node state machine driven by messages and timer ticks.

Standard Raft safety rules: candidates with stale logs are refused votes,
and a leader only advances the commit index by counting replicas of entries
from its own term. Durable state is (current_term, voted_for, log); volatile
state is dropped on crash and rebuilt on recovery.

Log indexing is 1-based, matching the classic presentation.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

FOLLOWER = "follower"
CANDIDATE = "candidate"
LEADER = "leader"

MAX_ENTRIES_PER_APPEND = 50


@dataclass
class RequestVote:
    term: int
    candidate_id: int
    last_log_index: int
    last_log_term: int


@dataclass
class VoteResponse:
    term: int
    voter_id: int
    granted: bool


@dataclass
class AppendEntries:
    term: int
    leader_id: int
    prev_log_index: int
    prev_log_term: int
    entries: List[Tuple[int, dict]]  # (term, payload)
    leader_commit: int


@dataclass
class AppendResponse:
    term: int
    follower_id: int
    success: bool
    match_index: int


Message = object
Outgoing = List[Tuple[int, Message]]


class StableStore:
    """In-memory durable state; survives simulated crashes of its node."""

    def __init__(self) -> None:
        self.current_term = 0
        self.voted_for: Optional[int] = None
        self.entries: List[Tuple[int, dict]] = []

    def set_term(self, term: int, voted_for: Optional[int]) -> None:
        self.current_term = term
        self.voted_for = voted_for

    def append(self, entries: List[Tuple[int, dict]]) -> None:
        self.entries.extend(entries)

    def truncate_from(self, index: int) -> None:
        """Drop entries at 1-based ``index`` and beyond."""
        del self.entries[index - 1 :]


class FileStableStore(StableStore):
    """Append-only journal backing; replayed on construction if the file exists."""

    def __init__(self, path: str) -> None:
        super().__init__()
        self._path = path
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        if os.path.exists(path):
            self._replay()
        self._fh = open(path, "a", encoding="utf-8")

    def _replay(self) -> None:
        with open(self._path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if rec["t"] == "term":
                    self.current_term = rec["term"]
                    self.voted_for = rec["voted_for"]
                elif rec["t"] == "append":
                    self.entries.append((rec["term"], rec["payload"]))
                elif rec["t"] == "truncate":
                    del self.entries[rec["from"] - 1 :]

    def _write(self, rec: dict) -> None:
        self._fh.write(json.dumps(rec, sort_keys=True) + "\n")
        self._fh.flush()

    def set_term(self, term: int, voted_for: Optional[int]) -> None:
        super().set_term(term, voted_for)
        self._write({"t": "term", "term": term, "voted_for": voted_for})

    def append(self, entries: List[Tuple[int, dict]]) -> None:
        super().append(entries)
        for term, payload in entries:
            self._write({"t": "append", "term": term, "payload": payload})

    def truncate_from(self, index: int) -> None:
        super().truncate_from(index)
        self._write({"t": "truncate", "from": index})

    def close(self) -> None:
        self._fh.close()


class RaftNode:
    def __init__(
        self,
        node_id: int,
        peer_ids: List[int],
        store: StableStore,
        timeout_rng: Callable[[float, float], float],
        election_timeout: Tuple[float, float] = (0.150, 0.300),
        heartbeat_interval: float = 0.050,
    ):
        self.node_id = node_id
        self.peer_ids = [p for p in peer_ids if p != node_id]
        self.store = store
        self._rng = timeout_rng
        self._election_timeout = election_timeout
        self._heartbeat_interval = heartbeat_interval

        self.alive = True
        self.role = FOLLOWER
        self.commit_index = 0
        self.leader_hint: Optional[int] = None
        self.elections_won = 0

        self._votes: set = set()
        self._next_index: Dict[int, int] = {}
        self._match_index: Dict[int, int] = {}
        self._election_deadline = 0.0
        self._heartbeat_deadline = 0.0
        self._tx_ids: set = set()
        self._rebuild_tx_index()

    # -- introspection ------------------------------------------------------

    @property
    def current_term(self) -> int:
        return self.store.current_term

    @property
    def log(self) -> List[Tuple[int, dict]]:
        return self.store.entries

    def last_log_index(self) -> int:
        return len(self.store.entries)

    def last_log_term(self) -> int:
        return self.store.entries[-1][0] if self.store.entries else 0

    def entry(self, index: int) -> Tuple[int, dict]:
        return self.store.entries[index - 1]

    def has_tx(self, tx_id: str) -> bool:
        return tx_id in self._tx_ids

    def _rebuild_tx_index(self) -> None:
        self._tx_ids = {
            p.get("tx_id")
            for _t, p in self.store.entries
            if isinstance(p, dict) and p.get("tx_id")
        }

    # -- lifecycle ------------------------------------------------------------

    def start(self, now: float) -> None:
        self._election_deadline = now + self._rng(*self._election_timeout)

    def crash(self) -> None:
        """Drop all volatile state; the stable store survives."""
        self.alive = False

    def recover(self, now: float) -> None:
        self.alive = True
        self.role = FOLLOWER
        self.commit_index = 0
        self.leader_hint = None
        self._votes = set()
        self._next_index = {}
        self._match_index = {}
        self._rebuild_tx_index()
        self._election_deadline = now + self._rng(*self._election_timeout)

    # -- timers ------------------------------------------------------------------

    def on_tick(self, now: float) -> Outgoing:
        if not self.alive:
            return []
        if self.role == LEADER:
            if now >= self._heartbeat_deadline:
                return self._broadcast_append(now)
            return []
        if now >= self._election_deadline:
            return self._start_election(now)
        return []

    def _start_election(self, now: float) -> Outgoing:
        self.store.set_term(self.store.current_term + 1, self.node_id)
        self.role = CANDIDATE
        self._votes = {self.node_id}
        self.leader_hint = None
        self._election_deadline = now + self._rng(*self._election_timeout)
        msg = RequestVote(
            term=self.store.current_term,
            candidate_id=self.node_id,
            last_log_index=self.last_log_index(),
            last_log_term=self.last_log_term(),
        )
        return [(p, msg) for p in self.peer_ids]

    # -- message handling ------------------------------------------------------

    def on_message(self, msg: Message, now: float) -> Outgoing:
        if not self.alive:
            return []
        if isinstance(msg, RequestVote):
            return self._on_request_vote(msg, now)
        if isinstance(msg, VoteResponse):
            return self._on_vote_response(msg, now)
        if isinstance(msg, AppendEntries):
            return self._on_append_entries(msg, now)
        if isinstance(msg, AppendResponse):
            return self._on_append_response(msg, now)
        raise TypeError(f"unknown message type: {type(msg)!r}")

    def _maybe_step_down(self, term: int) -> None:
        if term > self.store.current_term:
            self.store.set_term(term, None)
            self.role = FOLLOWER
            self._votes = set()

    def _on_request_vote(self, msg: RequestVote, now: float) -> Outgoing:
        self._maybe_step_down(msg.term)
        granted = False
        if msg.term == self.store.current_term and self.role != LEADER:
            up_to_date = msg.last_log_term > self.last_log_term() or (
                msg.last_log_term == self.last_log_term()
                and msg.last_log_index >= self.last_log_index()
            )
            if self.store.voted_for in (None, msg.candidate_id) and up_to_date:
                granted = True
                if self.store.voted_for is None:
                    self.store.set_term(self.store.current_term, msg.candidate_id)
                self._election_deadline = now + self._rng(*self._election_timeout)
        return [
            (
                msg.candidate_id,
                VoteResponse(self.store.current_term, self.node_id, granted),
            )
        ]

    def _on_vote_response(self, msg: VoteResponse, now: float) -> Outgoing:
        self._maybe_step_down(msg.term)
        if self.role != CANDIDATE or msg.term != self.store.current_term or not msg.granted:
            return []
        self._votes.add(msg.voter_id)
        quorum = (len(self.peer_ids) + 1) // 2 + 1
        if len(self._votes) >= quorum:
            return self._become_leader(now)
        return []

    def _become_leader(self, now: float) -> Outgoing:
        self.role = LEADER
        self.leader_hint = self.node_id
        self.elections_won += 1
        next_idx = self.last_log_index() + 1
        self._next_index = {p: next_idx for p in self.peer_ids}
        self._match_index = {p: 0 for p in self.peer_ids}
        # Barrier entry: committing it also commits any inherited entries.
        self.store.append([(self.store.current_term, {"kind": "noop"})])
        return self._broadcast_append(now)

    def _on_append_entries(self, msg: AppendEntries, now: float) -> Outgoing:
        if msg.term < self.store.current_term:
            return [
                (
                    msg.leader_id,
                    AppendResponse(self.store.current_term, self.node_id, False, 0),
                )
            ]
        self._maybe_step_down(msg.term)
        if self.role != FOLLOWER:
            self.role = FOLLOWER
            self._votes = set()
        self.leader_hint = msg.leader_id
        self._election_deadline = now + self._rng(*self._election_timeout)

        # Log consistency check at prev_log_index.
        if msg.prev_log_index > 0:
            if self.last_log_index() < msg.prev_log_index:
                return [
                    (
                        msg.leader_id,
                        AppendResponse(self.store.current_term, self.node_id, False, 0),
                    )
                ]
            if self.entry(msg.prev_log_index)[0] != msg.prev_log_term:
                return [
                    (
                        msg.leader_id,
                        AppendResponse(self.store.current_term, self.node_id, False, 0),
                    )
                ]

        index = msg.prev_log_index
        to_append: List[Tuple[int, dict]] = []
        for offset, (term, payload) in enumerate(msg.entries):
            index = msg.prev_log_index + offset + 1
            if index <= self.last_log_index():
                if self.entry(index)[0] != term:
                    assert index > self.commit_index, "refusing to truncate committed entries"
                    self.store.truncate_from(index)
                    self._rebuild_tx_index()
                    to_append = [msg.entries[offset]]
                # Matching term at same index: entry identical by Log Matching.
            else:
                to_append.append((term, payload))
        if to_append:
            self.store.append(to_append)
            for _t, payload in to_append:
                if isinstance(payload, dict) and payload.get("tx_id"):
                    self._tx_ids.add(payload["tx_id"])
        last_new = msg.prev_log_index + len(msg.entries)
        if msg.leader_commit > self.commit_index:
            self.commit_index = min(msg.leader_commit, last_new)
        return [
            (
                msg.leader_id,
                AppendResponse(self.store.current_term, self.node_id, True, last_new),
            )
        ]

    def _on_append_response(self, msg: AppendResponse, now: float) -> Outgoing:
        if msg.term > self.store.current_term:
            self._maybe_step_down(msg.term)
            return []
        if self.role != LEADER or msg.term != self.store.current_term:
            return []
        if msg.success:
            self._match_index[msg.follower_id] = max(
                self._match_index.get(msg.follower_id, 0), msg.match_index
            )
            self._next_index[msg.follower_id] = self._match_index[msg.follower_id] + 1
            self._advance_commit()
            if self._next_index[msg.follower_id] <= self.last_log_index():
                return self._send_append_to(msg.follower_id)
            return []
        self._next_index[msg.follower_id] = max(1, self._next_index.get(msg.follower_id, 1) - 1)
        return self._send_append_to(msg.follower_id)

    def _advance_commit(self) -> None:
        for n in range(self.last_log_index(), self.commit_index, -1):
            if self.entry(n)[0] != self.store.current_term:
                break  # only own-term entries commit by counting
            replicas = 1 + sum(1 for p in self.peer_ids if self._match_index.get(p, 0) >= n)
            if replicas >= (len(self.peer_ids) + 1) // 2 + 1:
                self.commit_index = n
                break

    # -- leader operations -----------------------------------------------------

    def client_append(self, payload: dict, now: float) -> Outgoing:
        """Append a new entry (leader only) and replicate immediately."""
        assert self.role == LEADER
        self.store.append([(self.store.current_term, payload)])
        if isinstance(payload, dict) and payload.get("tx_id"):
            self._tx_ids.add(payload["tx_id"])
        return self._broadcast_append(now)

    def _broadcast_append(self, now: float) -> Outgoing:
        self._heartbeat_deadline = now + self._heartbeat_interval
        out: Outgoing = []
        for p in self.peer_ids:
            out.extend(self._send_append_to(p))
        return out

    def _send_append_to(self, peer: int) -> Outgoing:
        next_idx = self._next_index.get(peer, self.last_log_index() + 1)
        prev_index = next_idx - 1
        prev_term = self.entry(prev_index)[0] if prev_index >= 1 else 0
        entries = [
            self.entry(i)
            for i in range(
                next_idx, min(self.last_log_index(), next_idx + MAX_ENTRIES_PER_APPEND - 1) + 1
            )
        ]
        return [
            (
                peer,
                AppendEntries(
                    term=self.store.current_term,
                    leader_id=self.node_id,
                    prev_log_index=prev_index,
                    prev_log_term=prev_term,
                    entries=entries,
                    leader_commit=self.commit_index,
                ),
            )
        ]
