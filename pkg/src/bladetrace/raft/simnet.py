"""Deterministic discrete-event network harness with fault injection.

Same seed + same inputs = identical delivery schedule, so every run — including
crash scenarios — replays exactly. A live pump mode advances simulated time
against the wall clock for interactive use; correctness tests use run_until.
"""

from __future__ import annotations

import heapq
import random
import threading
import time
from collections import deque
from typing import Callable, Dict, List, Optional, Tuple


class SimNet:
    def __init__(
        self,
        seed: int = 0,
        min_delay: float = 0.001,
        max_delay: float = 0.005,
        drop_prob: float = 0.0,
        tick_interval: float = 0.010,
    ):
        self.rng = random.Random(seed)
        self.min_delay = min_delay
        self.max_delay = max_delay
        self.drop_prob = drop_prob
        self.tick_interval = tick_interval

        self.now = 0.0
        self._seq = 0
        self._queue: List[Tuple[float, int, str, object]] = []
        self._nodes: Dict[int, object] = {}
        self._on_step: List[Callable[[], None]] = []
        self._inbox: deque = deque()  # thread-safe external inputs
        self._lock = threading.Lock()
        self.messages_sent = 0
        self.messages_dropped = 0

    # -- construction -------------------------------------------------------

    def add_node(self, node) -> None:
        self._nodes[node.node_id] = node
        node.start(self.now)
        self._push(self.now + self.tick_interval, "tick", node.node_id)

    def on_step(self, callback: Callable[[], None]) -> None:
        """Run after every processed event (service folding hooks)."""
        self._on_step.append(callback)

    def node(self, node_id: int):
        return self._nodes[node_id]

    def nodes(self):
        return list(self._nodes.values())

    # -- event queue -----------------------------------------------------------

    def _push(self, at: float, kind: str, payload) -> None:
        self._seq += 1
        heapq.heappush(self._queue, (at, self._seq, kind, payload))

    def timeout_rng(self, lo: float, hi: float) -> float:
        return self.rng.uniform(lo, hi)

    def send(self, src: int, dst: int, msg) -> None:
        self.messages_sent += 1
        if self.drop_prob and self.rng.random() < self.drop_prob:
            self.messages_dropped += 1
            return
        delay = self.rng.uniform(self.min_delay, self.max_delay)
        self._push(self.now + delay, "msg", (dst, msg))

    def call_at(self, at: float, fn: Callable[[], None]) -> None:
        self._push(at, "call", fn)

    def post(self, fn: Callable[[], None]) -> None:
        """Thread-safe external input; runs at the pump's next iteration."""
        with self._lock:
            self._inbox.append(fn)

    # -- fault injection -----------------------------------------------------------

    def crash(self, node_id: int) -> None:
        self._nodes[node_id].crash()

    def recover(self, node_id: int) -> None:
        node = self._nodes[node_id]
        node.recover(self.now)
        self._push(self.now + self.tick_interval, "tick", node_id)

    def schedule_crash(self, at: float, node_id: int) -> None:
        self.call_at(at, lambda: self.crash(node_id))

    def schedule_recover(self, at: float, node_id: int) -> None:
        self.call_at(at, lambda: self.recover(node_id))

    # -- execution ----------------------------------------------------------------

    def _drain_inbox(self) -> None:
        while True:
            with self._lock:
                if not self._inbox:
                    return
                fn = self._inbox.popleft()
            try:
                fn()
            except Exception:
                # External inputs must not kill the event loop; internal
                # invariant assertions still propagate from _dispatch.
                import logging

                logging.getLogger(__name__).exception("posted callback failed")

    def _dispatch(self, kind: str, payload) -> None:
        if kind == "msg":
            dst, msg = payload
            node = self._nodes.get(dst)
            if node is None or not node.alive:
                return  # messages to crashed nodes are dropped silently
            for out_dst, out_msg in node.on_message(msg, self.now):
                self.send(node.node_id, out_dst, out_msg)
        elif kind == "tick":
            node_id = payload
            node = self._nodes[node_id]
            if not node.alive:
                return  # recovery reschedules the tick
            for out_dst, out_msg in node.on_tick(self.now):
                self.send(node_id, out_dst, out_msg)
            self._push(self.now + self.tick_interval, "tick", node_id)
        elif kind == "call":
            payload()

    def step(self) -> bool:
        """Process the next event; returns False when the queue is empty."""
        self._drain_inbox()
        if not self._queue:
            return False
        at, _seq, kind, payload = heapq.heappop(self._queue)
        self.now = max(self.now, at)
        self._dispatch(kind, payload)
        for callback in self._on_step:
            callback()
        return True

    def run_until(
        self,
        predicate: Optional[Callable[[], bool]] = None,
        max_time: float = 60.0,
        max_events: int = 2_000_000,
    ) -> bool:
        """Run until the predicate holds; False on time/event budget exhaustion."""
        for _ in range(max_events):
            if predicate is not None and predicate():
                return True
            if self.now > max_time or not self._queue:
                return predicate() if predicate else False
            self.step()
        return predicate() if predicate is not None else False

    def run_for(self, duration: float) -> None:
        self.run_until(predicate=None, max_time=self.now + duration)

    # -- live pacing ---------------------------------------------------------------

    def pump(self, stop: threading.Event, time_scale: float = 10.0) -> None:
        """Advance simulated time at ``time_scale`` x wall clock until stopped."""
        anchor_real = time.monotonic()
        anchor_sim = self.now
        while not stop.is_set():
            self._drain_inbox()
            target = anchor_sim + (time.monotonic() - anchor_real) * time_scale
            progressed = False
            while self._queue and self._queue[0][0] <= target:
                self.step()
                progressed = True
            if not progressed:
                if self._queue:
                    wait_real = max(0.0, (self._queue[0][0] - target) / time_scale)
                    stop.wait(min(wait_real, 0.005))
                else:
                    stop.wait(0.005)
