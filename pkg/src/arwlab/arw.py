"""Direct simulation of activated random walk on the looped complete graph.

Sites hold either nothing, one sleeping particle, or k >= 1 active
particles.  Toppling an active site consumes instructions from a fixed
per-site tape: a sleep instruction puts a lone particle to sleep (it is a
consumed no-op when the site holds several particles, since the sleeper
would be instantly re-woken), and a jump instruction moves one particle
to the sink with probability q, otherwise to a uniform site of [n]
including the origin itself.  With the tape fixed, the final
configuration and the per-site instruction counts do not depend on the
toppling order, which `check_abelian` verifies by replay.
"""

from __future__ import annotations

import heapq
import struct
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import Params
from .rng import as_seed, generator, substream

SLEEP = -1
DEFAULT_CAP = 10**9
_BLOCK = 64
_TAPE_MAGIC = b"ARWT"
_TAPE_VERSION = 1


class StabilizationCapError(RuntimeError):
    """Raised when a stabilization exceeds its instruction cap."""


class Configuration:
    """Per-site particle counts plus a sleep flag and the sink tally."""

    def __init__(self, counts, asleep, sink_count=0):
        self.counts = np.asarray(counts, dtype=np.int64).copy()
        self.asleep = np.asarray(asleep, dtype=bool).copy()
        if self.counts.shape != self.asleep.shape:
            raise ValueError("counts and asleep must have equal length")
        self.sink_count = int(sink_count)
        self.total = int(self.counts.sum()) + self.sink_count
        self.validate()

    @classmethod
    def all_ones(cls, n: int) -> "Configuration":
        return cls(np.ones(n, dtype=np.int64), np.zeros(n, dtype=bool))

    @classmethod
    def empty(cls, n: int) -> "Configuration":
        return cls(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=bool))

    @property
    def n(self) -> int:
        return len(self.counts)

    def copy(self) -> "Configuration":
        dup = Configuration.__new__(Configuration)
        dup.counts = self.counts.copy()
        dup.asleep = self.asleep.copy()
        dup.sink_count = self.sink_count
        dup.total = self.total
        return dup

    def validate(self) -> None:
        if np.any(self.counts < 0):
            raise ValueError("negative particle count")
        if np.any(self.asleep & (self.counts != 1)):
            raise ValueError("a sleeping site must hold exactly one particle")
        if int(self.counts.sum()) + self.sink_count != self.total:
            raise ValueError("particle conservation violated")

    def active_sites(self) -> np.ndarray:
        return np.flatnonzero((self.counts > 0) & ~self.asleep)

    def is_stable(self) -> bool:
        return len(self.active_sites()) == 0

    def sleeping_count(self) -> int:
        return int(self.asleep.sum())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Configuration)
            and np.array_equal(self.counts, other.counts)
            and np.array_equal(self.asleep, other.asleep)
            and self.sink_count == other.sink_count
        )


@dataclass
class StabilizationOutcome:
    sleeping: int
    jump_count: int
    steps: int | None = None  # purgatory departures, when instrumented
    per_site_jumps: np.ndarray | None = None
    sink_arrivals: int = 0
    instructions: int = 0


class InstructionTape:
    """Lazily generated per-site instruction streams with replay cursors.

    Site i's stream is a pure function of (seed, i): block b is drawn from
    a generator keyed by (seed, i, b), so replays and serialized copies
    extend identically.  Encoding: SLEEP (-1), a site index in [0, n), or
    n for the sink.
    """

    def __init__(self, n: int, p: float, q: float, seed: int):
        if not (0.0 < p <= 1.0) or not (0.0 <= q <= 1.0):
            raise ValueError("need p in (0, 1] and q in [0, 1]")
        self.n = n
        self.p = p
        self.q = q
        self.seed = int(seed)
        self._streams: list[list[int]] = [[] for _ in range(n)]
        self._cursors = [0] * n

    def _extend(self, site: int) -> None:
        block = len(self._streams[site]) // _BLOCK
        ss = np.random.SeedSequence(entropy=(self.seed, site), spawn_key=(block,))
        gen = np.random.Generator(np.random.PCG64(ss))
        u1 = gen.random(_BLOCK)
        u2 = gen.random(_BLOCK)
        instr = np.empty(_BLOCK, dtype=np.int64)
        sleepers = u1 < self.p
        instr[sleepers] = SLEEP
        jumpers = ~sleepers
        to_sink = jumpers & (u2 < self.q)
        instr[to_sink] = self.n
        to_site = jumpers & ~to_sink
        targets = ((u2[to_site] - self.q) / (1.0 - self.q) * self.n).astype(np.int64)
        instr[to_site] = np.minimum(targets, self.n - 1)
        self._streams[site].extend(instr.tolist())

    def next_instruction(self, site: int) -> int:
        cursor = self._cursors[site]
        while cursor >= len(self._streams[site]):
            self._extend(site)
        self._cursors[site] = cursor + 1
        return self._streams[site][cursor]

    def position(self, site: int) -> int:
        return self._cursors[site]

    def reset_cursors(self) -> None:
        self._cursors = [0] * self.n

    def serialize(self) -> bytes:
        """Versioned binary layout: magic, u32 version, u64 seed, u32 n,
        then per site a varint length followed by varint instructions
        (sleep -> 0, sink -> 1, site j -> j + 2)."""
        out = bytearray()
        out += _TAPE_MAGIC
        out += struct.pack("<IQI", _TAPE_VERSION, self.seed & (2**64 - 1), self.n)
        for stream in self._streams:
            _put_varint(out, len(stream))
            for instr in stream:
                if instr == SLEEP:
                    code = 0
                elif instr == self.n:
                    code = 1
                else:
                    code = instr + 2
                _put_varint(out, code)
        return bytes(out)

    @classmethod
    def deserialize(cls, data: bytes, p: float, q: float) -> "InstructionTape":
        if data[:4] != _TAPE_MAGIC:
            raise ValueError("bad tape magic")
        version, seed, n = struct.unpack_from("<IQI", data, 4)
        if version != _TAPE_VERSION:
            raise ValueError(f"unsupported tape version {version}")
        tape = cls(n, p, q, seed)
        pos = 4 + struct.calcsize("<IQI")
        for site in range(n):
            length, pos = _get_varint(data, pos)
            stream = []
            for _ in range(length):
                code, pos = _get_varint(data, pos)
                if code == 0:
                    stream.append(SLEEP)
                elif code == 1:
                    stream.append(n)
                else:
                    stream.append(code - 2)
            tape._streams[site] = stream
        return tape


def _put_varint(buf: bytearray, value: int) -> None:
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            buf.append(byte | 0x80)
        else:
            buf.append(byte)
            return


def _get_varint(data: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7


class _FifoSched:
    def __init__(self, sites, rng=None):
        self._q = deque(sites)

    def push(self, site):
        self._q.append(site)

    def pop(self):
        return self._q.popleft()

    def __len__(self):
        return len(self._q)


class _LifoSched(_FifoSched):
    def pop(self):
        return self._q.pop()


class _LowestSched:
    sign = 1

    def __init__(self, sites, rng=None):
        self._heap = [self.sign * s for s in sites]
        heapq.heapify(self._heap)

    def push(self, site):
        heapq.heappush(self._heap, self.sign * site)

    def pop(self):
        return self.sign * heapq.heappop(self._heap)

    def __len__(self):
        return len(self._heap)


class _HighestSched(_LowestSched):
    sign = -1


class _RandomSched:
    def __init__(self, sites, rng):
        self._items = list(sites)
        self._rng = rng

    def push(self, site):
        self._items.append(site)

    def pop(self):
        k = int(self._rng.integers(len(self._items)))
        self._items[k], self._items[-1] = self._items[-1], self._items[k]
        return self._items.pop()

    def __len__(self):
        return len(self._items)


_SCHEDULERS = {
    "fifo": _FifoSched,
    "lifo": _LifoSched,
    "lowest": _LowestSched,
    "highest": _HighestSched,
    "random": _RandomSched,
}


def _make_scheduler(policy: str, sites):
    name, _, arg = policy.partition(":")
    if name not in _SCHEDULERS:
        raise ValueError(f"unknown toppling policy {policy!r}")
    rng = generator(int(arg)) if name == "random" else None
    return _SCHEDULERS[name](sites, rng)


def stabilize(
    config: Configuration,
    params: Params,
    tape: InstructionTape,
    policy: str = "fifo",
    cap: int = DEFAULT_CAP,
    track_per_site: bool = False,
    check_conservation: bool = False,
) -> StabilizationOutcome:
    """Topple `config` in place until no active site remains.

    Raises StabilizationCapError past `cap` instruction executions (p = 1
    with any doubly-occupied site never terminates, hence the guard).
    """
    n = config.n
    counts = config.counts
    asleep = config.asleep
    per_site = np.zeros(n, dtype=np.int64) if track_per_site else None
    active = config.active_sites().tolist()
    sched = _make_scheduler(policy, active)
    in_sched = np.zeros(n, dtype=bool)
    in_sched[active] = True
    jumps = 0
    instr_count = 0
    sink_arrivals = 0
    while len(sched):
        i = sched.pop()
        in_sched[i] = False
        while True:
            if instr_count >= cap:
                raise StabilizationCapError(
                    f"stabilization exceeded {cap} instruction executions"
                )
            instr = tape.next_instruction(i)
            instr_count += 1
            if instr == SLEEP:
                if counts[i] == 1:
                    asleep[i] = True
                    break
                # multiply occupied: the sleeper is instantly re-woken
            else:
                jumps += 1
                if per_site is not None:
                    per_site[i] += 1
                counts[i] -= 1
                if instr == n:
                    sink_arrivals += 1
                    config.sink_count += 1
                else:
                    j = instr
                    counts[j] += 1
                    asleep[j] = False
                    if not in_sched[j] and j != i:
                        sched.push(j)
                        in_sched[j] = True
                break
        if not asleep[i] and counts[i] > 0 and not in_sched[i]:
            sched.push(i)
            in_sched[i] = True
        if check_conservation:
            config.validate()
    return StabilizationOutcome(
        sleeping=config.sleeping_count(),
        jump_count=jumps,
        per_site_jumps=per_site,
        sink_arrivals=sink_arrivals,
        instructions=instr_count,
    )


def sample_stationary_S(
    params: Params,
    rng=None,
    fast: bool | None = None,
    cap: int = DEFAULT_CAP,
) -> StabilizationOutcome:
    """One draw of the stationary sleeping count: stabilize the all-ones
    configuration with a fresh tape.

    `fast` selects the compiled FIFO engine (identical dynamics, on-the-fly
    instructions); defaults to compiled above n = 128.
    """
    if params.q <= 0.0 or params.p >= 1.0:
        raise ValueError("stationary sampling requires q > 0 and p < 1")
    seed = as_seed(rng)
    if fast is None:
        fast = params.n >= 128
    if fast:
        sleeping, jumps, instr, sink, capped = _kernels.arw_stabilize_all_ones(
            params.n, params.p, params.q, seed, cap
        )
        if capped:
            raise StabilizationCapError(
                f"stabilization exceeded {cap} instruction executions"
            )
        return StabilizationOutcome(
            sleeping=int(sleeping),
            jump_count=int(jumps),
            sink_arrivals=int(sink),
            instructions=int(instr),
        )
    tape = InstructionTape(params.n, params.p, params.q, substream(seed, 7))
    config = Configuration.all_ones(params.n)
    return stabilize(config, params, tape, cap=cap)


def drive_dissipate(
    config: Configuration,
    params: Params,
    steps: int,
    rng=None,
    cap: int = DEFAULT_CAP,
) -> list[StabilizationOutcome]:
    """Repeat `steps` times: drop one active particle on a uniform site of
    the (stable) configuration, then stabilize.  Returns per-step outcomes."""
    if params.q <= 0.0:
        raise ValueError("the driven chain requires q > 0")
    seed = as_seed(rng)
    gen = generator(substream(seed, 1))
    tape = InstructionTape(params.n, params.p, params.q, substream(seed, 2))
    outcomes = []
    for _ in range(steps):
        site = int(gen.integers(params.n))
        config.counts[site] += 1
        config.asleep[site] = False
        config.total += 1
        outcomes.append(stabilize(config, params, tape, cap=cap))
    return outcomes


def stabilize_via_purgatory(
    params: Params,
    rng=None,
    record_trace: bool = False,
) -> tuple[list[tuple[int, int]] | None, StabilizationOutcome]:
    """Stabilize the all-ones configuration routing every jump through a
    waiting vertex.

    Step 0 topples each site once (sleep or move to the waiting vertex);
    each later step dispatches one waiting particle: to the sink with
    probability q, else onto a uniform site whose occupant count is then
    toppled back down to a single sleep-or-leave resolution.  The trace
    holds (sleeping count, sink count) after every step; the departure
    count doubles as the jump count of the uninstrumented process.
    """
    if params.q <= 0.0 or params.p >= 1.0:
        raise ValueError("purgatory stabilization requires q > 0 and p < 1")
    n, p, q = params.n, params.p, params.q
    gen = generator(as_seed(rng))
    values = gen.random(n) < p  # step 0: each lone particle sleeps or leaves
    y = int(values.sum())
    z = 0
    waiting = n - y
    trace = [(y, z)] if record_trace else None
    steps = 0
    while waiting > 0:
        steps += 1
        if gen.random() < q:
            z += 1
            waiting -= 1
        else:
            i = int(gen.integers(n))
            waiting -= 1
            if values[i]:
                waiting += 1  # the collision sends one particle back out
                y -= 1
            if gen.random() < p:
                values[i] = True
                y += 1
            else:
                values[i] = False
                waiting += 1
        if record_trace:
            trace.append((y, z))
    outcome = StabilizationOutcome(
        sleeping=y, jump_count=steps, steps=steps, sink_arrivals=z
    )
    return trace, outcome


def check_abelian(
    n: int,
    initial: Configuration,
    tape: InstructionTape,
    policies: list[str],
    cap: int = DEFAULT_CAP,
) -> bool:
    """True iff every toppling policy replaying `tape` from `initial`
    reaches the same final configuration with the same jump count."""
    reference = None
    for policy in policies:
        config = initial.copy()
        tape.reset_cursors()
        outcome = stabilize(config, Params(n=n, p=tape.p, q=tape.q), tape,
                            policy=policy, cap=cap)
        summary = (config, outcome.jump_count)
        if reference is None:
            reference = summary
        elif summary[0] != reference[0] or summary[1] != reference[1]:
            return False
    return True
