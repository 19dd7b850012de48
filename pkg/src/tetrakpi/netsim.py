"""Seeded discrete-event simulator of trunked-radio stations under queued load.

The simulator injects Poisson call, handover, attachment, message and packet
streams with known fault probabilities, runs the per-station channel pools
with a waiting queue, and emits hourly counter records in the exact ingest
schema plus a ground-truth log of what really happened, so every KPI formula
can be checked against known rates.

Model laws (fixed, documented here rather than configurable):

- inter-arrival and holding times are exponential: the M/M/n regime the
  analytic Erlang C model assumes;
- channel demand per call: a group call seizes one channel on every station
  carrying a member of the called group; a same-cell individual call seizes
  one channel (half-duplex) or two (full-duplex); a cross-cell individual
  call seizes one channel in each of the two cells; a packet-mode transfer
  seizes one channel;
- requests that cannot allocate wait in arrival order and are served
  work-conserving: a blocked multi-station request does not hold up later
  requests whose demand fits (strict per-station FIFO would live-lock when
  two multi-station requests head different queues);
- a queued entry times out after the origin station's max_queue_time and
  counts as an unsuccessful setup for voice calls;
- set-up failures are Bernoulli per voice call and consume no channel time;
  mid-call drops hit established voice calls with probability p_drop at a
  uniformly random point of the drawn holding time;
- control-channel semislot pools follow a fixed per-hour budget: each
  dispatcher message consumes a downlink semislot, each subscriber message an
  uplink one (usage capped at the budget), and random-access collisions are
  Bernoulli per subscriber message;
- the same seed always reproduces bit-identical counters and truth.
"""

from __future__ import annotations

import heapq
import json
import math
import random
from dataclasses import dataclass, field, fields
from datetime import datetime, timedelta

from .counters import CounterRecord, CounterSet, HOUR, render_counters
from .errors import ConfigError

GROUP = "group"
INDIV_HALF = "indiv_half"
INDIV_FULL = "indiv_full"
PACKET = "packet"
CALL_KINDS = (GROUP, INDIV_HALF, INDIV_FULL, PACKET)

DEFAULT_SEMISLOT_BUDGET = 36000   # semislots per hour on each MCCH direction
DEFAULT_START = datetime(2026, 1, 5, 0, 0, 0)


@dataclass(frozen=True)
class CallRates:
    """Call arrivals per second, split by call type."""

    group: float = 0.0
    indiv_half: float = 0.0
    indiv_full: float = 0.0
    packet: float = 0.0


@dataclass(frozen=True)
class FaultProbs:
    """Per-event failure probabilities injected by the scenario."""

    p_setup_fail: float = 0.0
    p_drop: float = 0.0
    p_ho_fail: float = 0.0
    p_attach_fail: float = 0.0
    p_msg_fail: float = 0.0
    p_packet_corrupt: float = 0.0
    p_rac_collision: float = 0.0


@dataclass(frozen=True)
class EventRates:
    """Independent event arrivals per second."""

    attachments: float = 0.0
    handovers: float = 0.0
    messages: float = 0.0
    packets: float = 0.0


@dataclass(frozen=True)
class StationConfig:
    tbs_id: str
    tch_count: int
    arrival_rates: CallRates = CallRates()
    mean_holding: float = 60.0
    max_queue_time: float = 300.0
    p_cross_cell: float = 0.0
    faults: FaultProbs = FaultProbs()
    events: EventRates = EventRates()


@dataclass(frozen=True)
class GroupTopology:
    """Conversational groups and how widely each spreads over stations.

    Group g covers ``spread`` stations starting at index g modulo the station
    count; a group call arriving at a station picks uniformly among the
    groups covering it (or stays single-cell when none does).
    """

    count: int = 0
    spread: int = 1


@dataclass(frozen=True)
class SimConfig:
    seed: int
    duration: int
    stations: tuple[StationConfig, ...]
    groups: GroupTopology = GroupTopology()
    start: datetime = DEFAULT_START
    mcch_semislot_budget: int = DEFAULT_SEMISLOT_BUDGET

    def validate(self) -> "SimConfig":
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if not isinstance(self.duration, int) or self.duration <= 0:
            raise ConfigError(f"duration must be a positive integer, got {self.duration!r}")
        if not self.stations:
            raise ConfigError("at least one station is required")
        seen = set()
        for st in self.stations:
            if not st.tbs_id:
                raise ConfigError("station tbs_id must be non-empty")
            if st.tbs_id in seen:
                raise ConfigError(f"duplicate tbs_id {st.tbs_id!r}")
            seen.add(st.tbs_id)
            if not isinstance(st.tch_count, int) or st.tch_count < 1:
                raise ConfigError(f"{st.tbs_id}: tch_count must be a positive integer")
            if st.mean_holding <= 0:
                raise ConfigError(f"{st.tbs_id}: mean_holding must be positive")
            if st.max_queue_time <= 0:
                raise ConfigError(f"{st.tbs_id}: max_queue_time must be positive")
            for f in fields(CallRates):
                if getattr(st.arrival_rates, f.name) < 0:
                    raise ConfigError(f"{st.tbs_id}: negative arrival rate {f.name}")
            for f in fields(EventRates):
                if getattr(st.events, f.name) < 0:
                    raise ConfigError(f"{st.tbs_id}: negative event rate {f.name}")
            for f in fields(FaultProbs):
                p = getattr(st.faults, f.name)
                if not (0.0 <= p <= 1.0):
                    raise ConfigError(f"{st.tbs_id}: {f.name} outside [0, 1]")
            if not (0.0 <= st.p_cross_cell <= 1.0):
                raise ConfigError(f"{st.tbs_id}: p_cross_cell outside [0, 1]")
        if self.groups.count < 0 or self.groups.spread < 1:
            raise ConfigError("group topology needs count >= 0 and spread >= 1")
        if not isinstance(self.mcch_semislot_budget, int) or self.mcch_semislot_budget < 0:
            raise ConfigError("mcch_semislot_budget must be a non-negative integer")
        if self.start.tzinfo is not None or (self.start.minute, self.start.second,
                                             self.start.microsecond) != (0, 0, 0):
            raise ConfigError("start must be a zone-naive, hour-aligned timestamp")
        return self


def _pick(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _sub(cls, data: dict | None, where: str):
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in fields(cls)}
    _pick(data, names, where)
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(doc: dict) -> SimConfig:
    """Build and validate a SimConfig from its JSON document form."""
    if not isinstance(doc, dict):
        raise ConfigError("simulation config must be a JSON object")
    _pick(doc, {"seed", "duration", "start", "mcch_semislot_budget", "groups",
                "faults", "event_rates", "stations"}, "config")
    for required in ("seed", "duration", "stations"):
        if required not in doc:
            raise ConfigError(f"config: missing {required!r}")
    default_faults = _sub(FaultProbs, doc.get("faults"), "faults")
    default_events = _sub(EventRates, doc.get("event_rates"), "event_rates")
    stations = []
    if not isinstance(doc["stations"], list):
        raise ConfigError("config: stations must be an array")
    for i, entry in enumerate(doc["stations"]):
        where = f"stations[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: expected an object")
        _pick(entry, {"tbs_id", "tch_count", "arrival_rates", "mean_holding",
                      "max_queue_time", "p_cross_cell", "faults", "event_rates"}, where)
        faults = dict((f.name, getattr(default_faults, f.name)) for f in fields(FaultProbs))
        faults.update(entry.get("faults") or {})
        events = dict((f.name, getattr(default_events, f.name)) for f in fields(EventRates))
        events.update(entry.get("event_rates") or {})
        try:
            stations.append(StationConfig(
                tbs_id=str(entry["tbs_id"]),
                tch_count=entry["tch_count"],
                arrival_rates=_sub(CallRates, entry.get("arrival_rates"), f"{where}.arrival_rates"),
                mean_holding=float(entry.get("mean_holding", 60.0)),
                max_queue_time=float(entry.get("max_queue_time", 300.0)),
                p_cross_cell=float(entry.get("p_cross_cell", 0.0)),
                faults=_sub(FaultProbs, faults, f"{where}.faults"),
                events=_sub(EventRates, events, f"{where}.event_rates"),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc!r}") from None
    start = doc.get("start", DEFAULT_START.isoformat())
    try:
        start_dt = start if isinstance(start, datetime) else datetime.fromisoformat(start)
    except (TypeError, ValueError):
        raise ConfigError(f"config: bad start timestamp {start!r}") from None
    return SimConfig(
        seed=doc["seed"],
        duration=doc["duration"],
        stations=tuple(stations),
        groups=_sub(GroupTopology, doc.get("groups"), "groups"),
        start=start_dt,
        mcch_semislot_budget=doc.get("mcch_semislot_budget", DEFAULT_SEMISLOT_BUDGET),
    ).validate()


def load_config(source: bytes | str) -> SimConfig:
    text = source.decode("utf-8") if isinstance(source, (bytes, bytearray)) else source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid simulation config JSON: {exc.msg}") from None
    return config_from_dict(doc)


def load_config_file(path) -> SimConfig:
    with open(path, "rb") as fh:
        return load_config(fh.read())


@dataclass
class SimTruth:
    """Realized per-station counts and rates of every injected event class.

    Every rate is the exact failures/attempts quotient of the realized event
    log (``None`` where there were no attempts), independent of the counter
    pipeline it is used to check.
    """

    stations: dict[str, dict]

    def to_json(self) -> str:
        return json.dumps({"stations": self.stations}, indent=2, sort_keys=True)


_TRUTH_COUNTS = (
    "requests", "queued", "served_after_wait", "abandoned",
    "group_attempts", "group_established", "group_setup_failures",
    "group_abandoned", "group_completed", "group_dropped",
    "indiv_attempts", "indiv_established", "indiv_setup_failures",
    "indiv_abandoned", "indiv_completed", "indiv_dropped",
    "packet_attempts", "packet_established", "packet_abandoned", "packet_completed",
    "attach_ms_attempts", "attach_ms_failures",
    "attach_swmi_attempts", "attach_swmi_failures",
    "ho_indiv_attempts", "ho_indiv_failures",
    "ho_group_attempts", "ho_group_failures",
    "msg_dws_attempts", "msg_dws_failures",
    "msg_ms_attempts", "msg_ms_failures",
    "packets_rx_ok", "packets_rx_corrupt",
)

_EVENT_COUNTERS = (
    "crr", "qcrr", "gau", "ugau", "gas", "ugas", "ich", "uich", "gch", "ugch",
    "spgc", "upgc", "spic", "upic", "segc", "uegc", "seic", "ueic",
    "dam", "udam", "um", "uum", "srp", "crp", "rac",
)


class _StationState:
    """Mutable per-station counters and channel pool during one run."""

    __slots__ = ("cfg", "free", "ev", "busy", "qwt", "psqr", "qlen",
                 "last_qwin", "truth", "wait_total")

    def __init__(self, cfg: StationConfig, n_windows: int):
        self.cfg = cfg
        self.free = cfg.tch_count
        self.ev = {name: [0] * n_windows for name in _EVENT_COUNTERS}
        self.ev["dl_msgs"] = [0] * n_windows
        self.ev["ul_msgs"] = [0] * n_windows
        self.busy = {GROUP: [0.0] * n_windows,
                     INDIV_HALF: [0.0] * n_windows,
                     PACKET: [0.0] * n_windows}
        self.qwt = [0.0] * n_windows
        self.psqr = [0] * n_windows
        self.qlen = 0
        self.last_qwin = 0
        self.truth = {name: 0 for name in _TRUTH_COUNTS}
        self.wait_total = 0.0

    def queue_change(self, w: int, delta: int) -> None:
        for wi in range(self.last_qwin + 1, w + 1):
            self.psqr[wi] = max(self.psqr[wi], self.qlen)
        self.qlen += delta
        self.psqr[w] = max(self.psqr[w], self.qlen)
        self.last_qwin = w

    def finalize_queue(self, n_windows: int) -> None:
        for wi in range(self.last_qwin + 1, n_windows):
            self.psqr[wi] = max(self.psqr[wi], self.qlen)


class _Request:
    __slots__ = ("kind", "demand", "origin", "arrival", "state")

    def __init__(self, kind: str, demand: dict[int, int], origin: int, arrival: float):
        self.kind = kind
        self.demand = demand
        self.origin = origin
        self.arrival = arrival
        self.state = "new"


class _ActiveCall:
    __slots__ = ("req", "start", "dropped")

    def __init__(self, req: _Request, start: float, dropped: bool):
        self.req = req
        self.start = start
        self.dropped = dropped


def _accrue(arr: list[float], t0: float, t1: float, mult: float = 1.0) -> None:
    # Splits [t0, t1) over the hourly windows it touches.
    while t0 < t1:
        w = int(t0 // HOUR)
        seg_end = min((w + 1) * HOUR, t1)
        arr[w] += (seg_end - t0) * mult
        t0 = seg_end


class _Simulator:
    def __init__(self, config: SimConfig):
        self.cfg = config.validate()
        self.rng = random.Random(config.seed)
        self.n_windows = -(-config.duration // HOUR)
        self.stations = [_StationState(sc, self.n_windows) for sc in config.stations]
        self.heap: list[tuple[float, int, int, tuple]] = []
        self.seq = 0
        self.waiting: list[_Request] = []
        self.active: set[_ActiveCall] = set()
        self._serving = False
        n = len(self.stations)
        spread = min(config.groups.spread, n)
        self.group_coverage = [
            tuple(sorted((g + j) % n for j in range(spread)))
            for g in range(config.groups.count)
        ]
        self.covering = [
            [g for g, cov in enumerate(self.group_coverage) if s in cov]
            for s in range(n)
        ]

    # -- event plumbing ----------------------------------------------------

    _ON_CALL, _ON_END, _ON_TIMEOUT, _ON_ATTACH, _ON_HO, _ON_MSG, _ON_PKT = range(7)

    def push(self, t: float, code: int, payload: tuple) -> None:
        if t < self.cfg.duration:
            heapq.heappush(self.heap, (t, self.seq, code, payload))
            self.seq += 1

    def win(self, t: float) -> int:
        return min(int(t // HOUR), self.n_windows - 1)

    def _schedule_stream(self, t: float, code: int, s: int, rate: float, extra: tuple = ()) -> None:
        if rate > 0:
            self.push(t + self.rng.expovariate(rate), code, (s, *extra))

    # -- channel pool ------------------------------------------------------

    def _fits(self, demand: dict[int, int]) -> bool:
        return all(self.stations[i].free >= ch for i, ch in demand.items())

    def _seize(self, demand: dict[int, int]) -> None:
        for i, ch in demand.items():
            self.stations[i].free -= ch

    def _release(self, demand: dict[int, int]) -> None:
        for i, ch in demand.items():
            self.stations[i].free += ch

    # -- call lifecycle ----------------------------------------------------

    def _build_demand(self, s: int, kind: str) -> dict[int, int]:
        n = len(self.stations)
        if kind == GROUP:
            cands = self.covering[s]
            if cands:
                g = cands[self.rng.randrange(len(cands))] if len(cands) > 1 else cands[0]
                return {i: 1 for i in self.group_coverage[g]}
            return {s: 1}
        if kind in (INDIV_HALF, INDIV_FULL):
            cfg = self.stations[s].cfg
            if n > 1 and cfg.p_cross_cell > 0 and self.rng.random() < cfg.p_cross_cell:
                other = self.rng.randrange(n - 1)
                if other >= s:
                    other += 1
                return {s: 1, other: 1}
            return {s: 2} if kind == INDIV_FULL else {s: 1}
        return {s: 1}   # packet-mode transfer

    def _pool_key(self, kind: str) -> str:
        if kind == GROUP:
            return "group"
        if kind == PACKET:
            return "packet"
        return "indiv"

    def _on_call(self, t: float, s: int, kind: str) -> None:
        self._schedule_stream(t, self._ON_CALL, s,
                              getattr(self.stations[s].cfg.arrival_rates, kind), (kind,))
        demand = self._build_demand(s, kind)
        w = self.win(t)
        pool = self._pool_key(kind)
        for i in demand:
            st = self.stations[i]
            st.ev["crr"][w] += 1
            st.truth["requests"] += 1
            st.truth[f"{pool}_attempts"] += 1
        req = _Request(kind, demand, s, t)
        if self._fits(demand):
            released = self._start(t, req, waited=False)
            if released:
                self._serve_queue(t)
        else:
            req.state = "waiting"
            self.waiting.append(req)
            for i in demand:
                st = self.stations[i]
                st.ev["qcrr"][w] += 1
                st.truth["queued"] += 1
                st.queue_change(w, +1)
            self.push(t + self.stations[s].cfg.max_queue_time, self._ON_TIMEOUT, (req,))

    def _start(self, t: float, req: _Request, waited: bool) -> bool:
        """Seize channels and run the set-up; returns True if released at once."""
        self._seize(req.demand)
        req.state = "served"
        if waited:
            wait = t - req.arrival
            for i in req.demand:
                st = self.stations[i]
                _accrue(st.qwt, req.arrival, t)
                st.wait_total += wait
                st.truth["served_after_wait"] += 1
        w = self.win(t)
        origin = self.stations[req.origin].cfg
        pool = self._pool_key(req.kind)
        voice = req.kind != PACKET
        if voice and self.rng.random() < origin.faults.p_setup_fail:
            fail_field = "upgc" if req.kind == GROUP else "upic"
            for i in req.demand:
                st = self.stations[i]
                st.ev[fail_field][w] += 1
                st.truth[f"{pool}_setup_failures"] += 1
            self._release(req.demand)
            return True
        if voice:
            ok_field = "spgc" if req.kind == GROUP else "spic"
            for i in req.demand:
                st = self.stations[i]
                st.ev[ok_field][w] += 1
                st.truth[f"{pool}_established"] += 1
        else:
            for i in req.demand:
                self.stations[i].truth["packet_established"] += 1
        holding = self.rng.expovariate(1.0 / origin.mean_holding)
        dropped = voice and self.rng.random() < origin.faults.p_drop
        if dropped:
            holding = self.rng.random() * holding
        call = _ActiveCall(req, t, dropped)
        self.active.add(call)
        self.push(t + holding, self._ON_END, (call,))
        return False

    def _finish_call(self, call: _ActiveCall, t: float, counted: bool) -> None:
        req = call.req
        busy_key = INDIV_HALF if req.kind == INDIV_FULL else req.kind
        for i, ch in req.demand.items():
            st = self.stations[i]
            _accrue(st.busy[busy_key], call.start, t, mult=float(ch))
        if not counted:
            return
        pool = self._pool_key(req.kind)
        w = self.win(t)
        if req.kind == PACKET:
            for i in req.demand:
                self.stations[i].truth["packet_completed"] += 1
            return
        field_name = ("uegc" if call.dropped else "segc") if req.kind == GROUP else \
                     ("ueic" if call.dropped else "seic")
        outcome = "dropped" if call.dropped else "completed"
        for i in req.demand:
            st = self.stations[i]
            st.ev[field_name][w] += 1
            st.truth[f"{pool}_{outcome}"] += 1

    def _on_end(self, t: float, call: _ActiveCall) -> None:
        self.active.discard(call)
        self._release(call.req.demand)
        self._finish_call(call, t, counted=True)
        self._serve_queue(t)

    def _on_timeout(self, t: float, req: _Request) -> None:
        if req.state != "waiting":
            return
        req.state = "abandoned"
        self.waiting.remove(req)
        w = self.win(t)
        wait = t - req.arrival
        pool = self._pool_key(req.kind)
        voice = req.kind != PACKET
        fail_field = "upgc" if req.kind == GROUP else "upic"
        for i in req.demand:
            st = self.stations[i]
            st.queue_change(w, -1)
            _accrue(st.qwt, req.arrival, t)
            st.wait_total += wait
            st.truth["abandoned"] += 1
            st.truth[f"{pool}_abandoned"] += 1
            if voice:
                st.ev[fail_field][w] += 1

    def _serve_queue(self, t: float) -> None:
        if self._serving:
            return
        self._serving = True
        w = self.win(t)
        progressed = True
        while progressed:
            progressed = False
            for idx, req in enumerate(self.waiting):
                if self._fits(req.demand):
                    del self.waiting[idx]
                    for i in req.demand:
                        self.stations[i].queue_change(w, -1)
                    self._start(t, req, waited=True)
                    progressed = True
                    break
        self._serving = False

    # -- independent event streams ------------------------------------------

    def _on_attach(self, t: float, s: int) -> None:
        st = self.stations[s]
        self._schedule_stream(t, self._ON_ATTACH, s, st.cfg.events.attachments)
        w = self.win(t)
        by_ms = self.rng.random() < 0.5
        failed = self.rng.random() < st.cfg.faults.p_attach_fail
        total, bad, key = ("gau", "ugau", "ms") if by_ms else ("gas", "ugas", "swmi")
        st.ev[total][w] += 1
        st.truth[f"attach_{key}_attempts"] += 1
        if failed:
            st.ev[bad][w] += 1
            st.truth[f"attach_{key}_failures"] += 1

    def _on_handover(self, t: float, s: int) -> None:
        st = self.stations[s]
        self._schedule_stream(t, self._ON_HO, s, st.cfg.events.handovers)
        w = self.win(t)
        indiv = self.rng.random() < 0.5
        failed = self.rng.random() < st.cfg.faults.p_ho_fail
        total, bad, key = ("ich", "uich", "indiv") if indiv else ("gch", "ugch", "group")
        st.ev[total][w] += 1
        st.truth[f"ho_{key}_attempts"] += 1
        if failed:
            st.ev[bad][w] += 1
            st.truth[f"ho_{key}_failures"] += 1

    def _on_message(self, t: float, s: int) -> None:
        st = self.stations[s]
        self._schedule_stream(t, self._ON_MSG, s, st.cfg.events.messages)
        w = self.win(t)
        from_dws = self.rng.random() < 0.5
        failed = self.rng.random() < st.cfg.faults.p_msg_fail
        if from_dws:
            st.ev["dam"][w] += 1
            st.ev["dl_msgs"][w] += 1
            st.truth["msg_dws_attempts"] += 1
            if failed:
                st.ev["udam"][w] += 1
                st.truth["msg_dws_failures"] += 1
        else:
            st.ev["um"][w] += 1
            st.ev["ul_msgs"][w] += 1
            st.truth["msg_ms_attempts"] += 1
            if failed:
                st.ev["uum"][w] += 1
                st.truth["msg_ms_failures"] += 1
            if self.rng.random() < st.cfg.faults.p_rac_collision:
                st.ev["rac"][w] += 1

    def _on_packet_rx(self, t: float, s: int) -> None:
        st = self.stations[s]
        self._schedule_stream(t, self._ON_PKT, s, st.cfg.events.packets)
        w = self.win(t)
        if self.rng.random() < st.cfg.faults.p_packet_corrupt:
            st.ev["crp"][w] += 1
            st.truth["packets_rx_corrupt"] += 1
        else:
            st.ev["srp"][w] += 1
            st.truth["packets_rx_ok"] += 1

    # -- main loop -----------------------------------------------------------

    _HANDLERS = {}

    def run(self) -> tuple[list[CounterRecord], SimTruth]:
        for s, st in enumerate(self.stations):
            for kind in CALL_KINDS:
                self._schedule_stream(0.0, self._ON_CALL, s,
                                      getattr(st.cfg.arrival_rates, kind), (kind,))
            self._schedule_stream(0.0, self._ON_ATTACH, s, st.cfg.events.attachments)
            self._schedule_stream(0.0, self._ON_HO, s, st.cfg.events.handovers)
            self._schedule_stream(0.0, self._ON_MSG, s, st.cfg.events.messages)
            self._schedule_stream(0.0, self._ON_PKT, s, st.cfg.events.packets)

        handlers = {
            self._ON_CALL: self._on_call,
            self._ON_END: self._on_end,
            self._ON_TIMEOUT: self._on_timeout,
            self._ON_ATTACH: self._on_attach,
            self._ON_HO: self._on_handover,
            self._ON_MSG: self._on_message,
            self._ON_PKT: self._on_packet_rx,
        }
        while self.heap:
            t, _, code, payload = heapq.heappop(self.heap)
            handlers[code](t, *payload)

        end = float(self.cfg.duration)
        for call in self.active:
            self._finish_call(call, end, counted=False)
        for req in self.waiting:
            wait = end - req.arrival
            for i in req.demand:
                st = self.stations[i]
                _accrue(st.qwt, req.arrival, end)
                st.wait_total += wait
        for st in self.stations:
            st.finalize_queue(self.n_windows)
        return self._emit(), self._truth()

    # -- output ----------------------------------------------------------------

    def _window_len(self, w: int) -> int:
        return min(HOUR, self.cfg.duration - w * HOUR)

    def _emit(self) -> list[CounterRecord]:
        budget = self.cfg.mcch_semislot_budget
        records = []
        for st in self.stations:
            for w in range(self.n_windows):
                wl = self._window_len(w)
                dss = budget * wl // HOUR
                urs = budget * wl // HOUR
                counters = CounterSet(
                    service_time=wl,
                    gcbt=int(st.busy[GROUP][w]),
                    icbt=int(st.busy[INDIV_HALF][w]),
                    pmbt=int(st.busy[PACKET][w]),
                    pc=st.cfg.tch_count * wl,
                    crr=st.ev["crr"][w],
                    qcrr=st.ev["qcrr"][w],
                    qwt=int(st.qwt[w]),
                    psqr=st.psqr[w],
                    dss=dss,
                    dus=min(st.ev["dl_msgs"][w], dss),
                    urs=urs,
                    uus=min(st.ev["ul_msgs"][w], urs),
                    rac=st.ev["rac"][w],
                    **{name: st.ev[name][w] for name in _EVENT_COUNTERS
                       if name not in ("crr", "qcrr", "rac")},
                )
                records.append(CounterRecord(
                    st.cfg.tbs_id,
                    self.cfg.start + timedelta(hours=w),
                    wl,
                    counters,
                ))
        return records

    def _truth(self) -> SimTruth:
        stations = {}
        for st in self.stations:
            c = dict(st.truth)
            c["wait_time_total"] = st.wait_total

            def frac(num: float, den: float) -> float | None:
                return num / den if den else None

            rates = {
                "wait_probability": frac(c["queued"], c["requests"]),
                "mean_wait": frac(c["wait_time_total"], c["requests"]),
                "mean_wait_queued": frac(c["wait_time_total"], c["queued"]),
                "group_setup_failure_fraction": frac(
                    c["group_setup_failures"] + c["group_abandoned"], c["group_attempts"]),
                "indiv_setup_failure_fraction": frac(
                    c["indiv_setup_failures"] + c["indiv_abandoned"], c["indiv_attempts"]),
                "group_drop_fraction": frac(
                    c["group_dropped"], c["group_completed"] + c["group_dropped"]),
                "indiv_drop_fraction": frac(
                    c["indiv_dropped"], c["indiv_completed"] + c["indiv_dropped"]),
                "attach_ms_failure_fraction": frac(
                    c["attach_ms_failures"], c["attach_ms_attempts"]),
                "attach_swmi_failure_fraction": frac(
                    c["attach_swmi_failures"], c["attach_swmi_attempts"]),
                "ho_indiv_failure_fraction": frac(
                    c["ho_indiv_failures"], c["ho_indiv_attempts"]),
                "ho_group_failure_fraction": frac(
                    c["ho_group_failures"], c["ho_group_attempts"]),
                "msg_dws_failure_fraction": frac(
                    c["msg_dws_failures"], c["msg_dws_attempts"]),
                "msg_ms_failure_fraction": frac(
                    c["msg_ms_failures"], c["msg_ms_attempts"]),
                "packet_corrupt_fraction": frac(
                    c["packets_rx_corrupt"], c["packets_rx_ok"] + c["packets_rx_corrupt"]),
            }
            stations[st.cfg.tbs_id] = {"counts": c, "rates": rates}
        return SimTruth(stations)


def simulate(config: SimConfig) -> tuple[list[CounterRecord], SimTruth]:
    """Run one scenario; returns hourly counter records plus the truth log.

    The same config (seed included) always yields bit-identical output.
    """
    return _Simulator(config).run()


def emit_counters(records: list[CounterRecord]) -> bytes:
    """Render simulator output as counter CSV bytes (the exact ingest schema)."""
    return render_counters(records).encode("utf-8")
