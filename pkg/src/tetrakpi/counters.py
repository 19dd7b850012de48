"""Per-station event counter records: parsing, validation and storage.

A :class:`CounterRecord` is one observation window of one base station. The
on-disk format is a flat CSV (or a JSON array-of-objects mirror) with one row
per window; :class:`CounterStore` collects validated records at hour
granularity and answers per-day queries for the KPI engine.

Conventions (documented, not negotiable downstream):

- all time counters are integer seconds; busy-time and capacity counters are
  integer channel-seconds,
- timestamps are zone-naive local network time,
- windows shorter than an hour are accepted and aggregated into their clock
  hour on ingest (counts and times sum, the queued-requests peak takes the
  max); missing hours stay missing rather than being zero-filled.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields, replace
from datetime import date, datetime, timedelta
from typing import Iterable, Iterator

from .errors import (
    ConfigError,
    DuplicateWindow,
    InvariantViolation,
    MalformedRow,
    UnknownColumn,
)

HOUR = 3600
DAY = 86400

# Canonical column order of the counter CSV. The first three columns identify
# the observation window; the remainder are the CounterSet fields.
CSV_HEADER = (
    "tbs_id", "window_start", "window_len",
    "service_time", "gcbt", "icbt", "pmbt", "pc",
    "crr", "qcrr", "qwt", "psqr",
    "dss", "dus", "urs", "uus", "rac",
    "gau", "ugau", "gas", "ugas",
    "ich", "uich", "gch", "ugch",
    "spgc", "upgc", "spic", "upic",
    "segc", "uegc", "seic", "ueic",
    "dam", "udam", "um", "uum", "srp", "crp",
)

COUNTER_FIELDS = CSV_HEADER[3:]

# Counters that can never exceed the pool they are drawn from.
CAPPED_PAIRS = (
    ("qcrr", "crr"),
    ("dus", "dss"),
    ("uus", "urs"),
    ("ugau", "gau"),
    ("ugas", "gas"),
    ("uich", "ich"),
    ("ugch", "gch"),
    ("udam", "dam"),
    ("uum", "um"),
)

# Counters that aggregate by max when sub-hour windows are merged; everything
# else sums. PSQR is a peak, not a volume.
_PEAK_FIELDS = frozenset({"psqr"})


@dataclass(frozen=True)
class CounterSet:
    """Event counters of one station for one observation window.

    ``service_time``, ``qwt`` are seconds; ``gcbt``/``icbt``/``pmbt``/``pc``
    are channel-seconds; all remaining fields are event counts.
    """

    service_time: int = 0
    gcbt: int = 0   # group-calls busy time
    icbt: int = 0   # individual-calls busy time
    pmbt: int = 0   # packet-mode busy time
    pc: int = 0     # provided capacity
    crr: int = 0    # channel reservation requests
    qcrr: int = 0   # queued channel reservation requests
    qwt: int = 0    # total queuing waiting time
    psqr: int = 0   # peak of simultaneously queued requests
    dss: int = 0    # downlink MCCH sent semislots
    dus: int = 0    # downlink MCCH used semislots
    urs: int = 0    # uplink MCCH reserved semislots
    uus: int = 0    # uplink MCCH used semislots
    rac: int = 0    # random access collisions
    gau: int = 0    # group attachments, user initiated
    ugau: int = 0   # unsuccessful group attachments, user initiated
    gas: int = 0    # group attachments, system initiated
    ugas: int = 0   # unsuccessful group attachments, system initiated
    ich: int = 0    # individual call handovers
    uich: int = 0   # unsuccessful individual call handovers
    gch: int = 0    # group call handovers
    ugch: int = 0   # unsuccessful group call handovers
    spgc: int = 0   # successful placed group calls
    upgc: int = 0   # unsuccessful placed group calls
    spic: int = 0   # successful placed individual calls
    upic: int = 0   # unsuccessful placed individual calls
    segc: int = 0   # successful ended group calls
    uegc: int = 0   # unsuccessful ended group calls
    seic: int = 0   # successful ended individual calls
    ueic: int = 0   # unsuccessful ended individual calls
    dam: int = 0    # messages sent by dispatchers/applications
    udam: int = 0   # non-delivered dispatcher/application messages
    um: int = 0     # messages sent by subscribers
    uum: int = 0    # non-delivered subscriber messages
    srp: int = 0    # successfully received packets
    crp: int = 0    # corrupt received packets

    def traffic(self) -> int:
        """Total voice plus packet-mode busy time (channel-seconds)."""
        return self.gcbt + self.icbt + self.pmbt


assert tuple(f.name for f in fields(CounterSet)) == COUNTER_FIELDS


@dataclass(frozen=True)
class CounterRecord:
    """One station's counter snapshot for one observation window."""

    tbs_id: str
    window_start: datetime
    window_len: int = HOUR
    counters: CounterSet = CounterSet()

    @property
    def day(self) -> date:
        return self.window_start.date()

    @property
    def hour(self) -> int:
        return self.window_start.hour


@dataclass(frozen=True)
class ClusterMember:
    tbs_id: str
    tch_count: int


@dataclass(frozen=True)
class Cluster:
    """A named set of stations with their traffic-channel counts."""

    cluster_id: str
    members: tuple[ClusterMember, ...]

    def __post_init__(self):
        if not self.members:
            raise ConfigError(f"cluster {self.cluster_id!r} has no members")
        seen = set()
        for m in self.members:
            if m.tch_count < 1:
                raise ConfigError(
                    f"cluster {self.cluster_id!r}: {m.tbs_id!r} has tch_count {m.tch_count}"
                )
            if m.tbs_id in seen:
                raise ConfigError(f"cluster {self.cluster_id!r}: duplicate member {m.tbs_id!r}")
            seen.add(m.tbs_id)

    def member_ids(self) -> frozenset[str]:
        return frozenset(m.tbs_id for m in self.members)


def validate(record: CounterRecord) -> CounterRecord:
    """Return ``record`` unchanged iff every counter invariant holds.

    Raises :class:`InvariantViolation` naming the first violated field.
    Pure and idempotent.
    """
    ws = record.window_start
    if ws.tzinfo is not None:
        raise InvariantViolation("window_start", "timestamps must be zone-naive")
    if ws.microsecond != 0:
        raise InvariantViolation("window_start", "timestamps must be whole seconds")
    if not isinstance(record.window_len, int) or record.window_len <= 0:
        raise InvariantViolation("window_len", f"must be a positive integer, got {record.window_len!r}")
    if record.window_len > HOUR:
        raise InvariantViolation("window_len", "windows longer than one hour cannot be bucketed")
    if record.window_len == HOUR and (ws.minute, ws.second) != (0, 0):
        raise InvariantViolation("window_start", "hourly windows must start on the clock hour")
    if record.window_len < HOUR:
        end = ws + timedelta(seconds=record.window_len)
        hour_end = ws.replace(minute=0, second=0) + timedelta(hours=1)
        if end > hour_end:
            raise InvariantViolation("window_len", "sub-hour window crosses an hour boundary")

    c = record.counters
    for name in COUNTER_FIELDS:
        v = getattr(c, name)
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise InvariantViolation(name, f"counters must be non-negative integers, got {v!r}")
    if c.traffic() > c.pc:
        raise InvariantViolation("pc", "gcbt+icbt+pmbt exceeds provided capacity")
    for counted, pool in CAPPED_PAIRS:
        if getattr(c, counted) > getattr(c, pool):
            raise InvariantViolation(counted, f"{counted} exceeds {pool}")
    if c.service_time > record.window_len:
        raise InvariantViolation("service_time", "service time exceeds window length")
    return record


def _parse_int(name: str, value: str, line: int) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise MalformedRow(line, f"non-numeric value for {name}: {value!r}") from None


def _parse_timestamp(value: str, line: int) -> datetime:
    try:
        ts = datetime.fromisoformat(value)
    except (TypeError, ValueError):
        raise MalformedRow(line, f"bad timestamp {value!r}") from None
    if ts.tzinfo is not None:
        raise MalformedRow(line, f"timestamp {value!r} carries a zone offset")
    return ts


def _record_from_mapping(row: dict[str, object], line: int) -> CounterRecord:
    tbs_id = str(row["tbs_id"])
    if not tbs_id:
        raise MalformedRow(line, "empty tbs_id")
    start = row["window_start"]
    if not isinstance(start, str):
        raise MalformedRow(line, f"window_start must be an ISO string, got {start!r}")
    window_start = _parse_timestamp(start, line)
    ints = {}
    for name in ("window_len",) + COUNTER_FIELDS:
        v = row[name]
        if isinstance(v, bool) or not isinstance(v, (int, str)):
            raise MalformedRow(line, f"non-numeric value for {name}: {v!r}")
        ints[name] = _parse_int(name, str(v), line) if isinstance(v, str) else v
    counters = CounterSet(**{name: ints[name] for name in COUNTER_FIELDS})
    return CounterRecord(tbs_id, window_start, ints["window_len"], counters)


def parse_counters(source: bytes | str) -> list[CounterRecord]:
    """Parse counter CSV text into records, preserving row order.

    The header must match :data:`CSV_HEADER` exactly (``UnknownColumn``
    otherwise); a row with the wrong column count or a non-numeric field
    raises ``MalformedRow`` with its 1-based line number. No invariant
    checking happens here; run :func:`validate` on each record.
    """
    text = source.decode("utf-8") if isinstance(source, (bytes, bytearray)) else source
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise UnknownColumn("empty input: missing header row")
    header = tuple(rows[0])
    if header != CSV_HEADER:
        unexpected = [c for c in header if c not in CSV_HEADER]
        missing = [c for c in CSV_HEADER if c not in header]
        raise UnknownColumn(
            f"header mismatch (unexpected: {unexpected or '-'}, missing: {missing or '-'})"
        )
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue  # blank line
        if len(row) != len(CSV_HEADER):
            raise MalformedRow(lineno, f"expected {len(CSV_HEADER)} columns, got {len(row)}")
        records.append(_record_from_mapping(dict(zip(CSV_HEADER, row)), lineno))
    return records


def parse_counters_json(source: bytes | str) -> list[CounterRecord]:
    """Parse the JSON array-of-objects mirror of the counter CSV."""
    text = source.decode("utf-8") if isinstance(source, (bytes, bytearray)) else source
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedRow(exc.lineno, f"invalid JSON: {exc.msg}") from None
    if not isinstance(data, list):
        raise UnknownColumn("counter JSON must be an array of objects")
    records = []
    for i, row in enumerate(data, start=1):
        if not isinstance(row, dict):
            raise MalformedRow(i, "array element is not an object")
        keys = set(row)
        if keys != set(CSV_HEADER):
            unexpected = sorted(keys - set(CSV_HEADER))
            missing = sorted(set(CSV_HEADER) - keys)
            raise UnknownColumn(
                f"object {i}: field mismatch (unexpected: {unexpected or '-'}, missing: {missing or '-'})"
            )
        records.append(_record_from_mapping(row, i))
    return records


def load_counters(source: bytes | str) -> list[CounterRecord]:
    """Parse counter data in either accepted format (CSV or JSON mirror)."""
    text = source.decode("utf-8") if isinstance(source, (bytes, bytearray)) else source
    if text.lstrip()[:1] == "[":
        return parse_counters_json(text)
    return parse_counters(text)


def render_counters(records: Iterable[CounterRecord]) -> str:
    """Render records as counter CSV text; inverse of :func:`parse_counters`."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        row = [rec.tbs_id, rec.window_start.isoformat(), rec.window_len]
        row.extend(getattr(rec.counters, name) for name in COUNTER_FIELDS)
        writer.writerow(row)
    return out.getvalue()


def records_to_json(records: Iterable[CounterRecord]) -> str:
    """Render records in the JSON array-of-objects mirror format."""
    rows = []
    for rec in records:
        row: dict[str, object] = {
            "tbs_id": rec.tbs_id,
            "window_start": rec.window_start.isoformat(),
            "window_len": rec.window_len,
        }
        row.update(asdict(rec.counters))
        rows.append(row)
    return json.dumps(rows, indent=2, sort_keys=True)


def _merge_counts(a: CounterSet, b: CounterSet) -> CounterSet:
    merged = {}
    for name in COUNTER_FIELDS:
        if name in _PEAK_FIELDS:
            merged[name] = max(getattr(a, name), getattr(b, name))
        else:
            merged[name] = getattr(a, name) + getattr(b, name)
    return CounterSet(**merged)


class CounterStore:
    """Hour-bucketed collection of validated counter records.

    Ingestion is a single-writer phase: :meth:`add` validates, rejects
    overlapping windows and folds sub-hour windows into their clock hour.
    Afterwards, queries are read-only and safe from any number of readers.
    """

    def __init__(self):
        self._buckets: dict[tuple[str, datetime], CounterRecord] = {}
        # Observation spans per bucket, used to detect overlapping ingests.
        self._spans: dict[tuple[str, datetime], list[tuple[datetime, datetime]]] = {}

    def __len__(self) -> int:
        return len(self._buckets)

    def add(self, record: CounterRecord) -> None:
        validate(record)
        bucket_start = record.window_start.replace(minute=0, second=0)
        key = (record.tbs_id, bucket_start)
        span = (record.window_start, record.window_start + timedelta(seconds=record.window_len))
        for s, e in self._spans.get(key, ()):
            if span[0] < e and s < span[1]:
                raise DuplicateWindow(record.tbs_id, record.window_start)
        existing = self._buckets.get(key)
        if existing is None:
            merged = replace(record, window_start=bucket_start)
        else:
            merged = CounterRecord(
                record.tbs_id,
                bucket_start,
                existing.window_len + record.window_len,
                _merge_counts(existing.counters, record.counters),
            )
        self._buckets[key] = merged
        self._spans.setdefault(key, []).append(span)

    def extend(self, records: Iterable[CounterRecord]) -> None:
        for rec in records:
            self.add(rec)

    def records(self) -> list[CounterRecord]:
        """All hourly records, sorted by (tbs_id, window_start)."""
        return [self._buckets[k] for k in sorted(self._buckets)]

    def __iter__(self) -> Iterator[CounterRecord]:
        return iter(self.records())

    def tbs_ids(self) -> list[str]:
        return sorted({tbs for tbs, _ in self._buckets})

    def dates(self) -> list[date]:
        return sorted({start.date() for _, start in self._buckets})

    def dates_for(self, tbs_id: str) -> list[date]:
        return sorted({start.date() for tbs, start in self._buckets if tbs == tbs_id})

    def window_query(self, tbs_id: str, day: date) -> list[CounterRecord]:
        """Hourly records of ``tbs_id`` within [00:00, 24:00) of ``day``, ascending."""
        day_start = datetime(day.year, day.month, day.day)
        day_end = day_start + timedelta(days=1)
        keys = sorted(
            k for k in self._buckets
            if k[0] == tbs_id and day_start <= k[1] < day_end
        )
        return [self._buckets[k] for k in keys]

    def coverage(self, tbs_id: str, day: date) -> float:
        """Fraction of the day covered by observation windows."""
        return sum(r.window_len for r in self.window_query(tbs_id, day)) / DAY

    def covered_seconds(self, tbs_id: str, days: Iterable[date]) -> int:
        return sum(
            r.window_len for d in days for r in self.window_query(tbs_id, d)
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(render_counters(self.records()))

    @classmethod
    def from_records(cls, records: Iterable[CounterRecord]) -> "CounterStore":
        store = cls()
        store.extend(records)
        return store

    @classmethod
    def load(cls, path) -> "CounterStore":
        with open(path, "rb") as fh:
            return cls.from_records(load_counters(fh.read()))


def load_clusters(source: bytes | str) -> list[Cluster]:
    """Parse the cluster configuration JSON document."""
    text = source.decode("utf-8") if isinstance(source, (bytes, bytearray)) else source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid cluster JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("clusters"), list):
        raise ConfigError('cluster config must be {"clusters": [...]}')
    clusters = []
    seen_ids = set()
    for entry in doc["clusters"]:
        if not isinstance(entry, dict):
            raise ConfigError("cluster entries must be objects")
        try:
            cid = str(entry["cluster_id"])
            members = tuple(
                ClusterMember(str(m["tbs_id"]), int(m["tch_count"]))
                for m in entry["members"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad cluster entry: {exc!r}") from None
        if cid in seen_ids:
            raise ConfigError(f"duplicate cluster_id {cid!r}")
        seen_ids.add(cid)
        clusters.append(Cluster(cid, members))
    return clusters


def load_clusters_file(path) -> list[Cluster]:
    with open(path, "rb") as fh:
        return load_clusters(fh.read())
