"""KPI computation from validated counter records.

Covers the full indicator catalogue: station availability, network-resource
indicators evaluated at the Busy Hour, cluster capacity efficiency, and the
failure-rate families for group attachment, handover, voice service and data
service, plus daily worst-case selection across stations and hours.

Every ratio is computed in floating point from the integer counters; a zero
denominator yields an undefined value (``defined=False``), never an error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Sequence

from .counters import Cluster, CounterRecord, DAY, HOUR
from .errors import ConfigError, NoData

# Bundle categories.
CAT_AVAILABILITY = "availability"
CAT_RESOURCE = "resource"
CAT_ATTACHMENT = "attachment"
CAT_HANDOVER = "handover"
CAT_VOICE = "voice"
CAT_DATA = "data"

# KPI names: snake_case of the indicator titles.
AVAILABILITY = "availability"
VOICE_OCCUP_BH = "voice_occup_bh"
DATA_OCCUP_BH = "data_occup_bh"
OCCUP_BH = "occup_bh"
QUEUING_RATE_BH = "queuing_rate_bh"
MEAN_QUEUING_TIME_BH = "mean_queuing_time_bh"
SIMULT_QUEUED_REQUESTS_PEAK_BH = "simult_queued_requests_peak_bh"
MAX_OCCUP_MCCH_DL = "max_occup_mcch_dl"
MAX_OCCUP_MCCH_UL = "max_occup_mcch_ul"
RANDOM_ACCESS_COLLISIONS_MCCH = "random_access_collisions_mcch"
CAPACITY_USE_EFFICIENCY = "capacity_use_efficiency"
MS_GROUP_ATTACH_FAILURE_RATE = "ms_group_attach_failure_rate"
SWMI_GROUP_ATTACH_FAILURE_RATE = "swmi_group_attach_failure_rate"
INDIV_CALL_HANDOVER_FAILURE_RATE = "indiv_call_handover_failure_rate"
GROUP_CALL_HANDOVER_FAILURE_RATE = "group_call_handover_failure_rate"
GROUP_CALL_SETUP_FAILURE_RATE = "group_call_setup_failure_rate"
INDIV_CALL_SETUP_FAILURE_RATE = "indiv_call_setup_failure_rate"
GROUP_CALL_PROCESS_FAILURE_RATE = "group_call_process_failure_rate"
INDIV_CALL_PROCESS_FAILURE_RATE = "indiv_call_process_failure_rate"
DWS_APP_SENT_FAILURE_RATE = "dws_app_sent_failure_rate"
MS_SENT_FAILURE_RATE = "ms_sent_failure_rate"
PACKETS_FAILURE_RATE = "packets_failure_rate"

# The per-hour failure-rate KPIs subject to daily worst-case selection,
# with (category, numerator counter, denominator counters).
FAILURE_KPIS: dict[str, tuple[str, str, tuple[str, ...]]] = {
    MS_GROUP_ATTACH_FAILURE_RATE: (CAT_ATTACHMENT, "ugau", ("gau",)),
    SWMI_GROUP_ATTACH_FAILURE_RATE: (CAT_ATTACHMENT, "ugas", ("gas",)),
    INDIV_CALL_HANDOVER_FAILURE_RATE: (CAT_HANDOVER, "uich", ("ich",)),
    GROUP_CALL_HANDOVER_FAILURE_RATE: (CAT_HANDOVER, "ugch", ("gch",)),
    GROUP_CALL_SETUP_FAILURE_RATE: (CAT_VOICE, "upgc", ("spgc", "upgc")),
    INDIV_CALL_SETUP_FAILURE_RATE: (CAT_VOICE, "upic", ("spic", "upic")),
    GROUP_CALL_PROCESS_FAILURE_RATE: (CAT_VOICE, "uegc", ("segc", "uegc")),
    INDIV_CALL_PROCESS_FAILURE_RATE: (CAT_VOICE, "ueic", ("seic", "ueic")),
    DWS_APP_SENT_FAILURE_RATE: (CAT_DATA, "udam", ("dam",)),
    MS_SENT_FAILURE_RATE: (CAT_DATA, "uum", ("um",)),
    PACKETS_FAILURE_RATE: (CAT_DATA, "crp", ("srp", "crp")),
}

# name -> (unit, category, higher_is_better); drives threshold verdicts and
# achieved-vector binding.
KPI_CATALOGUE: dict[str, tuple[str, str, bool]] = {
    AVAILABILITY: ("percent", CAT_AVAILABILITY, True),
    VOICE_OCCUP_BH: ("percent", CAT_RESOURCE, False),
    DATA_OCCUP_BH: ("percent", CAT_RESOURCE, False),
    OCCUP_BH: ("percent", CAT_RESOURCE, False),
    QUEUING_RATE_BH: ("percent", CAT_RESOURCE, False),
    MEAN_QUEUING_TIME_BH: ("seconds", CAT_RESOURCE, False),
    SIMULT_QUEUED_REQUESTS_PEAK_BH: ("count", CAT_RESOURCE, False),
    MAX_OCCUP_MCCH_DL: ("percent", CAT_RESOURCE, False),
    MAX_OCCUP_MCCH_UL: ("percent", CAT_RESOURCE, False),
    RANDOM_ACCESS_COLLISIONS_MCCH: ("count", CAT_RESOURCE, False),
    CAPACITY_USE_EFFICIENCY: ("percent", CAT_RESOURCE, True),
    **{name: ("percent", cat, False) for name, (cat, _, _) in FAILURE_KPIS.items()},
}

DEFAULT_RAC_THRESHOLD = 10


@dataclass(frozen=True)
class Scope:
    """What a KPI value refers to: a station, cluster or the whole network,
    over a date or period, optionally pinned to one hour of the day."""

    kind: str            # "tbs" | "cluster" | "network"
    entity: str
    period: str          # "YYYY-MM-DD", "YYYY-MM-DD..YYYY-MM-DD", "YYYY-Wnn", "YYYY-MM"
    hour: int | None = None

    def to_json(self) -> dict:
        key = "date" if len(self.period) == 10 and self.period[4] == "-" else "period"
        out: dict[str, object] = {self.kind: self.entity, key: self.period}
        if self.hour is not None:
            out["hour"] = self.hour
        return out


@dataclass(frozen=True)
class KpiValue:
    """One computed indicator value.

    ``value`` is ``None`` exactly when ``defined`` is false (the denominator
    was zero). Defined percent values always lie in [0, 100].
    """

    name: str
    value: float | None
    unit: str                    # "percent" | "seconds" | "count"
    scope: Scope
    defined: bool = True
    exceeds_threshold: bool | None = None   # random-access collisions only

    def __post_init__(self):
        if self.defined:
            if self.value is None or self.value < 0:
                raise ValueError(f"{self.name}: defined KPI needs a non-negative value")
            if self.unit == "percent" and self.value > 100.0:
                raise ValueError(f"{self.name}: percent value {self.value} above 100")
        elif self.value is not None:
            raise ValueError(f"{self.name}: undefined KPI must carry no value")

    def to_json(self, category: str | None = None, bh_hour: int | None = None) -> dict:
        out: dict[str, object] = {
            "name": self.name,
            "value": self.value,
            "unit": self.unit,
            "defined": self.defined,
            "scope": self.scope.to_json(),
        }
        if category is not None:
            out["category"] = category
        if bh_hour is not None:
            out["bh_hour"] = bh_hour
        if self.exceeds_threshold is not None:
            out["exceeds_threshold"] = self.exceeds_threshold
        return out


@dataclass
class KpiBundle:
    """Computed indicators of one category for one scope."""

    category: str
    values: list[KpiValue]
    coverage: float = 1.0
    bh_hour: int | None = None   # set iff category == "resource"

    def __post_init__(self):
        if (self.bh_hour is not None) != (self.category == CAT_RESOURCE):
            raise ValueError("bh_hour is set exactly for resource bundles")
        if not (0.0 <= self.coverage <= 1.0):
            raise ValueError(f"coverage {self.coverage} outside [0, 1]")

    def to_rows(self) -> list[dict]:
        return [v.to_json(category=self.category, bh_hour=self.bh_hour) for v in self.values]


def _ratio(name: str, num: int, den: int, scope: Scope, unit: str = "percent") -> KpiValue:
    if den == 0:
        return KpiValue(name, None, unit, scope, defined=False)
    value = num * 100 / den if unit == "percent" else num / den
    return KpiValue(name, value, unit, scope, defined=True)


def _traffic(rec: CounterRecord) -> int:
    return rec.counters.traffic()


def busy_hour(day_records: Sequence[CounterRecord]) -> tuple[int, CounterRecord]:
    """Pick the Busy Hour of a day: the hour with the highest voice plus
    packet traffic volume; the earliest hour wins ties."""
    if not day_records:
        raise NoData("busy_hour: no records")
    best: CounterRecord | None = None
    for rec in sorted(day_records, key=lambda r: r.window_start):
        if best is None or _traffic(rec) > _traffic(best):
            best = rec
    return best.hour, best


def availability(records: Sequence[CounterRecord], period_len: int,
                 period: str | None = None) -> KpiValue:
    """Percentage of ``period_len`` seconds the station was in service."""
    if period_len <= 0:
        raise NoData("availability: period length must be positive")
    total = sum(r.counters.service_time for r in records)
    scope = Scope("tbs", records[0].tbs_id if records else "", period or _span_label(records))
    return KpiValue(AVAILABILITY, total * 100 / period_len, "percent", scope)


def _span_label(records: Sequence[CounterRecord]) -> str:
    if not records:
        return ""
    days = sorted({r.day for r in records})
    return days[0].isoformat() if len(days) == 1 else f"{days[0].isoformat()}..{days[-1].isoformat()}"


def _argmax_earliest(records: Sequence[CounterRecord], field_name: str) -> CounterRecord:
    best = None
    for rec in sorted(records, key=lambda r: r.window_start):
        if best is None or getattr(rec.counters, field_name) > getattr(best.counters, field_name):
            best = rec
    return best


def resource_kpis(day_records: Sequence[CounterRecord],
                  rac_threshold: int = DEFAULT_RAC_THRESHOLD) -> KpiBundle:
    """Network-resource indicators of one station for one day.

    Occupancies, queuing rate, mean queuing time and the queued-requests peak
    are read at the Busy Hour record; the control-channel occupancies at the
    hour where their own used-semislot counter peaks; random-access
    collisions as the daily sum, flagged against ``rac_threshold``.
    """
    if not day_records:
        raise NoData("resource_kpis: no records")
    bh_idx, bh = busy_hour(day_records)
    tbs = bh.tbs_id
    day_label = bh.day.isoformat()
    bh_scope = Scope("tbs", tbs, day_label, hour=bh_idx)
    c = bh.counters

    voice = _ratio(VOICE_OCCUP_BH, c.gcbt + c.icbt, c.pc, bh_scope)
    total = _ratio(OCCUP_BH, c.traffic(), c.pc, bh_scope)
    if total.defined:
        # Derived as a difference so that voice + data == total holds exactly
        # in floating point; both terms stay within [0, 100].
        data = KpiValue(DATA_OCCUP_BH, total.value - voice.value, "percent", bh_scope)
    else:
        data = KpiValue(DATA_OCCUP_BH, None, "percent", bh_scope, defined=False)

    queuing_rate = _ratio(QUEUING_RATE_BH, c.qcrr, c.crr, bh_scope)
    mean_queuing = _ratio(MEAN_QUEUING_TIME_BH, c.qwt, c.qcrr, bh_scope, unit="seconds")
    psqr_peak = KpiValue(SIMULT_QUEUED_REQUESTS_PEAK_BH, float(c.psqr), "count", bh_scope)

    dl_rec = _argmax_earliest(day_records, "dus")
    dl_scope = Scope("tbs", tbs, day_label, hour=dl_rec.hour)
    mcch_dl = _ratio(MAX_OCCUP_MCCH_DL, dl_rec.counters.dus, dl_rec.counters.dss, dl_scope)
    ul_rec = _argmax_earliest(day_records, "uus")
    ul_scope = Scope("tbs", tbs, day_label, hour=ul_rec.hour)
    mcch_ul = _ratio(MAX_OCCUP_MCCH_UL, ul_rec.counters.uus, ul_rec.counters.urs, ul_scope)

    rac_total = sum(r.counters.rac for r in day_records)
    rac = KpiValue(
        RANDOM_ACCESS_COLLISIONS_MCCH, float(rac_total), "count",
        Scope("tbs", tbs, day_label),
        exceeds_threshold=rac_total > rac_threshold,
    )

    coverage = min(1.0, sum(r.window_len for r in day_records) / DAY)
    return KpiBundle(
        CAT_RESOURCE,
        [voice, data, total, queuing_rate, mean_queuing, psqr_peak, mcch_dl, mcch_ul, rac],
        coverage=coverage,
        bh_hour=bh_idx,
    )


def cluster_efficiency(cluster: Cluster, records: Iterable[CounterRecord],
                       strict: bool = False) -> KpiValue:
    """Capacity-use efficiency of a cluster over the measurement period.

    Theoretical traffic is one hour of every member's traffic channels;
    real traffic is each member's Busy Hour traffic volume averaged over its
    observed days, summed across members.
    """
    member_ids = cluster.member_ids()
    by_member_day: dict[str, dict[date, list[CounterRecord]]] = {}
    all_days: set[date] = set()
    for rec in records:
        if rec.tbs_id not in member_ids:
            if strict:
                raise ConfigError(
                    f"record for {rec.tbs_id!r} not in cluster {cluster.cluster_id!r}"
                )
            continue
        by_member_day.setdefault(rec.tbs_id, {}).setdefault(rec.day, []).append(rec)
        all_days.add(rec.day)

    real = 0.0
    for member in cluster.members:
        days = by_member_day.get(member.tbs_id)
        if not days:
            raise NoData(
                f"cluster {cluster.cluster_id!r}: no records for member {member.tbs_id!r}"
            )
        bh_traffic = [_traffic(busy_hour(day_recs)[1]) for _, day_recs in sorted(days.items())]
        real += sum(bh_traffic) / len(bh_traffic)
    theoric = sum(m.tch_count * HOUR for m in cluster.members)

    value = real * 100 / theoric
    if value > 100.0:
        raise ConfigError(
            f"cluster {cluster.cluster_id!r}: observed traffic exceeds the configured "
            f"capacity ({value:.3f}%); check the members' tch_count"
        )
    days_sorted = sorted(all_days)
    period = (days_sorted[0].isoformat() if len(days_sorted) == 1
              else f"{days_sorted[0].isoformat()}..{days_sorted[-1].isoformat()}")
    return KpiValue(CAPACITY_USE_EFFICIENCY, value, "percent",
                    Scope("cluster", cluster.cluster_id, period))


def _record_scope(record: CounterRecord) -> Scope:
    return Scope("tbs", record.tbs_id, record.day.isoformat(), hour=record.hour)


def _record_bundle(record: CounterRecord, category: str, names: Sequence[str]) -> KpiBundle:
    scope = _record_scope(record)
    c = record.counters
    values = []
    for name in names:
        _, num_field, den_fields = FAILURE_KPIS[name]
        num = getattr(c, num_field)
        den = sum(getattr(c, f) for f in den_fields)
        values.append(_ratio(name, num, den, scope))
    return KpiBundle(category, values, coverage=min(1.0, record.window_len / HOUR))


def attachment_kpis(record: CounterRecord) -> KpiBundle:
    """Group-attachment failure rates (subscriber- and system-initiated)."""
    return _record_bundle(record, CAT_ATTACHMENT,
                          (MS_GROUP_ATTACH_FAILURE_RATE, SWMI_GROUP_ATTACH_FAILURE_RATE))


def handover_kpis(record: CounterRecord) -> KpiBundle:
    """Handover failure rates during individual and group calls."""
    return _record_bundle(record, CAT_HANDOVER,
                          (INDIV_CALL_HANDOVER_FAILURE_RATE, GROUP_CALL_HANDOVER_FAILURE_RATE))


def voice_kpis(record: CounterRecord) -> KpiBundle:
    """Call set-up and call-processing failure rates, group and individual."""
    return _record_bundle(record, CAT_VOICE,
                          (GROUP_CALL_SETUP_FAILURE_RATE, INDIV_CALL_SETUP_FAILURE_RATE,
                           GROUP_CALL_PROCESS_FAILURE_RATE, INDIV_CALL_PROCESS_FAILURE_RATE))


def data_kpis(record: CounterRecord) -> KpiBundle:
    """Message-delivery and packet-transmission failure rates."""
    return _record_bundle(record, CAT_DATA,
                          (DWS_APP_SENT_FAILURE_RATE, MS_SENT_FAILURE_RATE,
                           PACKETS_FAILURE_RATE))


def daily_worst_case(kpi_series: Iterable[KpiValue]) -> KpiValue:
    """The highest defined value of one KPI across stations and hours.

    Undefined values are skipped: a station with no attempts cannot be the
    worst case. Ties break by earliest hour, then lexicographic station id.
    """
    defined = [v for v in kpi_series if v.defined]
    if not defined:
        raise NoData("daily_worst_case: no defined values")
    names = {v.name for v in defined}
    if len(names) > 1:
        raise ValueError(f"daily_worst_case: mixed KPI names {sorted(names)}")
    peak = max(v.value for v in defined)
    ties = [v for v in defined if v.value == peak]
    return min(ties, key=lambda v: (v.scope.hour is None, v.scope.hour or 0, v.scope.entity))


_CATEGORY_BUILDERS = {
    CAT_ATTACHMENT: attachment_kpis,
    CAT_HANDOVER: handover_kpis,
    CAT_VOICE: voice_kpis,
    CAT_DATA: data_kpis,
}


def hourly_failure_values(records: Iterable[CounterRecord], name: str) -> list[KpiValue]:
    """One KPI evaluated on every record, for worst-case selection."""
    category = FAILURE_KPIS[name][0]
    builder = _CATEGORY_BUILDERS[category]
    out = []
    for rec in records:
        for v in builder(rec).values:
            if v.name == name:
                out.append(v)
    return out
