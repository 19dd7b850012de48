"""Periodic QoS report assembly and rendering.

Reports aggregate the KPI engine's output per day, ISO week or calendar
month: availability per station, resource indicators at the Busy Hour per
station and day, cluster capacity efficiency, daily worst cases of every
failure-rate KPI, optional threshold verdicts, and worst/mean roll-ups on the
weekly and monthly scales. The JSON rendering carries full precision; the
markdown mirror rounds to three decimals; CSV is a flat table of the same
rows.
"""

from __future__ import annotations

import calendar
import csv
import io
import json
from dataclasses import dataclass, field as dc_field
from datetime import date
from statistics import fmean

from .counters import Cluster, CounterStore, DAY
from .errors import ConfigError, NoData
from . import kpi as K

PERIODS = ("daily", "weekly", "monthly")
FORMATS = ("markdown", "json", "csv")

ROLLUP_MEAN_KPIS = (K.VOICE_OCCUP_BH, K.DATA_OCCUP_BH, K.OCCUP_BH)


@dataclass
class ReportConfig:
    period: str = "daily"
    formats: tuple[str, ...] = ("markdown", "json")
    thresholds: dict[str, float] = dc_field(default_factory=dict)
    rac_threshold: int = K.DEFAULT_RAC_THRESHOLD
    clusters: list[Cluster] = dc_field(default_factory=list)

    def __post_init__(self):
        if self.period not in PERIODS:
            raise ConfigError(f"period must be one of {PERIODS}, got {self.period!r}")
        if not self.formats:
            raise ConfigError("at least one output format is required")
        unknown = [f for f in self.formats if f not in FORMATS]
        if unknown:
            raise ConfigError(f"unknown output formats {unknown}")
        for name in self.thresholds:
            if name not in K.KPI_CATALOGUE:
                raise ConfigError(f"threshold for unknown KPI {name!r}")


def load_thresholds(source: bytes | str) -> dict[str, float]:
    """Parse the thresholds JSON: a flat {kpi_name: target_value} object."""
    text = source.decode("utf-8") if isinstance(source, (bytes, bytearray)) else source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid thresholds JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("thresholds must be a JSON object")
    try:
        return {str(k): float(v) for k, v in doc.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad threshold value: {exc!r}") from None


def _verdict(name: str, value: float, threshold: float) -> str:
    higher_is_better = K.KPI_CATALOGUE[name][2]
    ok = value >= threshold if higher_is_better else value <= threshold
    return "ok" if ok else "breach"


def _apply_verdict(row: dict, thresholds: dict[str, float]) -> dict:
    if thresholds and row["name"] in thresholds and row["defined"]:
        row["verdict"] = _verdict(row["name"], row["value"], thresholds[row["name"]])
    return row


def period_buckets(dates: list[date], kind: str) -> list[tuple[str, list[date]]]:
    """Group dates into report periods, labelled and ordered."""
    if kind == "daily":
        return [(d.isoformat(), [d]) for d in sorted(dates)]
    buckets: dict[str, list[date]] = {}
    for d in sorted(dates):
        if kind == "weekly":
            year, week, _ = d.isocalendar()
            label = f"{year}-W{week:02d}"
        else:
            label = f"{d.year}-{d.month:02d}"
        buckets.setdefault(label, []).append(d)
    return sorted(buckets.items())


def _expected_seconds(kind: str, label: str, dates: list[date]) -> int:
    if kind == "daily":
        return DAY
    if kind == "weekly":
        return 7 * DAY
    year, month = (int(p) for p in label.split("-"))
    return calendar.monthrange(year, month)[1] * DAY


def _undefined_row(name: str, period: str, category: str) -> dict:
    value = K.KpiValue(name, None, K.KPI_CATALOGUE[name][0],
                       K.Scope("network", "all", period), defined=False)
    return value.to_json(category=category)


def build_bucket_report(store: CounterStore, label: str, kind: str,
                        dates: list[date], cfg: ReportConfig) -> dict:
    """One report document for one period bucket."""
    stations = [t for t in store.tbs_ids()
                if any(store.window_query(t, d) for d in dates)]
    if not stations:
        raise NoData(f"no records in period {label}")
    th = cfg.thresholds

    coverage = {}
    expected = _expected_seconds(kind, label, dates)
    for tbs in stations:
        coverage[tbs] = store.covered_seconds(tbs, dates) / expected

    availability_rows = []
    for tbs in stations:
        recs = [r for d in dates for r in store.window_query(tbs, d)]
        covered = sum(r.window_len for r in recs)
        value = K.availability(recs, covered, period=label)
        availability_rows.append(_apply_verdict(
            value.to_json(category=K.CAT_AVAILABILITY), th))

    resource_rows = []
    resource_values: dict[str, list[K.KpiValue]] = {}
    daily_availability: dict[str, list[float]] = {}
    for tbs in stations:
        for d in dates:
            day_recs = store.window_query(tbs, d)
            if not day_recs:
                continue
            covered = sum(r.window_len for r in day_recs)
            daily_availability.setdefault(tbs, []).append(
                K.availability(day_recs, covered, period=d.isoformat()).value)
            bundle = K.resource_kpis(day_recs, rac_threshold=cfg.rac_threshold)
            for row in bundle.to_rows():
                resource_rows.append(_apply_verdict(row, th))
            for v in bundle.values:
                resource_values.setdefault(v.name, []).append(v)

    cluster_rows = []
    bucket_records = [r for tbs in stations for d in dates
                      for r in store.window_query(tbs, d)]
    for cluster in cfg.clusters:
        try:
            value = K.cluster_efficiency(cluster, bucket_records)
            cluster_rows.append(_apply_verdict(
                value.to_json(category=K.CAT_RESOURCE), th))
        except NoData:
            row = K.KpiValue(K.CAPACITY_USE_EFFICIENCY, None, "percent",
                             K.Scope("cluster", cluster.cluster_id, label),
                             defined=False).to_json(category=K.CAT_RESOURCE)
            cluster_rows.append(row)

    worst_rows = []
    worst_by_kpi: dict[str, list[K.KpiValue]] = {}
    for d in dates:
        day_records = [r for tbs in stations for r in store.window_query(tbs, d)]
        for name, (category, _, _) in K.FAILURE_KPIS.items():
            series = K.hourly_failure_values(day_records, name)
            try:
                worst = K.daily_worst_case(series)
                worst_rows.append(_apply_verdict(worst.to_json(category=category), th))
                worst_by_kpi.setdefault(name, []).append(worst)
            except NoData:
                worst_rows.append(_undefined_row(name, d.isoformat(), category))

    doc = {
        "period": label,
        "period_kind": kind,
        "dates": [d.isoformat() for d in dates],
        "stations": stations,
        "coverage": coverage,
        "availability": availability_rows,
        "resource": resource_rows,
        "cluster_efficiency": cluster_rows,
        "worst_cases": worst_rows,
    }

    if kind != "daily":
        rollup_rows = []
        for tbs in stations:
            values = daily_availability.get(tbs)
            if values:
                mean = K.KpiValue(K.AVAILABILITY, fmean(values), "percent",
                                  K.Scope("tbs", tbs, label))
                rollup_rows.append(_apply_verdict(
                    mean.to_json(category=K.CAT_AVAILABILITY), th))
        for name in ROLLUP_MEAN_KPIS:
            per_tbs: dict[str, list[float]] = {}
            for v in resource_values.get(name, ()):
                if v.defined:
                    per_tbs.setdefault(v.scope.entity, []).append(v.value)
            for tbs in sorted(per_tbs):
                mean = K.KpiValue(name, fmean(per_tbs[tbs]), "percent",
                                  K.Scope("tbs", tbs, label))
                rollup_rows.append(_apply_verdict(
                    mean.to_json(category=K.CAT_RESOURCE), th))
        for name, (category, _, _) in K.FAILURE_KPIS.items():
            daily_worsts = worst_by_kpi.get(name)
            if daily_worsts:
                peak = K.daily_worst_case(daily_worsts)
                rollup_rows.append(_apply_verdict(peak.to_json(category=category), th))
            else:
                rollup_rows.append(_undefined_row(name, label, category))
        doc["rollups"] = rollup_rows

    return doc


def build_reports(store: CounterStore, cfg: ReportConfig) -> list[dict]:
    dates = store.dates()
    if not dates:
        raise NoData("store holds no records")
    return [build_bucket_report(store, label, cfg.period, bucket_dates, cfg)
            for label, bucket_dates in period_buckets(dates, cfg.period)]


def kpi_rows(store: CounterStore, tbs_ids: list[str] | None = None,
             dates: list[date] | None = None,
             categories: list[str] | None = None,
             rac_threshold: int = K.DEFAULT_RAC_THRESHOLD) -> list[dict]:
    """Flat KPI rows for the selected stations, dates and categories."""
    sel_tbs = tbs_ids or store.tbs_ids()
    sel_dates = dates or store.dates()
    want = set(categories) if categories else None

    def wanted(cat: str) -> bool:
        return want is None or cat in want

    rows: list[dict] = []
    for tbs in sel_tbs:
        for d in sel_dates:
            day_recs = store.window_query(tbs, d)
            if not day_recs:
                continue
            if wanted(K.CAT_AVAILABILITY):
                covered = sum(r.window_len for r in day_recs)
                rows.append(K.availability(day_recs, covered, period=d.isoformat())
                            .to_json(category=K.CAT_AVAILABILITY))
            if wanted(K.CAT_RESOURCE):
                rows.extend(K.resource_kpis(day_recs, rac_threshold=rac_threshold).to_rows())
            for cat, builder in ((K.CAT_ATTACHMENT, K.attachment_kpis),
                                 (K.CAT_HANDOVER, K.handover_kpis),
                                 (K.CAT_VOICE, K.voice_kpis),
                                 (K.CAT_DATA, K.data_kpis)):
                if wanted(cat):
                    for rec in day_recs:
                        rows.extend(builder(rec).to_rows())
    if not rows:
        raise NoData("no KPI rows match the selection")
    return rows


# -- rendering ----------------------------------------------------------------

def report_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def rows_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=2, sort_keys=True) + "\n"


_CSV_COLUMNS = ("section", "name", "value", "unit", "defined", "scope_kind",
                "scope_entity", "date_or_period", "hour", "category", "bh_hour",
                "exceeds_threshold", "verdict")


def _flat(row: dict, section: str) -> dict:
    scope = row["scope"]
    kind = next(k for k in ("tbs", "cluster", "network") if k in scope)
    return {
        "section": section,
        "name": row["name"],
        "value": "" if row["value"] is None else repr(row["value"]),
        "unit": row["unit"],
        "defined": row["defined"],
        "scope_kind": kind,
        "scope_entity": scope[kind],
        "date_or_period": scope.get("date", scope.get("period", "")),
        "hour": scope.get("hour", ""),
        "category": row.get("category", ""),
        "bh_hour": row.get("bh_hour", ""),
        "exceeds_threshold": row.get("exceeds_threshold", ""),
        "verdict": row.get("verdict", ""),
    }


_SECTIONS = ("availability", "resource", "cluster_efficiency", "worst_cases", "rollups")


def rows_csv(rows: list[dict], section: str = "kpi") -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(_flat(row, section))
    return out.getvalue()


def report_csv(doc: dict) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=("period", "period_kind") + _CSV_COLUMNS,
                            lineterminator="\n")
    writer.writeheader()
    for section in _SECTIONS:
        for row in doc.get(section, ()):
            flat = _flat(row, section)
            flat.update(period=doc["period"], period_kind=doc["period_kind"])
            writer.writerow(flat)
    return out.getvalue()


def _fmt(value, unit: str = "") -> str:
    if value is None:
        return "undef"
    return f"{value:.3f}"


def _md_table(header: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join(" --- " for _ in header) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(str(x) for x in row) + " |")
    lines.append("")
    return lines


def report_markdown(doc: dict) -> str:
    """Markdown mirror of the report document, rounded to 3 decimals."""
    with_verdict = any("verdict" in row for section in _SECTIONS
                       for row in doc.get(section, ()))

    def table(rows: list[dict], cols: list[str]) -> list[list[str]]:
        body = []
        for row in rows:
            flat = _flat(row, "")
            flat["value"] = _fmt(row["value"])
            line = [flat[c] for c in cols]
            if with_verdict:
                line.append(flat["verdict"])
            body.append(line)
        return body

    def header(cols: list[str]) -> list[str]:
        return cols + (["verdict"] if with_verdict else [])

    lines = [f"# QoS report {doc['period']} ({doc['period_kind']})", ""]
    lines += ["stations: " + ", ".join(doc["stations"]),
              "dates: " + ", ".join(doc["dates"]), ""]
    lines += ["## Coverage", ""]
    lines += _md_table(["station", "coverage"],
                       [[tbs, f"{frac:.3f}"] for tbs, frac in sorted(doc["coverage"].items())])
    lines += ["## Availability", ""]
    lines += _md_table(header(["scope_entity", "value"]),
                       table(doc["availability"], ["scope_entity", "value"]))
    lines += ["## Resource indicators (Busy Hour)", ""]
    cols = ["scope_entity", "date_or_period", "bh_hour", "name", "value", "unit"]
    lines += _md_table(header(cols), table(doc["resource"], cols))
    if doc["cluster_efficiency"]:
        lines += ["## Cluster capacity efficiency", ""]
        cols = ["scope_entity", "date_or_period", "value"]
        lines += _md_table(header(cols), table(doc["cluster_efficiency"], cols))
    lines += ["## Daily worst cases", ""]
    cols = ["date_or_period", "name", "value", "scope_entity", "hour"]
    lines += _md_table(header(cols), table(doc["worst_cases"], cols))
    if "rollups" in doc:
        lines += ["## Roll-ups", ""]
        cols = ["name", "value", "scope_entity", "date_or_period", "hour"]
        lines += _md_table(header(cols), table(doc["rollups"], cols))
    return "\n".join(lines)
