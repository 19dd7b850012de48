"""Four-perspective QoS model.

Organizations state requirements (and later perceptions) as an N x L matrix
of levels; a configurable mapping translates either matrix into the common
M-dimensional KPI space, where the required, planned, achieved and perceived
vectors can be compared. Convergence is quantified as the largest absolute
step along the required -> planned -> achieved -> perceived chain.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from statistics import fmean
from typing import Iterable

from .errors import ConfigError, DimensionMismatch
from .kpi import KPI_CATALOGUE, KpiValue

ROLE_REQUIRED = "required"
ROLE_PLANNED = "planned"
ROLE_ACHIEVED = "achieved"
ROLE_PERCEIVED = "perceived"
ROLES = (ROLE_REQUIRED, ROLE_PLANNED, ROLE_ACHIEVED, ROLE_PERCEIVED)

MODE_WEIGHTED_MEAN = "weighted_mean"
MODE_MAX = "max"
MODE_MIN = "min"
_MODES = (MODE_WEIGHTED_MEAN, MODE_MAX, MODE_MIN)

_WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class QosMatrix:
    """Requirement or perception levels: one row per organization, one
    column per criterion."""

    kind: str                                 # "required" | "perceived"
    entries: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if self.kind not in (ROLE_REQUIRED, ROLE_PERCEIVED):
            raise ConfigError(f"matrix kind must be required|perceived, got {self.kind!r}")
        if not self.entries or not self.entries[0]:
            raise ConfigError("matrix needs at least one organization and one criterion")
        width = len(self.entries[0])
        for row in self.entries:
            if len(row) != width:
                raise ConfigError("matrix rows have unequal lengths")
            for x in row:
                if not math.isfinite(x):
                    raise ConfigError(f"matrix entries must be finite, got {x!r}")

    @property
    def n_orgs(self) -> int:
        return len(self.entries)

    @property
    def n_criteria(self) -> int:
        return len(self.entries[0])

    def flat(self) -> tuple[float, ...]:
        """Entries flattened row-major (organization by organization)."""
        return tuple(x for row in self.entries for x in row)


@dataclass(frozen=True)
class MappingRow:
    kpi: str
    mode: str
    weights: tuple[float, ...]

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ConfigError(f"{self.kpi}: unknown aggregation mode {self.mode!r}")
        if not self.weights or all(w == 0 for w in self.weights):
            raise ConfigError(f"{self.kpi}: mapping row needs at least one nonzero weight")
        for w in self.weights:
            if not math.isfinite(w) or w < 0:
                raise ConfigError(f"{self.kpi}: weights must be finite and non-negative")
        if self.mode == MODE_WEIGHTED_MEAN:
            total = math.fsum(self.weights)
            if abs(total - 1.0) > _WEIGHT_SUM_TOL:
                raise ConfigError(f"{self.kpi}: weighted-mean weights sum to {total}, not 1")


@dataclass(frozen=True)
class BindingRule:
    """How one achieved-vector entry is drawn from KPI engine output."""

    key: str
    kpi: str                 # KPI name in the engine catalogue
    aggregate: str = "worst"  # "worst" | "mean"

    def __post_init__(self):
        if self.kpi not in KPI_CATALOGUE:
            raise ConfigError(f"binding {self.key!r}: unknown KPI {self.kpi!r}")
        if self.aggregate not in ("worst", "mean"):
            raise ConfigError(f"binding {self.key!r}: aggregate must be worst|mean")


@dataclass(frozen=True)
class MappingSpec:
    """The translation from organization criteria into KPI space, plus the
    sidecar binding that produces the achieved vector from engine output."""

    rows: tuple[MappingRow, ...]
    binding: tuple[BindingRule, ...] = ()

    def __post_init__(self):
        if not self.rows:
            raise ConfigError("mapping needs at least one KPI row")
        width = len(self.rows[0].weights)
        for row in self.rows:
            if len(row.weights) != width:
                raise ConfigError("mapping rows have unequal weight counts")
        if len({r.kpi for r in self.rows}) != len(self.rows):
            raise ConfigError("duplicate KPI keys in mapping rows")

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n_columns(self) -> int:
        return len(self.rows[0].weights)

    def keys(self) -> tuple[str, ...]:
        return tuple(r.kpi for r in self.rows)


@dataclass(frozen=True)
class KpiVector:
    """A point in KPI space for one of the four QoS perspectives."""

    role: str
    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigError(f"unknown perspective role {self.role!r}")
        if len({k for k, _ in self.entries}) != len(self.entries):
            raise ConfigError("duplicate KPI keys in vector")

    @classmethod
    def from_dict(cls, role: str, entries: dict[str, float]) -> "KpiVector":
        return cls(role, tuple(entries.items()))

    def as_dict(self) -> dict[str, float]:
        return dict(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        return json.dumps({"role": self.role, "entries": self.as_dict()},
                          indent=2, sort_keys=True)


def map_requirements(matrix: QosMatrix, spec: MappingSpec) -> KpiVector:
    """Translate a requirement/perception matrix into KPI space.

    Each mapping row aggregates the row-major flattened matrix: weighted mean
    over all columns, or max/min over the columns it weights. The same map
    serves both matrix kinds.
    """
    flat = matrix.flat()
    if spec.n_columns != len(flat):
        raise DimensionMismatch(
            f"mapping expects {spec.n_columns} columns, matrix flattens to {len(flat)}"
        )
    entries = []
    for row in spec.rows:
        if row.mode == MODE_WEIGHTED_MEAN:
            value = math.fsum(w * x for w, x in zip(row.weights, flat))
        elif row.mode == MODE_MAX:
            value = max(x for w, x in zip(row.weights, flat) if w > 0)
        else:
            value = min(x for w, x in zip(row.weights, flat) if w > 0)
        entries.append((row.kpi, value))
    role = ROLE_REQUIRED if matrix.kind == ROLE_REQUIRED else ROLE_PERCEIVED
    return KpiVector(role, tuple(entries))


def bind_achieved(values: Iterable[KpiValue], spec: MappingSpec) -> KpiVector:
    """Assemble the achieved vector from KPI engine output via the binding.

    ``worst`` picks the least favourable defined value (direction comes from
    the KPI catalogue), ``mean`` averages the defined values.
    """
    if not spec.binding:
        raise ConfigError("mapping spec carries no achieved-vector binding")
    pool: dict[str, list[float]] = {}
    for v in values:
        if v.defined:
            pool.setdefault(v.name, []).append(v.value)
    entries = []
    for rule in spec.binding:
        candidates = pool.get(rule.kpi)
        if not candidates:
            raise ConfigError(f"binding {rule.key!r}: no defined values for {rule.kpi!r}")
        if rule.aggregate == "mean":
            value = fmean(candidates)
        else:
            higher_is_better = KPI_CATALOGUE[rule.kpi][2]
            value = min(candidates) if higher_is_better else max(candidates)
        entries.append((rule.key, value))
    return KpiVector(ROLE_ACHIEVED, tuple(entries))


_PAIR_LABELS = ("planned-required", "achieved-planned", "perceived-achieved")


@dataclass(frozen=True)
class GapReport:
    """Per-KPI deltas along the perspective chain and the aggregate gap."""

    per_kpi: tuple[tuple[str, tuple[float, float, float]], ...]
    aggregate_gap: float

    @property
    def converged(self) -> bool:
        return self.aggregate_gap == 0.0

    def to_json(self) -> str:
        doc = {
            "per_kpi": {
                kpi: dict(zip(_PAIR_LABELS, deltas)) for kpi, deltas in self.per_kpi
            },
            "aggregate_gap": self.aggregate_gap,
            "converged": self.converged,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def to_markdown(self) -> str:
        lines = [
            "| kpi | " + " | ".join(_PAIR_LABELS) + " |",
            "| --- | ---: | ---: | ---: |",
        ]
        for kpi, deltas in self.per_kpi:
            lines.append("| " + kpi + " | " + " | ".join(f"{d:.3f}" for d in deltas) + " |")
        lines.append("")
        lines.append(f"aggregate gap: {self.aggregate_gap:.3f} "
                     f"({'converged' if self.converged else 'not converged'})")
        return "\n".join(lines) + "\n"


def convergence_gap(required: KpiVector, planned: KpiVector,
                    achieved: KpiVector, perceived: KpiVector) -> GapReport:
    """Compare the four perspective vectors KPI by KPI.

    Reports planned-required, achieved-planned and perceived-achieved per
    KPI, and the maximum absolute delta across all of them; the aggregate is
    zero exactly when the four vectors coincide.
    """
    vectors = (required, planned, achieved, perceived)
    for vec, role in zip(vectors, ROLES):
        if vec.role != role:
            raise DimensionMismatch(f"expected a {role!r} vector, got {vec.role!r}")
    keys = [k for k, _ in required.entries]
    key_set = set(keys)
    for vec in vectors[1:]:
        if {k for k, _ in vec.entries} != key_set:
            raise DimensionMismatch(
                f"{vec.role} vector keys do not match the required vector"
            )
    maps = [vec.as_dict() for vec in vectors]
    per_kpi = []
    aggregate = 0.0
    for key in keys:
        r, p, a, u = (m[key] for m in maps)
        deltas = (p - r, a - p, u - a)
        per_kpi.append((key, deltas))
        aggregate = max(aggregate, *(abs(d) for d in deltas))
    return GapReport(tuple(per_kpi), aggregate)


# -- JSON loading -------------------------------------------------------------

def load_matrix(source: bytes | str) -> QosMatrix:
    """Parse {"kind": ..., "entries": [[...], ...]}."""
    doc = _load_json(source, "QoS matrix")
    try:
        return QosMatrix(str(doc["kind"]),
                         tuple(tuple(float(x) for x in row) for row in doc["entries"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad QoS matrix document: {exc!r}") from None


def load_mapping_spec(source: bytes | str) -> MappingSpec:
    """Parse {"rows": [{"kpi", "mode", "weights"}...], "achieved_binding": [...]}."""
    doc = _load_json(source, "mapping spec")
    try:
        rows = tuple(
            MappingRow(str(r["kpi"]), str(r["mode"]),
                       tuple(float(w) for w in r["weights"]))
            for r in doc["rows"]
        )
        binding = tuple(
            BindingRule(str(b["key"]), str(b["kpi"]), str(b.get("aggregate", "worst")))
            for b in doc.get("achieved_binding", ())
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad mapping spec document: {exc!r}") from None
    return MappingSpec(rows, binding)


def load_vector(source: bytes | str) -> KpiVector:
    """Parse {"role": ..., "entries": {kpi: value}}."""
    doc = _load_json(source, "KPI vector")
    try:
        return KpiVector(str(doc["role"]),
                         tuple((str(k), float(v)) for k, v in doc["entries"].items()))
    except (KeyError, AttributeError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad KPI vector document: {exc!r}") from None


def _load_json(source: bytes | str, what: str):
    text = source.decode("utf-8") if isinstance(source, (bytes, bytearray)) else source
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid {what} JSON: {exc.msg}") from None
