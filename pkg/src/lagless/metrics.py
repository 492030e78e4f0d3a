"""Technical-lag metrics, redundancy deltas and post-hoc breakage detection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from typing import Any, Iterable, Sequence

from .errors import LookupFailure
from .graph import DependencyGraph
from .reachability import api_gaps, compute_reachability
from .registry import ArtifactCoordinate, RegistrySnapshot
from .semver import LAG_LEVELS, Version, classify_step

log = logging.getLogger(__name__)

LEVEL_KEYS = tuple(level.label for level in LAG_LEVELS)  # Major, Minor, Patch, PreRelease


@dataclass
class DependencyLag:
    coordinate: ArtifactCoordinate
    version: Version
    depth: int
    version_lag: int
    levels: dict[str, int]
    time_lag_days: int
    latest_release: Version

    @property
    def direct(self) -> bool:
        return self.depth == 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": str(self.version),
            "depth": self.depth,
            "versionLag": self.version_lag,
            "levels": dict(self.levels),
            "timeLagDays": self.time_lag_days,
            "latestRelease": str(self.latest_release),
        }


@dataclass
class LagTotals:
    """Graph-wide sums.  Also used for before-minus-after deltas, which may be negative."""

    version_lag: int = 0
    major: int = 0
    minor: int = 0
    patch: int = 0
    pre_release: int = 0
    direct: int = 0
    transitive: int = 0
    time_lag_days: int = 0
    time_direct_days: int = 0
    time_transitive_days: int = 0

    def level(self, key: str) -> int:
        return getattr(self, _LEVEL_FIELDS[key])

    def __sub__(self, other: "LagTotals") -> "LagTotals":
        return LagTotals(**{f.name: getattr(self, f.name) - getattr(other, f.name) for f in fields(self)})

    def __add__(self, other: "LagTotals") -> "LagTotals":
        return LagTotals(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def to_dict(self) -> dict[str, Any]:
        return {
            "versionLag": self.version_lag,
            "levels": {k: self.level(k) for k in LEVEL_KEYS},
            "direct": self.direct,
            "transitive": self.transitive,
            "timeLagDays": self.time_lag_days,
            "timeLagDirectDays": self.time_direct_days,
            "timeLagTransitiveDays": self.time_transitive_days,
        }


_LEVEL_FIELDS = {"Major": "major", "Minor": "minor", "Patch": "patch", "PreRelease": "pre_release"}


@dataclass
class LagReport:
    per_dependency: dict[ArtifactCoordinate, DependencyLag] = field(default_factory=dict)
    totals: LagTotals = field(default_factory=LagTotals)
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "perDependency": {str(c): d.to_dict() for c, d in self.per_dependency.items()},
            "totals": self.totals.to_dict(),
            "errors": list(self.errors),
        }


def _version_lag_one(snapshot: RegistrySnapshot, coord: ArtifactCoordinate, current: Version) -> tuple[int, dict[str, int]]:
    snapshot.record(coord, current)
    levels = dict.fromkeys(LEVEL_KEYS, 0)
    count = 0
    for r in snapshot.records(coord):
        if r.stable and r.version > current:
            levels[classify_step(current, r.version).label] += 1
            count += 1
    return count, levels


def version_lag(snapshot: RegistrySnapshot, g: DependencyGraph) -> dict[ArtifactCoordinate, tuple[int, dict[str, int]]]:
    """Newer stable versions per dependency, with a per-level breakdown."""
    return {c: _version_lag_one(snapshot, c, g.version(c)) for c in g.registry_dependencies()}


def _time_lag_one(snapshot: RegistrySnapshot, coord: ArtifactCoordinate, current: Version) -> tuple[int, Version]:
    # the most recently released member of the candidate set (current plus newer stable versions)
    pool = [snapshot.record(coord, v) for v in snapshot.candidate_versions(coord, current)]
    latest = max(pool, key=lambda r: (r.released, r.version))
    days = (latest.released - pool[0].released).days
    return max(days, 0), latest.version


def time_lag(snapshot: RegistrySnapshot, g: DependencyGraph) -> dict[ArtifactCoordinate, int]:
    return {c: _time_lag_one(snapshot, c, g.version(c))[0] for c in g.registry_dependencies()}


def lag_report(snapshot: RegistrySnapshot, g: DependencyGraph) -> LagReport:
    report = LagReport()
    for coord in g.registry_dependencies():
        node = g.nodes[coord]
        try:
            count, levels = _version_lag_one(snapshot, coord, node.version)
            days, latest = _time_lag_one(snapshot, coord, node.version)
        except LookupFailure as exc:
            report.errors.append(str(exc))
            log.warning("lag skipped: %s", exc)
            continue
        entry = DependencyLag(coord, node.version, node.depth, count, levels, days, latest)
        report.per_dependency[coord] = entry
        t = report.totals
        t.version_lag += count
        t.major += levels["Major"]
        t.minor += levels["Minor"]
        t.patch += levels["Patch"]
        t.pre_release += levels["PreRelease"]
        t.time_lag_days += days
        if entry.direct:
            t.direct += count
            t.time_direct_days += days
        else:
            t.transitive += count
            t.time_transitive_days += days
    return report


def reduced_lag(before: LagReport, after: LagReport) -> LagTotals:
    """Before minus after over whole-graph totals: dependencies that disappeared
    count fully as reduced, ones that appeared count against the reduction."""
    return before.totals - after.totals


def redundant_delta(before: DependencyGraph, after: DependencyGraph) -> int:
    return len(after.dependencies()) - len(before.dependencies())


def module_average(reports: Sequence[LagReport]) -> dict[str, float]:
    if not reports:
        return {}
    n = len(reports)
    total = LagTotals()
    for r in reports:
        total = total + r.totals
    return {k: v / n for k, v in _flat(total).items()}


def _flat(t: LagTotals) -> dict[str, int]:
    return {f.name: getattr(t, f.name) for f in fields(t)}


@dataclass(frozen=True)
class BreakageFinding:
    node: ArtifactCoordinate
    dependent: ArtifactCoordinate
    missing_apis: frozenset[str]

    def to_dict(self) -> dict[str, Any]:
        return {"node": str(self.node), "dependent": str(self.dependent), "missingApis": sorted(self.missing_apis)}


def breakage_check(
    g_after: DependencyGraph, snapshot: RegistrySnapshot, baseline: DependencyGraph | None = None
) -> list[BreakageFinding]:
    """References from live dependent code to APIs the selected versions lack.

    With ``baseline``, references that were already dangling in that graph are
    not reported: only breakage the upgrade introduced counts.
    """
    gaps = api_gaps(g_after, snapshot, compute_reachability(g_after, snapshot))
    if baseline is not None:
        gaps -= api_gaps(baseline, snapshot, compute_reachability(baseline, snapshot))
    grouped: dict[tuple[ArtifactCoordinate, ArtifactCoordinate], set[str]] = {}
    for dependent, node, api in gaps:
        grouped.setdefault((node, dependent), set()).add(api)
    return [BreakageFinding(n, d, frozenset(ids)) for (n, d), ids in sorted(grouped.items())]


# -- rendering -----------------------------------------------------------------


def format_days(days: int) -> str:
    """Render a day count as y/m/d with 365-day years and 30-day months."""
    sign = "-" if days < 0 else ""
    days = abs(days)
    years, rest = divmod(days, 365)
    months, d = divmod(rest, 30)
    return f"{sign}{years}y{months}m{d}d"


def render_table(rows: Iterable[tuple[str, LagTotals]]) -> str:
    header = ["", "Major", "Minor", "Patch", "Pre-release", "Dir.", "Tran.", "All", "Time lag (y/m/d)"]
    body = []
    for label, t in rows:
        body.append(
            [
                label,
                str(t.major),
                str(t.minor),
                str(t.patch),
                str(t.pre_release),
                str(t.direct),
                str(t.transitive),
                str(t.version_lag),
                format_days(t.time_lag_days),
            ]
        )
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    lines = []
    for r in [header, *body]:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"
