"""Depth-impact study: how often upgrading a transitive dependency on its own,
under a fixed strategy, removes APIs that some client actually reaches."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .errors import LaglessError
from .graph import WorkspaceManifest, build_graph
from .planner import STRATEGIES, within_strategy
from .reachability import compute_reachability
from .registry import ArtifactCoordinate, RegistrySnapshot
from .semver import Version

log = logging.getLogger(__name__)

COUNTING = "brokenClients counts (client, dependency) pairs; clientImpactingApis sums |removed & reachable| per pair"


def strategy_target(snapshot: RegistrySnapshot, coord: ArtifactCoordinate, current: Version, strategy: str) -> Version:
    """Newest stable version allowed by ``strategy``, or ``current`` if none is newer."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    best = current
    for v in snapshot.candidate_versions(coord, current)[1:]:
        if within_strategy(current, v, strategy) and v > best:
            best = v
    return best


@dataclass(frozen=True)
class DepthImpactRow:
    depth: int
    strategy: str
    broken_clients: int
    client_impacting_apis: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "depth": self.depth,
            "strategy": self.strategy,
            "brokenClients": self.broken_clients,
            "clientImpactingApis": self.client_impacting_apis,
        }


@dataclass(frozen=True)
class Impact:
    """One (client, transitive dependency) pair that the upgrade would break."""

    client: str
    dependency: ArtifactCoordinate
    depth: int
    apis: frozenset[str]


@dataclass
class DepthStudy:
    strategy: str
    rows: list[DepthImpactRow] = field(default_factory=list)
    impacts: list[Impact] = field(default_factory=list)
    clients: int = 0
    skipped: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy,
            "counting": COUNTING,
            "clients": self.clients,
            "skipped": self.skipped,
            "warnings": list(self.warnings),
            "rows": [r.to_dict() for r in self.rows],
        }


def client_impacts(
    snapshot: RegistrySnapshot, manifest: WorkspaceManifest, module_id: str, strategy: str
) -> list[Impact]:
    g = build_graph(snapshot, manifest, module_id)
    reach = compute_reachability(g, snapshot)
    found = []
    for coord in g.registry_dependencies():
        node = g.nodes[coord]
        if node.depth < 2:
            continue
        target = strategy_target(snapshot, coord, node.version, strategy)
        if target == node.version:
            continue
        hit = snapshot.breaking_diff(coord, node.version, target) & reach[coord].union
        if hit:
            found.append(Impact(module_id, coord, node.depth, frozenset(hit)))
    return found


def depth_impact_study(
    snapshot: RegistrySnapshot, manifests: Iterable[WorkspaceManifest], strategy: str
) -> DepthStudy:
    """Rows per depth (at least 2) for one strategy; depths with no impact are omitted."""
    study = DepthStudy(strategy)
    for manifest in manifests:
        for module_id in manifest.module_order():
            try:
                found = client_impacts(snapshot, manifest, module_id, strategy)
            except LaglessError as exc:
                study.skipped += 1
                study.warnings.append(f"{module_id}: {exc}")
                log.warning("depth study skipped %s: %s", module_id, exc)
                continue
            study.clients += 1
            study.impacts.extend(found)
    totals: dict[int, list[int]] = {}
    for imp in study.impacts:
        row = totals.setdefault(imp.depth, [0, 0])
        row[0] += 1
        row[1] += len(imp.apis)
    study.rows = [DepthImpactRow(d, strategy, b, a) for d, (b, a) in sorted(totals.items())]
    return study


def rows_to_csv(rows: Sequence[DepthImpactRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["depth", "strategy", "brokenClients", "clientImpactingApis"])
    for r in rows:
        writer.writerow([r.depth, r.strategy, r.broken_clients, r.client_impacting_apis])
    return buf.getvalue()
