"""Reachable-API computation over call and class-dependency edges.

Call edges and type edges live in one usage graph with a kind tag; closure
treats them alike.  A dependency's reachable set is kept per dependent so the
compatibility check can judge each dependent on its own.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import OrderViolation
from .graph import DependencyGraph
from .registry import ArtifactCoordinate, ModuleRecord, RegistrySnapshot, VersionRecord

Record = VersionRecord | ModuleRecord
Gap = tuple[ArtifactCoordinate, ArtifactCoordinate, str]  # (dependent, node, missing api id)


@dataclass(frozen=True)
class UsageGraph:
    owner: ArtifactCoordinate
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str, str]]

    def adjacency(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for src, dst, _ in self.edges:
            out.setdefault(src, []).append(dst)
        return out


def build_usage_graph(record: Record, owner: ArtifactCoordinate) -> UsageGraph:
    return UsageGraph(
        owner,
        record.api_ids,
        frozenset((e.source, e.target, e.kind) for e in record.invocations),
    )


def entry_callees(
    dependent: UsageGraph | Record,
    dependent_reachable: Iterable[str],
    dep_surface: frozenset[str] | set[str],
) -> set[str]:
    """Targets in ``dep_surface`` invoked from the dependent's reachable APIs."""
    if isinstance(dependent, UsageGraph):
        adjacency: Mapping[str, Iterable[str]] = dependent.adjacency()
    else:
        adjacency = dependent.out_edges
    found: set[str] = set()
    for src in dependent_reachable:
        for dst in adjacency.get(src, ()):
            if dst in dep_surface:
                found.add(dst)
    return found


def forward_closure(record: Record, seeds: Iterable[str]) -> frozenset[str]:
    """Everything in ``record``'s own surface reachable from ``seeds``."""
    surface = record.api_ids
    seen = {s for s in seeds if s in surface}
    queue = deque(seen)
    out = record.out_edges
    while queue:
        for dst in out.get(queue.popleft(), ()):
            if dst in surface and dst not in seen:
                seen.add(dst)
                queue.append(dst)
    return frozenset(seen)


@dataclass
class ReachableSet:
    node: ArtifactCoordinate
    per_dependent: dict[ArtifactCoordinate, frozenset[str]] = field(default_factory=dict)

    @property
    def union(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for ids in self.per_dependent.values():
            out |= ids
        return out


def live_apis(
    g: DependencyGraph, snapshot: RegistrySnapshot, coord: ArtifactCoordinate, reach: Mapping[ArtifactCoordinate, ReachableSet]
) -> frozenset[str]:
    """APIs of ``coord`` that count as executed: all of them for the client."""
    if coord == g.client:
        return g.client_record.api_ids
    try:
        return reach[coord].union
    except KeyError:
        raise OrderViolation(f"reachable set of {coord} requested before it was computed") from None


def reachable_apis(
    g: DependencyGraph,
    snapshot: RegistrySnapshot,
    coord: ArtifactCoordinate,
    dependents_reachable: Mapping[ArtifactCoordinate, ReachableSet],
) -> ReachableSet:
    record = g.record_for(coord, snapshot)
    result = ReachableSet(coord)
    for dependent in g.predecessors(coord):
        live = live_apis(g, snapshot, dependent, dependents_reachable)
        seeds = entry_callees(g.record_for(dependent, snapshot), live, record.api_ids)
        result.per_dependent[dependent] = forward_closure(record, seeds)
    return result


def compute_reachability(g: DependencyGraph, snapshot: RegistrySnapshot) -> dict[ArtifactCoordinate, ReachableSet]:
    """Reachable sets for every dependency node, in topological order."""
    reach: dict[ArtifactCoordinate, ReachableSet] = {}
    for coord in g.topological_order():
        if coord != g.client:
            reach[coord] = reachable_apis(g, snapshot, coord, reach)
    return reach


def api_gaps(
    g: DependencyGraph,
    snapshot: RegistrySnapshot,
    reach: Mapping[ArtifactCoordinate, ReachableSet],
    nodes: Iterable[ArtifactCoordinate] | None = None,
) -> set[Gap]:
    """References from live dependent code into a node's API universe that the
    node's current version no longer (or not yet) provides."""
    gaps: set[Gap] = set()
    targets = g.dependencies() if nodes is None else nodes
    for coord in targets:
        surface = g.record_for(coord, snapshot).api_ids
        foreign = g.api_universe(coord, snapshot) - surface
        if not foreign:
            continue
        for dependent in g.predecessors(coord):
            live = live_apis(g, snapshot, dependent, reach)
            for api in entry_callees(g.record_for(dependent, snapshot), live, foreign):
                gaps.add((dependent, coord, api))
    return gaps
