"""Upgrade planning over a dynamic dependency graph.

Nodes are visited in a topological order whose "in-degree" is recomputed after
every upgrade: a node becomes ready once every dependent it currently has
(over both kept and omitted edges) has been processed.  Each node keeps the
newest candidate that survives the active filters.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

from .errors import ClosureError, GraphError, LaglessError, LookupFailure, OrderViolation, UpdateError
from .graph import DependencyGraph, ModuleManifest, WorkspaceManifest, build_graph
from .reachability import ReachableSet, api_gaps, compute_reachability
from .registry import ArtifactCoordinate, RegistrySnapshot
from .semver import Version, VersionSpec

log = logging.getLogger(__name__)

MODES = ("full", "pruning-only", "compat-only", "naive")
STRATEGIES = ("MMP", "mMP", "mmP")
_MODE_ALIASES = {"pruningOnly": "pruning-only", "compatOnly": "compat-only"}


@dataclass(frozen=True)
class PlannerConfig:
    mode: str = "full"
    strategy: str = "MMP"
    max_candidates: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", _MODE_ALIASES.get(self.mode, self.mode))
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.max_candidates is not None and self.max_candidates < 1:
            raise ValueError("max_candidates must be positive")

    @property
    def prunes(self) -> bool:
        return self.mode in ("full", "pruning-only")

    @property
    def checks_compat(self) -> bool:
        return self.mode in ("full", "compat-only")


def within_strategy(current: Version, candidate: Version, strategy: str) -> bool:
    if strategy == "mmP":
        return (candidate.major, candidate.minor) == (current.major, current.minor)
    if strategy == "mMP":
        return candidate.major == current.major
    return True


def cap_candidates(candidates: Sequence[Version], strategy: str, limit: int | None = None) -> list[Version]:
    current = candidates[0]
    kept = [current] + [v for v in candidates[1:] if within_strategy(current, v, strategy)]
    if limit is not None and len(kept) > limit:
        kept = [current] + kept[len(kept) - (limit - 1):] if limit > 1 else [current]
    return kept


@dataclass
class NodeDecision:
    coordinate: ArtifactCoordinate
    original: Version
    selected: Version
    candidates: list[Version] = field(default_factory=list)
    rejected_by_pruning: list[Version] = field(default_factory=list)
    rejected_by_compat: list[Version] = field(default_factory=list)
    rejected_unresolvable: list[Version] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "original": str(self.original),
            "selected": str(self.selected),
            "candidates": [str(v) for v in self.candidates],
            "rejectedByPruning": [str(v) for v in self.rejected_by_pruning],
            "rejectedByCompat": [str(v) for v in self.rejected_by_compat],
            "rejectedUnresolvable": [str(v) for v in self.rejected_unresolvable],
        }


@dataclass
class UpgradePlan:
    module_id: str
    config: PlannerConfig
    decisions: dict[ArtifactCoordinate, NodeDecision] = field(default_factory=dict)
    processing_order: list[ArtifactCoordinate] = field(default_factory=list)
    introduced: dict[ArtifactCoordinate, Version] = field(default_factory=dict)
    added_nodes: list[ArtifactCoordinate] = field(default_factory=list)
    removed_nodes: list[ArtifactCoordinate] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict[str, Any]:
        return {
            "module": self.module_id,
            "mode": self.config.mode,
            "strategy": self.config.strategy,
            "processingOrder": [str(c) for c in self.processing_order],
            "perNode": {str(c): self.decisions[c].to_dict() for c in self.processing_order},
            "introducedNodes": {str(c): str(v) for c, v in self.introduced.items()},
            "addedNodes": [str(c) for c in self.added_nodes],
            "removedNodes": [str(c) for c in self.removed_nodes],
            "errors": list(self.errors),
            "notes": list(self.notes),
        }


def ready_nodes(g: DependencyGraph, processed: set[ArtifactCoordinate]) -> list[ArtifactCoordinate]:
    """Unprocessed nodes whose every current dependent is processed."""
    preds: dict[ArtifactCoordinate, set[ArtifactCoordinate]] = {c: set() for c in g.nodes}
    for u, v in g.all_edges():
        preds[v].add(u)
    ready = [c for c in g.nodes if c not in processed and preds[c] <= processed]
    if not ready and any(c not in processed for c in g.nodes):
        raise OrderViolation("no node is ready although unprocessed nodes remain (cycle?)")
    return sorted(ready, key=lambda c: (g.nodes[c].depth, c))


def filter_by_pruning(
    g: DependencyGraph,
    snapshot: RegistrySnapshot,
    coord: ArtifactCoordinate,
    candidates: Sequence[Version],
    notes: list[str] | None = None,
) -> list[Version]:
    """Drop candidates whose transitive dependencies would grow the graph.

    A candidate survives when every coordinate it pulls in transitively is
    already a node of the current graph; the current version always survives.
    """
    current = candidates[0]
    present = set(g.nodes)
    kept = [current]
    for v in candidates[1:]:
        try:
            closure = snapshot.transitive_closure(coord, v)
        except ClosureError as exc:
            if notes is not None:
                notes.append(f"{coord}@{v}: {exc}")
            continue
        if closure <= present:
            kept.append(v)
    return kept


class _Simulations:
    """Per-step cache of graphs with one candidate applied."""

    def __init__(self, g: DependencyGraph, snapshot: RegistrySnapshot, coord: ArtifactCoordinate):
        self.g, self.snapshot, self.coord = g, snapshot, coord
        self._graphs: dict[Version, DependencyGraph | UpdateError] = {}

    def graph(self, v: Version) -> DependencyGraph:
        if v not in self._graphs:
            try:
                self._graphs[v] = self.g.with_upgrade(self.coord, v, self.snapshot)
            except UpdateError as exc:
                self._graphs[v] = exc
        result = self._graphs[v]
        if isinstance(result, UpdateError):
            raise result
        return result


def filter_by_compatibility(
    g: DependencyGraph,
    snapshot: RegistrySnapshot,
    coord: ArtifactCoordinate,
    candidates: Sequence[Version],
    reach: dict[ArtifactCoordinate, ReachableSet],
    notes: list[str] | None = None,
    simulations: _Simulations | None = None,
) -> list[Version]:
    """Keep candidates that break no API reachable from any dependent.

    Beyond the per-dependent check, a candidate is also rejected when the
    graph it produces holds an API reference (dependent -> missing id) that the
    current graph does not; this catches new edges into already settled nodes.
    """
    current = candidates[0]
    node_reach = reach[coord]
    sims = simulations or _Simulations(g, snapshot, coord)
    baseline_gaps: set | None = None
    kept = [current]
    for v in candidates[1:]:
        try:
            removed = snapshot.breaking_diff(coord, current, v)
        except LookupFailure as exc:
            if notes is not None:
                notes.append(f"{coord}@{v}: {exc}")
            continue
        if any(removed & ids for ids in node_reach.per_dependent.values()):
            continue
        try:
            after = sims.graph(v)
        except UpdateError:
            # not a compatibility verdict; selection records it as unresolvable
            kept.append(v)
            continue
        if baseline_gaps is None:
            baseline_gaps = api_gaps(g, snapshot, reach)
        if api_gaps(after, snapshot, compute_reachability(after, snapshot)) - baseline_gaps:
            continue
        kept.append(v)
    return kept


def select_version(candidates: Sequence[Version]) -> Version:
    return max(candidates)


def plan_upgrades(
    g: DependencyGraph,
    snapshot: RegistrySnapshot,
    config: PlannerConfig | None = None,
    module_id: str | None = None,
) -> UpgradePlan:
    """Plan every dependency of ``g``; ``g`` is left in its upgraded state."""
    config = config or PlannerConfig()
    plan = UpgradePlan(module_id or g.client.name, config)
    initial = set(g.dependencies())
    processed: set[ArtifactCoordinate] = {g.client}
    reach = compute_reachability(g, snapshot)

    while True:
        try:
            ready = ready_nodes(g, processed)
        except OrderViolation as exc:
            plan.errors.append(str(exc))
            break
        if not ready:
            break
        coord = ready[0]
        processed.add(coord)
        if g.nodes[coord].is_local:
            continue
        plan.processing_order.append(coord)
        decision, upgraded = _decide(g, snapshot, coord, config, reach, plan.notes)
        plan.decisions[coord] = decision
        if upgraded is not None:
            before = set(g.nodes)
            g.replace_with(upgraded)
            reach = compute_reachability(g, snapshot)
            for new in sorted(set(g.nodes) - before):
                # entered at the version its declaring parent resolved
                processed.add(new)
                plan.introduced[new] = g.nodes[new].version
        log.debug("%s: %s -> %s", coord, decision.original, decision.selected)

    final = set(g.dependencies())
    plan.added_nodes = sorted(final - initial)
    plan.removed_nodes = sorted(initial - final)
    return plan


def _decide(
    g: DependencyGraph,
    snapshot: RegistrySnapshot,
    coord: ArtifactCoordinate,
    config: PlannerConfig,
    reach: dict[ArtifactCoordinate, ReachableSet],
    notes: list[str],
) -> tuple[NodeDecision, DependencyGraph | None]:
    current = g.nodes[coord].version
    candidates = cap_candidates(snapshot.candidate_versions(coord, current), config.strategy, config.max_candidates)
    decision = NodeDecision(coord, current, current, candidates)
    sims = _Simulations(g, snapshot, coord)

    survivors = candidates
    if config.prunes:
        survivors = filter_by_pruning(g, snapshot, coord, survivors, notes)
        decision.rejected_by_pruning = [v for v in candidates if v not in survivors]
    if config.checks_compat:
        before = survivors
        survivors = filter_by_compatibility(g, snapshot, coord, survivors, reach, notes, sims)
        decision.rejected_by_compat = [v for v in before if v not in survivors]

    for v in sorted(survivors, reverse=True):
        if v == current:
            return decision, None
        try:
            upgraded = sims.graph(v)
        except UpdateError as exc:
            notes.append(str(exc))
            decision.rejected_unresolvable.append(v)
            continue
        decision.selected = v
        return decision, upgraded
    return decision, None


def replay_plan(
    g: DependencyGraph, snapshot: RegistrySnapshot, decisions: Sequence[tuple[ArtifactCoordinate, Version]]
) -> DependencyGraph:
    """Apply recorded selections in order to a freshly built graph."""
    for coord, version in decisions:
        if coord not in g.nodes:
            raise GraphError(f"plan refers to {coord}, which is not in the graph at that step")
        if g.nodes[coord].version != version:
            g.replace_with(g.with_upgrade(coord, version, snapshot))
    return g


@dataclass
class ModulePlan:
    module_id: str
    before: DependencyGraph
    after: DependencyGraph
    plan: UpgradePlan
    manifest: WorkspaceManifest  # as seen by this module, after earlier modules were planned


def plan_workspace(
    snapshot: RegistrySnapshot, manifest: WorkspaceManifest, config: PlannerConfig | None = None
) -> list[ModulePlan]:
    """Plan each module after its local dependencies; a planned module's upgraded
    direct dependencies are what its dependents see."""
    results = []
    current = manifest
    for module_id in current.module_order():
        before = build_graph(snapshot, current, module_id)
        after = build_graph(snapshot, current, module_id)
        plan = plan_upgrades(after, snapshot, config, module_id)
        results.append(ModulePlan(module_id, before, after, plan, current))
        current = current.replace(_upgraded_module(current.module(module_id), plan))
    return results


def _upgraded_module(module: ModuleManifest, plan: UpgradePlan) -> ModuleManifest:
    deps = []
    for decl in module.direct_deps:
        decision = plan.decisions.get(decl.target)
        if decision is not None and decision.selected != decision.original:
            decl = type(decl)(decl.target, VersionSpec.exactly(decision.selected), decl.scope, decl.optional)
        deps.append(decl)
    return ModuleManifest(module.module_id, tuple(deps), module.client_api, module.client_invocations, module.local_deps)


def plans_to_dict(results: Sequence[ModulePlan]) -> dict[str, Any]:
    return {"modules": [r.plan.to_dict() for r in results]}
