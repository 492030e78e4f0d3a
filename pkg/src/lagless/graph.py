"""Client dependency graphs: construction with nearest-wins mediation, omitted
(shadowed) relationships, workspace manifests and post-upgrade updates."""

from __future__ import annotations

import graphlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, NamedTuple

from .errors import (
    BuildError,
    GraphError,
    LaglessError,
    LoadError,
    LookupFailure,
    ResolutionError,
    UpdateError,
)
from .registry import (
    ApiSymbol,
    ArtifactCoordinate,
    DependencyDecl,
    InvocationEdge,
    ModuleRecord,
    RegistrySnapshot,
    VersionRecord,
    decl_to_dict,
    edge_to_dict,
    parse_api,
    parse_decl,
    parse_invocations,
)
from .semver import Version, VersionSpec, resolve_spec

CLIENT_GROUP = "<client>"
LOCAL_GROUP = "<local>"
CLIENT_VERSION = Version(0, 0, 0, ("client",), "client")
LOCAL_VERSION = Version(0, 0, 0, ("local",), "local")

Edge = tuple[ArtifactCoordinate, ArtifactCoordinate]


def client_coordinate(module_id: str) -> ArtifactCoordinate:
    return ArtifactCoordinate(CLIENT_GROUP, module_id)


def local_coordinate(module_id: str) -> ArtifactCoordinate:
    return ArtifactCoordinate(LOCAL_GROUP, module_id)


# -- workspace manifests -------------------------------------------------------


@dataclass(frozen=True)
class ModuleManifest:
    module_id: str
    direct_deps: tuple[DependencyDecl, ...] = ()
    client_api: tuple[ApiSymbol, ...] = ()
    client_invocations: tuple[InvocationEdge, ...] = ()
    local_deps: tuple[str, ...] = ()

    def record(self) -> ModuleRecord:
        local = tuple(
            DependencyDecl(local_coordinate(m), VersionSpec.exactly(LOCAL_VERSION)) for m in self.local_deps
        )
        return ModuleRecord(self.direct_deps + local, self.client_api, self.client_invocations)

    def to_dict(self) -> dict[str, Any]:
        return {
            "moduleId": self.module_id,
            "directDeps": [decl_to_dict(d) for d in self.direct_deps],
            "clientApi": [{"id": a.id, "kind": a.kind} for a in self.client_api],
            "clientInvocations": [edge_to_dict(e) for e in self.client_invocations],
            "localDeps": list(self.local_deps),
        }


@dataclass(frozen=True)
class WorkspaceManifest:
    modules: tuple[ModuleManifest, ...] = ()

    def __post_init__(self) -> None:
        ids = [m.module_id for m in self.modules]
        if len(set(ids)) != len(ids):
            raise LoadError(f"duplicate module ids in manifest: {ids}")
        for m in self.modules:
            for dep in m.local_deps:
                if dep not in ids:
                    raise LoadError(f"module {m.module_id}: unknown local dependency {dep!r}")
        self.module_order()  # rejects cycles early

    def module(self, module_id: str) -> ModuleManifest:
        for m in self.modules:
            if m.module_id == module_id:
                return m
        raise LookupFailure(f"no module {module_id!r} in manifest")

    def module_order(self) -> list[str]:
        """Module ids with every local dependency ahead of its dependents."""
        sorter = graphlib.TopologicalSorter({m.module_id: m.local_deps for m in self.modules})
        try:
            order: list[str] = []
            sorter.prepare()
            while sorter.is_active():
                ready = sorted(sorter.get_ready())
                order.extend(ready)
                sorter.done(*ready)
        except graphlib.CycleError as exc:
            raise LoadError(f"local module dependencies form a cycle: {exc.args[1]}") from exc
        return order

    def replace(self, module: ModuleManifest) -> "WorkspaceManifest":
        return WorkspaceManifest(tuple(module if m.module_id == module.module_id else m for m in self.modules))

    def to_dict(self) -> dict[str, Any]:
        return {"modules": [m.to_dict() for m in self.modules]}


_MODULE_KEYS = {"moduleId", "directDeps", "clientApi", "clientInvocations", "localDeps"}


def manifest_from_dict(doc: Any) -> WorkspaceManifest:
    if not isinstance(doc, dict) or set(doc) != {"modules"} or not isinstance(doc["modules"], list):
        raise LoadError("manifest: expected an object with a single 'modules' list")
    modules = []
    for i, obj in enumerate(doc["modules"]):
        where = f"modules[{i}]"
        if not isinstance(obj, dict) or "moduleId" not in obj:
            raise LoadError(f"{where}: missing moduleId")
        unknown = set(obj) - _MODULE_KEYS
        if unknown:
            raise LoadError(f"{where}: unknown field(s) {sorted(unknown)}")
        where = f"module {obj['moduleId']}"
        deps = obj.get("directDeps", [])
        if not isinstance(deps, list):
            raise LoadError(f"{where}: directDeps must be a list")
        api = parse_api(obj.get("clientApi", []), where)
        modules.append(
            ModuleManifest(
                str(obj["moduleId"]),
                tuple(parse_decl(d, f"{where} directDeps[{j}]") for j, d in enumerate(deps)),
                api,
                parse_invocations(obj.get("clientInvocations", []), {a.id for a in api}, where),
                tuple(str(x) for x in obj.get("localDeps", [])),
            )
        )
    return WorkspaceManifest(tuple(modules))


def load_manifest(path: str | Path) -> WorkspaceManifest:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise LoadError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise LoadError(f"{path}: invalid JSON: {exc}") from exc
    return manifest_from_dict(doc)


# -- mediation -------------------------------------------------------------------


class Candidate(NamedTuple):
    coordinate: ArtifactCoordinate
    version: Version | None
    depth: int
    index: int


def mediation_winners(candidates: Iterable[Candidate]) -> dict[ArtifactCoordinate, Candidate]:
    """Nearest declaration wins; equal depth falls back to first declared."""
    best: dict[ArtifactCoordinate, Candidate] = {}
    for c in candidates:
        cur = best.get(c.coordinate)
        if cur is None or (c.depth, c.index) < (cur.depth, cur.index):
            best[c.coordinate] = c
    return best


def mediate(candidates: Iterable[Candidate | tuple]) -> dict[ArtifactCoordinate, Version | None]:
    winners = mediation_winners(Candidate(*c) for c in candidates)
    return {coord: c.version for coord, c in winners.items()}


# -- the graph -----------------------------------------------------------------------


@dataclass
class Node:
    coordinate: ArtifactCoordinate
    version: Version
    depth: int
    is_client: bool = False
    is_local: bool = False


@dataclass
class DependencyGraph:
    client: ArtifactCoordinate
    nodes: dict[ArtifactCoordinate, Node] = field(default_factory=dict)
    edges: set[Edge] = field(default_factory=set)
    omitted_edges: set[Edge] = field(default_factory=set)
    declared_specs: dict[Edge, VersionSpec] = field(default_factory=dict)
    client_record: ModuleRecord = field(default_factory=ModuleRecord)
    local_records: dict[ArtifactCoordinate, ModuleRecord] = field(default_factory=dict)

    def __contains__(self, coord: object) -> bool:
        return coord in self.nodes

    def version(self, coord: ArtifactCoordinate) -> Version:
        return self.nodes[coord].version

    def depth(self, coord: ArtifactCoordinate) -> int:
        return self.nodes[coord].depth

    def dependencies(self) -> list[ArtifactCoordinate]:
        """Non-client nodes, ordered by (depth, coordinate)."""
        deps = [n for n in self.nodes.values() if not n.is_client]
        return [n.coordinate for n in sorted(deps, key=lambda n: (n.depth, n.coordinate))]

    def registry_dependencies(self) -> list[ArtifactCoordinate]:
        return [c for c in self.dependencies() if not self.nodes[c].is_local]

    def all_edges(self) -> set[Edge]:
        return self.edges | self.omitted_edges

    def predecessors(self, coord: ArtifactCoordinate) -> list[ArtifactCoordinate]:
        return sorted({u for u, v in self.all_edges() if v == coord})

    def successors(self, coord: ArtifactCoordinate) -> list[ArtifactCoordinate]:
        return sorted({v for u, v in self.all_edges() if u == coord})

    def record_for(self, coord: ArtifactCoordinate, snapshot: RegistrySnapshot) -> VersionRecord | ModuleRecord:
        node = self.nodes[coord]
        if node.is_client:
            return self.client_record
        if node.is_local:
            return self.local_records[coord]
        return snapshot.record(coord, node.version)

    def api_universe(self, coord: ArtifactCoordinate, snapshot: RegistrySnapshot) -> frozenset[str]:
        node = self.nodes[coord]
        if node.is_client:
            return self.client_record.api_ids
        if node.is_local:
            return self.local_records[coord].api_ids
        return snapshot.universe(coord)

    def topological_order(self) -> list[ArtifactCoordinate]:
        """Kahn order over edges and omitted edges; ties by (depth, coordinate)."""
        preds = {c: set() for c in self.nodes}
        for u, v in self.all_edges():
            preds[v].add(u)
        sorter = graphlib.TopologicalSorter(preds)
        order: list[ArtifactCoordinate] = []
        try:
            sorter.prepare()
        except graphlib.CycleError as exc:
            raise GraphError(f"dependency cycle: {' -> '.join(map(str, exc.args[1]))}") from exc
        while sorter.is_active():
            ready = sorted(sorter.get_ready(), key=lambda c: (self.nodes[c].depth, c))
            order.extend(ready)
            sorter.done(*ready)
        return order

    def pinned_versions(self) -> dict[ArtifactCoordinate, Version]:
        return {c: n.version for c, n in self.nodes.items() if not n.is_client and not n.is_local}

    def with_upgrade(self, coord: ArtifactCoordinate, version: Version, snapshot: RegistrySnapshot) -> "DependencyGraph":
        """A fresh graph with ``coord`` moved to ``version``; ``self`` is untouched."""
        if coord not in self.nodes or self.nodes[coord].is_client or self.nodes[coord].is_local:
            raise UpdateError(f"{coord} is not an upgradable node of this graph")
        if not snapshot.has_version(coord, version):
            raise UpdateError(f"{coord} has no version {version} in the snapshot")
        pinned = self.pinned_versions()
        pinned[coord] = version
        try:
            return expand(snapshot, self.client, self.client_record, self.local_records, pinned)
        except LaglessError as exc:
            raise UpdateError(f"upgrading {coord} to {version}: {exc}") from exc

    def replace_with(self, other: "DependencyGraph") -> None:
        self.nodes = other.nodes
        self.edges = other.edges
        self.omitted_edges = other.omitted_edges
        self.declared_specs = other.declared_specs

    def check_invariants(self) -> None:
        from .errors import InvariantViolation

        try:
            order = self.topological_order()
        except GraphError as exc:
            raise InvariantViolation(str(exc)) from exc
        if set(order) != set(self.nodes):
            raise InvariantViolation("topological order does not cover every node")
        for coord, node in self.nodes.items():
            if not node.is_client and not self.predecessors(coord):
                raise InvariantViolation(f"{coord} is not reachable from the client")

    def to_dict(self) -> dict[str, Any]:
        def edge_list(edges: set[Edge]) -> list[list[str]]:
            return [[str(u), str(v)] for u, v in sorted(edges)]

        return {
            "client": str(self.client),
            "nodes": [
                {
                    "coordinate": str(c),
                    "version": str(self.nodes[c].version),
                    "depth": self.nodes[c].depth,
                }
                for c in [self.client, *self.dependencies()]
            ],
            "edges": edge_list(self.edges),
            "omittedEdges": edge_list(self.omitted_edges),
        }


def expand(
    snapshot: RegistrySnapshot,
    client: ArtifactCoordinate,
    client_record: ModuleRecord,
    local_records: Mapping[ArtifactCoordinate, ModuleRecord],
    pinned: Mapping[ArtifactCoordinate, Version] | None = None,
) -> DependencyGraph:
    """Breadth-first expansion from the client, one level at a time.

    Coordinates in ``pinned`` keep that version; any other coordinate gets the
    version of its mediation winner.  Declarations that lose mediation, or that
    point at an already placed node, become omitted edges.
    """
    pinned = pinned or {}
    g = DependencyGraph(client, client_record=client_record, local_records=dict(local_records))
    g.nodes[client] = Node(client, CLIENT_VERSION, 0, is_client=True)
    frontier = [client]
    index = 0
    depth = 0
    while frontier:
        declared: list[tuple[Candidate, ArtifactCoordinate, DependencyDecl]] = []
        for parent in frontier:
            for decl in g.record_for(parent, snapshot).dependencies:
                if not decl.live or (decl.optional and parent != client):
                    continue
                declared.append((Candidate(decl.target, None, depth + 1, index), parent, decl))
                index += 1
        winners = mediation_winners(c for c, _, _ in declared if c.coordinate not in g.nodes)
        placed_now: list[tuple[int, ArtifactCoordinate]] = []
        for cand, parent, decl in declared:
            coord = cand.coordinate
            edge = (parent, coord)
            if winners.get(coord) is cand:
                g.nodes[coord] = _place(snapshot, g, coord, decl, depth + 1, pinned)
                g.edges.add(edge)
                placed_now.append((cand.index, coord))
            elif edge not in g.edges:
                g.omitted_edges.add(edge)
            g.declared_specs.setdefault(edge, decl.spec)
        frontier = [c for _, c in sorted(placed_now)]
        depth += 1
    g.omitted_edges -= g.edges
    g.topological_order()  # raises GraphError on cycles
    return g


def _place(
    snapshot: RegistrySnapshot,
    g: DependencyGraph,
    coord: ArtifactCoordinate,
    decl: DependencyDecl,
    depth: int,
    pinned: Mapping[ArtifactCoordinate, Version],
) -> Node:
    if coord in g.local_records:
        return Node(coord, LOCAL_VERSION, depth, is_local=True)
    if coord.group == CLIENT_GROUP:
        raise BuildError(f"{coord} refers to a client module")
    if coord in pinned:
        return Node(coord, pinned[coord], depth)
    if coord not in snapshot:
        raise BuildError(f"unknown artifact {coord}")
    try:
        version = resolve_spec(decl.spec, snapshot.versions(coord))
    except ResolutionError as exc:
        raise BuildError(f"{coord}: {exc}") from exc
    return Node(coord, version, depth)


def _local_records(manifest: WorkspaceManifest, module: ModuleManifest) -> dict[ArtifactCoordinate, ModuleRecord]:
    records: dict[ArtifactCoordinate, ModuleRecord] = {}
    stack = list(module.local_deps)
    while stack:
        mid = stack.pop()
        coord = local_coordinate(mid)
        if coord in records:
            continue
        dep = manifest.module(mid)
        records[coord] = dep.record()
        stack.extend(dep.local_deps)
    return records


def build_graph(
    snapshot: RegistrySnapshot,
    manifest: WorkspaceManifest,
    module_id: str,
    pinned: Mapping[ArtifactCoordinate, Version] | None = None,
) -> DependencyGraph:
    module = manifest.module(module_id)
    return expand(
        snapshot,
        client_coordinate(module_id),
        module.record(),
        _local_records(manifest, module),
        pinned,
    )


def update_after_upgrade(
    g: DependencyGraph, coord: ArtifactCoordinate, version: Version, snapshot: RegistrySnapshot
) -> DependencyGraph:
    """Move ``coord`` to ``version`` in place and refresh the structure."""
    g.replace_with(g.with_upgrade(coord, version, snapshot))
    return g
