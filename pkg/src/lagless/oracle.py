"""Brute-force re-derivation of planner decisions for small registries.

Nothing here calls into the graph builder, the reachability module or the
planner.  Graph shape is recomputed by a shortest-path search over declaration
positions, reachable sets by naive fixpoint iteration, and every candidate is
judged by rebuilding the whole graph from scratch.  Only data types and the
reserved client/local coordinate names are shared with the main path.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .graph import CLIENT_GROUP, CLIENT_VERSION, LOCAL_GROUP, LOCAL_VERSION, WorkspaceManifest
from .registry import LIVE_SCOPES, ArtifactCoordinate, DependencyDecl, RegistrySnapshot, VersionRecord
from .semver import Version, VersionSpec

Coord = ArtifactCoordinate


class OracleError(Exception):
    """The oracle could not build a graph for some pinning."""


@dataclass
class _Rec:
    deps: tuple[DependencyDecl, ...]
    api: frozenset[str]
    edges: tuple[tuple[str, str], ...]


def _from_record(r: VersionRecord) -> _Rec:
    return _Rec(r.dependencies, frozenset(a.id for a in r.api), tuple((e.source, e.target) for e in r.invocations))


def _module_records(manifest: WorkspaceManifest) -> dict[Coord, _Rec]:
    out = {}
    for m in manifest.modules:
        local = tuple(DependencyDecl(Coord(LOCAL_GROUP, x), VersionSpec.exactly(LOCAL_VERSION)) for x in m.local_deps)
        rec = _Rec(
            tuple(m.direct_deps) + local,
            frozenset(a.id for a in m.client_api),
            tuple((e.source, e.target) for e in m.client_invocations),
        )
        out[Coord(CLIENT_GROUP, m.module_id)] = rec
        out[Coord(LOCAL_GROUP, m.module_id)] = rec
    return out


def _pick(snapshot: RegistrySnapshot, coord: Coord, spec: VersionSpec) -> Version:
    if coord not in snapshot:
        raise OracleError(f"unknown artifact {coord}")
    matching = [r.version for r in snapshot.records(coord) if spec.contains(r.version)]
    if not matching:
        raise OracleError(f"{coord}: nothing satisfies {spec}")
    if spec.kind == "exact":
        return matching[0]
    return max(matching)


@dataclass
class OracleGraph:
    client: Coord
    versions: dict[Coord, Version]
    depth: dict[Coord, int]
    edges: set[tuple[Coord, Coord]]
    omitted: set[tuple[Coord, Coord]]
    recs: dict[Coord, _Rec]

    @property
    def deps(self) -> set[Coord]:
        return set(self.versions) - {self.client}

    def preds(self, c: Coord) -> set[Coord]:
        return {u for u, v in self.edges | self.omitted if v == c}

    def pins(self) -> dict[Coord, Version]:
        return {c: v for c, v in self.versions.items() if c.group not in (CLIENT_GROUP, LOCAL_GROUP)}


def oracle_graph(
    snapshot: RegistrySnapshot,
    manifest: WorkspaceManifest,
    module_id: str,
    pins: Mapping[Coord, Version] | None = None,
) -> OracleGraph:
    """Nearest-wins graph: each coordinate is placed via the path with the
    smallest (length, declaration positions) key."""
    pins = dict(pins or {})
    modules = _module_records(manifest)
    client = Coord(CLIENT_GROUP, module_id)
    if client not in modules:
        raise OracleError(f"no module {module_id}")
    best: dict[Coord, tuple[int, tuple[int, ...]]] = {client: (0, ())}
    via: dict[Coord, tuple[Coord, DependencyDecl]] = {}
    settled: dict[Coord, tuple[int, ...]] = {}
    versions: dict[Coord, Version] = {}
    recs: dict[Coord, _Rec] = {}
    heap: list[tuple[int, tuple[int, ...], Coord]] = [(0, (), client)]
    while heap:
        _, key, c = heapq.heappop(heap)
        if c in settled:
            continue
        settled[c] = key
        if c == client:
            versions[c], recs[c] = CLIENT_VERSION, modules[c]
        elif c.group == LOCAL_GROUP:
            if c not in modules:
                raise OracleError(f"unknown module {c}")
            versions[c], recs[c] = LOCAL_VERSION, modules[c]
        else:
            v = pins[c] if c in pins else _pick(snapshot, c, via[c][1].spec)
            if not snapshot.has_version(c, v):
                raise OracleError(f"{c} has no version {v}")
            versions[c], recs[c] = v, _from_record(snapshot.record(c, v))
        for pos, d in enumerate(recs[c].deps):
            if d.scope not in LIVE_SCOPES or (d.optional and c != client):
                continue
            t = d.target
            if t in settled:
                continue
            nk = key + (pos,)
            if t not in best or (len(nk), nk) < best[t]:
                best[t] = (len(nk), nk)
                via[t] = (c, d)
                heapq.heappush(heap, (len(nk), nk, t))
    edges = {(via[t][0], t) for t in settled if t != client}
    declared = set()
    for c in settled:
        for d in recs[c].deps:
            if d.scope in LIVE_SCOPES and not (d.optional and c != client) and d.target in settled:
                declared.add((c, d.target))
    g = OracleGraph(client, versions, {c: len(k) for c, k in settled.items()}, edges, declared - edges, recs)
    _reject_cycles(g)
    return g


def _reject_cycles(g: OracleGraph) -> None:
    succ: dict[Coord, set[Coord]] = {}
    for u, v in g.edges | g.omitted:
        succ.setdefault(u, set()).add(v)
    state: dict[Coord, int] = {}

    def visit(c: Coord) -> None:
        state[c] = 1
        for n in succ.get(c, ()):
            if state.get(n) == 1:
                raise OracleError(f"cycle through {n}")
            if n not in state:
                visit(n)
        state[c] = 2

    for c in list(g.versions):
        if c not in state:
            visit(c)


def oracle_reach(g: OracleGraph) -> dict[Coord, dict[Coord, frozenset[str]]]:
    """Per node, per dependent: APIs reached, by fixpoint iteration."""
    per: dict[Coord, dict[Coord, frozenset[str]]] = {c: {u: frozenset() for u in g.preds(c)} for c in g.deps}

    def live(u: Coord) -> frozenset[str]:
        if u == g.client:
            return g.recs[u].api
        out: frozenset[str] = frozenset()
        for ids in per[u].values():
            out |= ids
        return out

    changed = True
    while changed:
        changed = False
        for c in sorted(g.deps):
            surface = g.recs[c].api
            for u in per[c]:
                src = live(u)
                cur = {t for s, t in g.recs[u].edges if s in src and t in surface}
                while True:
                    more = {t for s, t in g.recs[c].edges if s in cur and t in surface} - cur
                    if not more:
                        break
                    cur |= more
                if frozenset(cur) != per[c][u]:
                    per[c][u] = frozenset(cur)
                    changed = True
    return per


def _universe(snapshot: RegistrySnapshot, g: OracleGraph, c: Coord) -> set[str]:
    if c.group in (CLIENT_GROUP, LOCAL_GROUP):
        return set(g.recs[c].api)
    ids: set[str] = set()
    for r in snapshot.records(c):
        ids |= {a.id for a in r.api}
    return ids


def oracle_gaps(snapshot: RegistrySnapshot, g: OracleGraph) -> set[tuple[Coord, Coord, str]]:
    per = oracle_reach(g)
    out = set()
    for c in g.deps:
        missing = _universe(snapshot, g, c) - g.recs[c].api
        for u in per[c]:
            src = g.recs[u].api if u == g.client else frozenset().union(*per[u].values())
            out |= {(u, c, t) for s, t in g.recs[u].edges if s in src and t in missing}
    return out


def oracle_closure(snapshot: RegistrySnapshot, coord: Coord, version: Version) -> set[Coord] | None:
    """Transitive coordinates of coord@version, or None when some spec is unresolvable."""
    seen: set[tuple[Coord, Version]] = set()
    found: set[Coord] = set()

    def walk(c: Coord, v: Version) -> bool:
        if (c, v) in seen:
            return True
        seen.add((c, v))
        for d in snapshot.record(c, v).dependencies:
            if d.scope not in LIVE_SCOPES or d.optional:
                continue
            try:
                nv = _pick(snapshot, d.target, d.spec)
            except OracleError:
                return False
            found.add(d.target)
            if not walk(d.target, nv):
                return False
        return True

    if not walk(coord, version):
        return None
    found.discard(coord)
    return found


@dataclass(frozen=True)
class Verdict:
    version: Version
    resolvable: bool
    pruning_ok: bool
    compat_ok: bool

    def feasible(self, mode: str) -> bool:
        if not self.resolvable:
            return False
        if mode in ("full", "pruning-only") and not self.pruning_ok:
            return False
        if mode in ("full", "compat-only") and not self.compat_ok:
            return False
        return True

    @property
    def label(self) -> str:
        if not self.pruning_ok:
            return "rejectedByPruning"
        if not self.compat_ok:
            return "rejectedByCompat"
        if not self.resolvable:
            return "unresolvable"
        return "feasible"


def oracle_feasible(
    snapshot: RegistrySnapshot,
    manifest: WorkspaceManifest,
    module_id: str,
    g: OracleGraph,
    coord: Coord,
    candidate: Version,
) -> Verdict:
    """Classify one candidate of ``coord`` against graph state ``g``."""
    current = g.versions[coord]
    if candidate == current:
        return Verdict(candidate, True, True, True)
    closure = oracle_closure(snapshot, coord, candidate)
    pruning_ok = closure is not None and closure <= g.deps
    pins = g.pins()
    pins[coord] = candidate
    try:
        after = oracle_graph(snapshot, manifest, module_id, pins)
    except OracleError:
        after = None
    old_api = {a.id for a in snapshot.record(coord, current).api}
    new_api = {a.id for a in snapshot.record(coord, candidate).api}
    removed = old_api - new_api
    reach = oracle_reach(g)
    compat_ok = all(not (removed & ids) for ids in reach[coord].values())
    if compat_ok and after is not None:
        compat_ok = oracle_gaps(snapshot, after) <= oracle_gaps(snapshot, g)
    return Verdict(candidate, after is not None, pruning_ok, compat_ok)


def _capped(snapshot: RegistrySnapshot, coord: Coord, current: Version, strategy: str) -> list[Version]:
    out = [current]
    for r in snapshot.records(coord):
        v = r.version
        if v <= current or not r.stable:
            continue
        if strategy == "mmP" and (v.major, v.minor) != (current.major, current.minor):
            continue
        if strategy == "mMP" and v.major != current.major:
            continue
        out.append(v)
    return out


@dataclass
class OracleStep:
    coordinate: Coord
    expected: Version
    verdicts: list[Verdict] = field(default_factory=list)


def oracle_plan_check(
    snapshot: RegistrySnapshot,
    manifest: WorkspaceManifest,
    module_id: str,
    plan: Mapping[str, Any],
    mode: str,
    strategy: str = "MMP",
) -> tuple[list[str], list[OracleStep]]:
    """Replay a serialized plan step by step and compare every decision.

    Returns (mismatch messages, per-step oracle results).  The graph at each
    step is rebuilt from the plan's own earlier selections.
    """
    problems: list[str] = []
    steps: list[OracleStep] = []
    try:
        g = oracle_graph(snapshot, manifest, module_id)
    except OracleError as exc:
        return [f"initial graph: {exc}"], steps
    processed = {g.client}
    order = [Coord.parse(c) for c in plan.get("processingOrder", [])]
    per_node = plan.get("perNode", {})
    introduced_expected: dict[str, str] = {}
    for coord in order:
        ready = _oracle_ready(g, processed)
        while ready and ready[0].group == LOCAL_GROUP:
            processed.add(ready[0])
            ready = _oracle_ready(g, processed)
        if not ready or ready[0] != coord:
            problems.append(f"processing order: expected {ready[0] if ready else None}, plan has {coord}")
            return problems, steps
        processed.add(coord)
        current = g.versions[coord]
        entry = per_node.get(str(coord), {})
        if entry.get("original") != str(current):
            problems.append(f"{coord}: plan says original {entry.get('original')}, graph has {current}")
        verdicts = [oracle_feasible(snapshot, manifest, module_id, g, coord, v)
                    for v in _capped(snapshot, coord, current, strategy)]
        expected = max(v.version for v in verdicts if v.feasible(mode))
        steps.append(OracleStep(coord, expected, verdicts))
        selected = entry.get("selected")
        if selected != str(expected):
            problems.append(f"{coord}: planner selected {selected}, oracle maximum feasible is {expected}")
        if selected is None:
            return problems, steps
        chosen = next((v.version for v in verdicts if str(v.version) == selected), None)
        if chosen is None:
            problems.append(f"{coord}: selected {selected} is not a candidate")
            return problems, steps
        if chosen != current:
            pins = g.pins()
            pins[coord] = chosen
            before = set(g.versions)
            try:
                g = oracle_graph(snapshot, manifest, module_id, pins)
            except OracleError as exc:
                problems.append(f"{coord}@{chosen}: {exc}")
                return problems, steps
            for new in set(g.versions) - before:
                processed.add(new)
                introduced_expected[str(new)] = str(g.versions[new])
    while True:
        ready = _oracle_ready(g, processed)
        if not ready:
            break
        if ready[0].group != LOCAL_GROUP:
            problems.append(f"{ready[0]} was never processed")
            break
        processed.add(ready[0])
    introduced = dict(plan.get("introducedNodes", {}))
    if introduced != introduced_expected:
        problems.append(f"introduced nodes differ: plan {introduced}, oracle {introduced_expected}")
    return problems, steps


def _oracle_ready(g: OracleGraph, processed: set[Coord]) -> list[Coord]:
    return sorted(
        (c for c in g.versions if c not in processed and g.preds(c) <= processed),
        key=lambda c: (g.depth[c], c),
    )


def oracle_depth_counts(
    snapshot: RegistrySnapshot, manifests: Iterable[WorkspaceManifest], strategy: str
) -> dict[int, tuple[int, int]]:
    """Brute-force recount of (broken pairs, impacting APIs) per depth."""
    counts: dict[int, list[int]] = {}
    for manifest in manifests:
        for m in manifest.modules:
            try:
                g = oracle_graph(snapshot, manifest, m.module_id)
            except OracleError:
                continue
            per = oracle_reach(g)
            for c in g.deps:
                if c.group == LOCAL_GROUP or g.depth[c] < 2:
                    continue
                current = g.versions[c]
                target = max(_capped(snapshot, c, current, strategy))
                old = {a.id for a in snapshot.record(c, current).api}
                new = {a.id for a in snapshot.record(c, target).api}
                used = set().union(*per[c].values()) if per[c] else set()
                hit = (old - new) & used
                if hit:
                    row = counts.setdefault(g.depth[c], [0, 0])
                    row[0] += 1
                    row[1] += len(hit)
    return {d: (b, a) for d, (b, a) in sorted(counts.items())}

