"""Immutable registry snapshot: versions, release dates, declared dependencies,
API surfaces and invocation edges for every known artifact."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

from .errors import (
    ClosureError,
    LoadError,
    LookupFailure,
    ResolutionError,
    ValidationError,
    VersionParseError,
)
from .semver import Version, VersionSpec, parse_spec, parse_version, resolve_spec

SCOPES = ("compile", "runtime", "test", "provided")
LIVE_SCOPES = frozenset({"compile", "runtime"})
API_KINDS = ("method", "class")
EDGE_KINDS = ("call", "type")


@dataclass(frozen=True, order=True)
class ArtifactCoordinate:
    group: str
    name: str

    def __post_init__(self) -> None:
        if not self.group or not self.name:
            raise ValueError(f"coordinate parts must be non-empty: {self.group!r}:{self.name!r}")

    @classmethod
    def parse(cls, text: str) -> "ArtifactCoordinate":
        group, sep, name = text.partition(":")
        if not sep:
            raise ValueError(f"expected group:name, got {text!r}")
        return cls(group, name)

    def __str__(self) -> str:
        return f"{self.group}:{self.name}"


@dataclass(frozen=True)
class DependencyDecl:
    target: ArtifactCoordinate
    spec: VersionSpec
    scope: str = "compile"
    optional: bool = False

    @property
    def live(self) -> bool:
        """Whether the declaration survives the compile/runtime scope filter."""
        return self.scope in LIVE_SCOPES


@dataclass(frozen=True)
class ApiSymbol:
    id: str
    kind: str = "method"


@dataclass(frozen=True)
class InvocationEdge:
    source: str
    target: str
    kind: str = "call"


@dataclass(frozen=True)
class VersionRecord:
    version: Version
    released: date
    dependencies: tuple[DependencyDecl, ...] = ()
    api: tuple[ApiSymbol, ...] = ()
    invocations: tuple[InvocationEdge, ...] = ()
    stable_override: bool | None = None

    @property
    def stable(self) -> bool:
        if self.stable_override is not None:
            return self.stable_override
        return self.version.stable

    @cached_property
    def api_ids(self) -> frozenset[str]:
        return frozenset(a.id for a in self.api)

    @cached_property
    def out_edges(self) -> dict[str, tuple[str, ...]]:
        return _adjacency(self.invocations)


@dataclass(frozen=True)
class ModuleRecord:
    """Record-shaped view of a local workspace module (never in the registry)."""

    dependencies: tuple[DependencyDecl, ...] = ()
    api: tuple[ApiSymbol, ...] = ()
    invocations: tuple[InvocationEdge, ...] = ()

    @cached_property
    def api_ids(self) -> frozenset[str]:
        return frozenset(a.id for a in self.api)

    @cached_property
    def out_edges(self) -> dict[str, tuple[str, ...]]:
        return _adjacency(self.invocations)


def _adjacency(edges: Iterable[InvocationEdge]) -> dict[str, tuple[str, ...]]:
    out: dict[str, list[str]] = {}
    for e in edges:
        out.setdefault(e.source, []).append(e.target)
    return {k: tuple(v) for k, v in out.items()}


class RegistrySnapshot:
    """Read-only store keyed by coordinate; version lists are kept ascending."""

    def __init__(self, artifacts: Mapping[ArtifactCoordinate, Iterable[VersionRecord]] | None = None):
        table: dict[ArtifactCoordinate, tuple[VersionRecord, ...]] = {}
        for coord, records in (artifacts or {}).items():
            ordered = tuple(sorted(records, key=lambda r: r.version))
            for prev, cur in zip(ordered, ordered[1:]):
                if prev.version == cur.version:
                    raise ValidationError(
                        f"{coord}: duplicate version {cur.version} (also {prev.version})"
                    )
            table[coord] = ordered
        self._table = dict(sorted(table.items()))
        self._index = {
            coord: {r.version: r for r in recs} for coord, recs in self._table.items()
        }
        self._universe: dict[ArtifactCoordinate, frozenset[str]] = {}

    def __contains__(self, coord: object) -> bool:
        return coord in self._table

    def __len__(self) -> int:
        return len(self._table)

    def __iter__(self) -> Iterator[ArtifactCoordinate]:
        return iter(self._table)

    def records(self, coord: ArtifactCoordinate) -> tuple[VersionRecord, ...]:
        try:
            return self._table[coord]
        except KeyError:
            raise LookupFailure(f"unknown artifact {coord}") from None

    def versions(self, coord: ArtifactCoordinate) -> list[Version]:
        return [r.version for r in self.records(coord)]

    def has_version(self, coord: ArtifactCoordinate, version: Version) -> bool:
        return version in self._index.get(coord, {})

    def record(self, coord: ArtifactCoordinate, version: Version) -> VersionRecord:
        by_version = self._index.get(coord)
        if by_version is None:
            raise LookupFailure(f"unknown artifact {coord}")
        try:
            return by_version[version]
        except KeyError:
            raise LookupFailure(f"{coord} has no version {version} in the snapshot") from None

    def universe(self, coord: ArtifactCoordinate) -> frozenset[str]:
        """Every API id that any version of ``coord`` ever exposed."""
        if coord not in self._universe:
            ids: set[str] = set()
            for r in self.records(coord):
                ids |= r.api_ids
            self._universe[coord] = frozenset(ids)
        return self._universe[coord]

    def candidate_versions(self, coord: ArtifactCoordinate, current: Version) -> list[Version]:
        """``current`` followed by every stable version newer than it."""
        self.record(coord, current)
        newer = [r.version for r in self.records(coord) if r.version > current and r.stable]
        return [current, *newer]

    def resolve(self, decl: DependencyDecl) -> Version:
        return resolve_spec(decl.spec, self.versions(decl.target))

    def transitive_closure(self, coord: ArtifactCoordinate, version: Version) -> frozenset[ArtifactCoordinate]:
        """Coordinates pulled in by ``coord@version`` through live, non-optional
        declarations, each resolved against the registry on its own."""
        self.record(coord, version)
        seen = {(coord, version)}
        found: set[ArtifactCoordinate] = set()
        stack: list[tuple[ArtifactCoordinate, Version, tuple[str, ...]]] = [
            (coord, version, (f"{coord}@{version}",))
        ]
        while stack:
            c, v, path = stack.pop()
            for decl in self.record(c, v).dependencies:
                if not decl.live or decl.optional:
                    continue
                try:
                    resolved = self.resolve(decl)
                except (LookupFailure, ResolutionError) as exc:
                    trail = " -> ".join((*path, f"{decl.target}:{decl.spec}"))
                    raise ClosureError(f"cannot resolve {trail}: {exc}") from exc
                found.add(decl.target)
                if (decl.target, resolved) not in seen:
                    seen.add((decl.target, resolved))
                    stack.append((decl.target, resolved, (*path, f"{decl.target}@{resolved}")))
        found.discard(coord)
        return frozenset(found)

    def breaking_diff(self, coord: ArtifactCoordinate, old: Version, new: Version) -> frozenset[str]:
        """API ids present in ``old`` and missing from ``new``."""
        return self.record(coord, old).api_ids - self.record(coord, new).api_ids

    def to_dict(self) -> dict[str, Any]:
        return {"artifacts": [_artifact_to_dict(c, recs) for c, recs in self._table.items()]}


def _artifact_to_dict(coord: ArtifactCoordinate, records: Sequence[VersionRecord]) -> dict[str, Any]:
    versions = []
    for r in records:
        entry: dict[str, Any] = {"version": str(r.version), "released": r.released.isoformat()}
        if r.stable_override is not None:
            entry["stable"] = r.stable_override
        entry["dependencies"] = [decl_to_dict(d) for d in r.dependencies]
        entry["api"] = [{"id": a.id, "kind": a.kind} for a in r.api]
        entry["invocations"] = [edge_to_dict(e) for e in r.invocations]
        versions.append(entry)
    return {"group": coord.group, "name": coord.name, "versions": versions}


def decl_to_dict(d: DependencyDecl) -> dict[str, Any]:
    return {
        "group": d.target.group,
        "name": d.target.name,
        "spec": str(d.spec),
        "scope": d.scope,
        "optional": d.optional,
    }


def edge_to_dict(e: InvocationEdge) -> dict[str, Any]:
    return {"from": e.source, "to": e.target, "kind": e.kind}


# -- parsing -----------------------------------------------------------------


def _check_keys(obj: Any, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise LoadError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise LoadError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise LoadError(f"{where}: missing field(s) {sorted(missing)}")


def parse_decl(obj: Any, where: str) -> DependencyDecl:
    _check_keys(obj, {"group", "name", "spec", "scope", "optional"}, {"group", "name", "spec"}, where)
    scope = obj.get("scope", "compile")
    if scope not in SCOPES:
        raise LoadError(f"{where}: unknown scope {scope!r}")
    optional = obj.get("optional", False)
    if not isinstance(optional, bool):
        raise LoadError(f"{where}: optional must be a boolean")
    try:
        return DependencyDecl(
            ArtifactCoordinate(str(obj["group"]), str(obj["name"])),
            parse_spec(obj["spec"]),
            scope,
            optional,
        )
    except (ValueError, VersionParseError) as exc:
        raise LoadError(f"{where}: {exc}") from exc


def parse_api(items: Any, where: str) -> tuple[ApiSymbol, ...]:
    if not isinstance(items, list):
        raise LoadError(f"{where}: api must be a list")
    symbols = []
    seen: set[str] = set()
    for i, obj in enumerate(items):
        _check_keys(obj, {"id", "kind"}, {"id"}, f"{where} api[{i}]")
        kind = obj.get("kind", "method")
        if kind not in API_KINDS or not isinstance(obj["id"], str) or not obj["id"]:
            raise LoadError(f"{where} api[{i}]: invalid symbol {obj!r}")
        if obj["id"] in seen:
            raise ValidationError(f"{where}: duplicate api id {obj['id']!r}")
        seen.add(obj["id"])
        symbols.append(ApiSymbol(obj["id"], kind))
    return tuple(symbols)


def parse_invocations(items: Any, api_ids: frozenset[str] | set[str], where: str) -> tuple[InvocationEdge, ...]:
    if not isinstance(items, list):
        raise LoadError(f"{where}: invocations must be a list")
    edges = []
    for i, obj in enumerate(items):
        _check_keys(obj, {"from", "to", "kind"}, {"from", "to"}, f"{where} invocations[{i}]")
        kind = obj.get("kind", "call")
        if kind not in EDGE_KINDS:
            raise LoadError(f"{where} invocations[{i}]: unknown kind {kind!r}")
        if obj["from"] not in api_ids:
            raise ValidationError(
                f"{where} invocations[{i}]: 'from' id {obj['from']!r} is not in the declaring api surface"
            )
        edges.append(InvocationEdge(obj["from"], obj["to"], kind))
    return tuple(edges)


def _parse_record(obj: Any, where: str) -> VersionRecord:
    _check_keys(
        obj,
        {"version", "released", "stable", "dependencies", "api", "invocations"},
        {"version", "released"},
        where,
    )
    try:
        version = parse_version(obj["version"])
    except VersionParseError as exc:
        raise LoadError(f"{where}: {exc}") from exc
    where = f"{where} ({version})"
    try:
        released = date.fromisoformat(obj["released"])
    except (TypeError, ValueError) as exc:
        raise LoadError(f"{where}: bad release date {obj['released']!r}") from exc
    stable = obj.get("stable")
    if stable is not None and not isinstance(stable, bool):
        raise LoadError(f"{where}: stable must be a boolean")
    deps = obj.get("dependencies", [])
    if not isinstance(deps, list):
        raise LoadError(f"{where}: dependencies must be a list")
    decls = tuple(parse_decl(d, f"{where} dependencies[{i}]") for i, d in enumerate(deps))
    api = parse_api(obj.get("api", []), where)
    invocations = parse_invocations(obj.get("invocations", []), {a.id for a in api}, where)
    return VersionRecord(version, released, decls, api, invocations, stable)


def snapshot_from_dict(doc: Any) -> RegistrySnapshot:
    _check_keys(doc, {"artifacts"}, {"artifacts"}, "snapshot")
    if not isinstance(doc["artifacts"], list):
        raise LoadError("snapshot: artifacts must be a list")
    table: dict[ArtifactCoordinate, list[VersionRecord]] = {}
    for i, art in enumerate(doc["artifacts"]):
        _check_keys(art, {"group", "name", "versions"}, {"group", "name", "versions"}, f"artifacts[{i}]")
        try:
            coord = ArtifactCoordinate(str(art["group"]), str(art["name"]))
        except ValueError as exc:
            raise LoadError(f"artifacts[{i}]: {exc}") from exc
        if coord in table:
            raise ValidationError(f"artifact {coord} listed twice")
        if not isinstance(art["versions"], list):
            raise LoadError(f"artifact {coord}: versions must be a list")
        table[coord] = [
            _parse_record(v, f"artifact {coord} versions[{j}]") for j, v in enumerate(art["versions"])
        ]
    return RegistrySnapshot(table)


def load_snapshot(path: str | Path) -> RegistrySnapshot:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot read snapshot {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LoadError(f"{path}: invalid JSON: {exc}") from exc
    return snapshot_from_dict(doc)


def dump_snapshot(snapshot: RegistrySnapshot, path: str | Path) -> None:
    Path(path).write_text(json.dumps(snapshot.to_dict(), indent=2) + "\n", encoding="utf-8")
