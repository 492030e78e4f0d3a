"""Seeded synthetic registries and client manifests.

Artifacts ``org.synth:libNN`` only ever depend on artifacts with a higher
index, so declarations are acyclic by construction.  Artifacts are generated
from the highest index down, which lets every declaration name a version of its
target that was already released on the declaring version's release date.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, fields
from datetime import date, timedelta
from pathlib import Path
from typing import Any, Mapping

from .errors import GenerationError
from .graph import ModuleManifest, WorkspaceManifest
from .registry import (
    LIVE_SCOPES,
    ApiSymbol,
    ArtifactCoordinate,
    DependencyDecl,
    InvocationEdge,
    RegistrySnapshot,
    VersionRecord,
)
from .semver import Version, VersionSpec, parse_version, resolve_spec

GROUP = "org.synth"
BASE_DATE = date(2015, 1, 1)


@dataclass(frozen=True)
class GenParams:
    seed: int = 0
    artifact_count: int = 8
    max_versions_per_artifact: int = 5
    max_deps_per_version: int = 3
    api_per_version: int = 4
    breaking_change_probability: float = 0.3
    new_dependency_probability: float = 0.6
    invocation_density: float = 0.5
    client_deps: int = 2
    prerelease_probability: float = 0.1
    range_probability: float = 0.1
    drop_dependency_probability: float = 0.0
    release_stagger_days: int = 200
    chain: bool = False
    modules: int = 1

    def __post_init__(self) -> None:
        for name in ("artifact_count", "max_versions_per_artifact", "api_per_version", "client_deps", "modules"):
            if getattr(self, name) < 1:
                raise GenerationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.release_stagger_days < 0:
            raise GenerationError("release_stagger_days must be non-negative")
        if self.max_deps_per_version < 0:
            raise GenerationError("max_deps_per_version must be non-negative")
        for name in (
            "breaking_change_probability",
            "new_dependency_probability",
            "invocation_density",
            "prerelease_probability",
            "range_probability",
            "drop_dependency_probability",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise GenerationError(f"{name} must lie in [0, 1], got {value}")
        if self.client_deps > self.artifact_count:
            raise GenerationError(
                f"client_deps ({self.client_deps}) exceeds artifact_count ({self.artifact_count})"
            )
        if self.chain and self.max_deps_per_version < 1:
            raise GenerationError("chain mode needs max_deps_per_version >= 1")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "GenParams":
        known = {f.name: f.name for f in fields(cls)}
        known.update({_camel(f.name): f.name for f in fields(cls)})
        unknown = set(doc) - set(known)
        if unknown:
            raise GenerationError(f"unknown parameter(s) {sorted(unknown)}")
        return cls(**{known[k]: v for k, v in doc.items()})

    def to_dict(self) -> dict[str, Any]:
        return {_camel(k): v for k, v in asdict(self).items()}


def _camel(name: str) -> str:
    head, *rest = name.split("_")
    return head + "".join(part.title() for part in rest)


@dataclass
class _Symbols:
    """Mints API ids and remembers their kinds."""

    kinds: dict[str, str]

    def mint(self, owner: str, n: int) -> ApiSymbol:
        if n % 3 == 0:
            sym = ApiSymbol(f"{owner}/C{n}", "class")
        else:
            sym = ApiSymbol(f"{owner}/m{n}()", "method")
        self.kinds[sym.id] = sym.kind
        return sym

    def edge(self, source: str, target: str) -> InvocationEdge:
        return InvocationEdge(source, target, "type" if self.kinds.get(target) == "class" else "call")


def _declared_version(records: list[VersionRecord], on: date) -> VersionRecord:
    """Newest stable version already released on ``on`` (else the first one)."""
    best = records[0]
    for r in records:
        if r.stable and r.released <= on and r.version > best.version:
            best = r
    return best


def _generate_artifact(
    rng: random.Random,
    p: GenParams,
    index: int,
    coords: list[ArtifactCoordinate],
    built: dict[ArtifactCoordinate, list[VersionRecord]],
    symbols: _Symbols,
) -> list[VersionRecord]:
    coord = coords[index]
    lower = coords[index + 1:]
    owner = str(coord)

    styles: dict[ArtifactCoordinate, tuple[str, bool, bool]] = {}

    def style(c: ArtifactCoordinate) -> tuple[str, bool, bool]:
        if c not in styles:
            r = rng.random()
            scope = "compile" if r < 0.85 else "runtime" if r < 0.92 else "test" if r < 0.96 else "provided"
            styles[c] = (scope, rng.random() < 0.05, rng.random() < p.range_probability)
        return styles[c]

    deps: list[ArtifactCoordinate] = []
    if lower and p.max_deps_per_version:
        k = rng.randint(0, min(p.max_deps_per_version, len(lower)))
        deps = rng.sample(lower, k)
        if p.chain and coords[index + 1] not in deps:
            deps = [coords[index + 1], *deps[: p.max_deps_per_version - 1]]
            styles[coords[index + 1]] = ("compile", False, False)
    counter = 0
    api: list[ApiSymbol] = []
    for _ in range(p.api_per_version):
        api.append(symbols.mint(owner, counter))
        counter += 1

    calls: dict[str, list[str]] = {}
    wired: dict[str, set[ArtifactCoordinate]] = {}
    numbers = (1, 0, 0)
    # deeper artifacts start earlier when staggered
    offset = (p.artifact_count - 1 - index) * p.release_stagger_days
    released = BASE_DATE + timedelta(days=offset + rng.randint(0, 365))
    n_versions = rng.randint(1, p.max_versions_per_artifact)
    records: list[VersionRecord] = []
    pending_final = False

    for step in range(n_versions):
        if step > 0:
            released += timedelta(days=rng.randint(10, 120))
        if step > 0 and not pending_final:
            if rng.random() < p.breaking_change_probability and len(api) > 1:
                api.remove(rng.choice(api))
                major_bump = rng.random() < 0.6
                numbers = (numbers[0] + 1, 0, 0) if major_bump else (numbers[0], numbers[1] + 1, 0)
            else:
                api.append(symbols.mint(owner, counter))
                counter += 1
                numbers = (numbers[0], numbers[1] + 1, 0) if rng.random() < 0.5 else (*numbers[:2], numbers[2] + 1)
            if lower and rng.random() < p.new_dependency_probability:
                fresh = [c for c in lower if c not in deps]
                if fresh and len(deps) < p.max_deps_per_version:
                    deps.append(rng.choice(fresh))
            if deps and rng.random() < p.drop_dependency_probability:
                droppable = [c for c in deps if not (p.chain and c == coords[index + 1])]
                if droppable:
                    deps.remove(rng.choice(droppable))

        text = "{}.{}.{}".format(*numbers)
        if pending_final:
            pending_final = False
        elif step > 0 and step < n_versions - 1 and rng.random() < p.prerelease_probability:
            text += "-rc1"
            pending_final = True

        decls = []
        surfaces: dict[ArtifactCoordinate, list[str]] = {}
        for c in deps:
            scope, optional, ranged = style(c)
            base = _declared_version(built[c], released).version
            spec = (
                VersionSpec.parse(f"[{base},{base.major + 1})") if ranged else VersionSpec.exactly(base)
            )
            decls.append(DependencyDecl(c, spec, scope, optional))
            if scope in LIVE_SCOPES:
                target = resolve_spec(spec, [r.version for r in built[c]])
                record = next(r for r in built[c] if r.version == target)
                surfaces[c] = sorted(record.api_ids)

        own = {a.id for a in api}
        edges = []
        for a in api:
            if a.id not in calls:
                calls[a.id] = []
                wired[a.id] = set()
                others = [b.id for b in api if b.id != a.id]
                if others and rng.random() < p.invocation_density / 2:
                    calls[a.id].append(rng.choice(others))
            for c in deps:
                if c in surfaces and c not in wired[a.id]:
                    wired[a.id].add(c)
                    if surfaces[c] and rng.random() < p.invocation_density:
                        calls[a.id].append(rng.choice(surfaces[c]))
            for t in calls[a.id]:
                if t in own or any(t in s for s in surfaces.values()):
                    edges.append(symbols.edge(a.id, t))

        records.append(
            VersionRecord(parse_version(text), released, tuple(decls), tuple(api), tuple(edges))
        )
    return records


def _generate_module(
    rng: random.Random,
    p: GenParams,
    module_id: str,
    local_dep: ModuleManifest | None,
    coords: list[ArtifactCoordinate],
    built: dict[ArtifactCoordinate, list[VersionRecord]],
) -> ModuleManifest:
    pool = coords[: min(len(coords), max(p.client_deps, 2 * p.client_deps))]
    chosen = sorted(rng.sample(pool, p.client_deps))
    deps = []
    surfaces = {}
    for c in chosen:
        stable = [r for r in built[c] if r.stable]
        pick = stable[rng.randint(0, (len(stable) - 1) // 2)]
        deps.append(DependencyDecl(c, VersionSpec.exactly(pick.version)))
        surfaces[c] = sorted(pick.api_ids)
    api = tuple(ApiSymbol(f"{module_id}/Main.m{j}()", "method") for j in range(2 + p.client_deps))
    edges = []
    for a in api:
        for c in chosen:
            if rng.random() < p.invocation_density:
                edges.append(InvocationEdge(a.id, rng.choice(surfaces[c]), "call"))
        if local_dep is not None and rng.random() < p.invocation_density:
            edges.append(InvocationEdge(a.id, rng.choice(local_dep.client_api).id, "call"))
    if not edges and p.invocation_density > 0:
        first = chosen[0]
        edges.append(InvocationEdge(api[0].id, surfaces[first][0], "call"))
    local = (local_dep.module_id,) if local_dep is not None else ()
    return ModuleManifest(module_id, tuple(deps), api, tuple(edges), local)


def generate_registry(p: GenParams) -> tuple[RegistrySnapshot, WorkspaceManifest]:
    """Deterministic for a given ``p``: same parameters, same snapshot and manifest."""
    rng = random.Random(p.seed)
    coords = [ArtifactCoordinate(GROUP, f"lib{i:02d}") for i in range(p.artifact_count)]
    symbols = _Symbols({})
    built: dict[ArtifactCoordinate, list[VersionRecord]] = {}
    for i in reversed(range(p.artifact_count)):
        built[coords[i]] = _generate_artifact(rng, p, i, coords, built, symbols)
    modules: list[ModuleManifest] = []
    below: ModuleManifest | None = None
    # module "app" depends on "core1", which depends on "core2" ...
    names = ["app"] + [f"core{j}" for j in range(1, p.modules)]
    for name in reversed(names):
        below = _generate_module(rng, p, name, below, coords, built)
        modules.append(below)
    return RegistrySnapshot(built), WorkspaceManifest(tuple(reversed(modules)))


def write_corpus(p: GenParams, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snapshot, manifest = generate_registry(p)
    snap_path, man_path = out / "snapshot.json", out / "manifest.json"
    snap_path.write_text(json.dumps(snapshot.to_dict(), indent=2) + "\n", encoding="utf-8")
    man_path.write_text(json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")
    (out / "params.json").write_text(json.dumps(p.to_dict(), indent=2) + "\n", encoding="utf-8")
    return snap_path, man_path
