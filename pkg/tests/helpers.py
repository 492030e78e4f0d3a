"""Compact builders for hand-written snapshots and manifests."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from lagless.graph import WorkspaceManifest, manifest_from_dict
from lagless.registry import ArtifactCoordinate, RegistrySnapshot, snapshot_from_dict
from lagless.tree import parse_verbose_tree

TREES = Path(__file__).parent / "fixtures" / "trees"


def _decl(text: str) -> dict[str, Any]:
    # "g:n@spec[/scope][?]"  e.g. "g:c@1.0/runtime", "g:d@[1,2)?"
    optional = text.endswith("?")
    text = text.rstrip("?")
    coord, _, rest = text.partition("@")
    spec, _, scope = rest.partition("/")
    group, name = coord.split(":")
    return {"group": group, "name": name, "spec": spec, "scope": scope or "compile", "optional": optional}


def snap(table: dict[str, list[tuple]]) -> RegistrySnapshot:
    """``{"g:a": [(version, released, deps, api, calls), ...]}``; trailing items optional."""
    artifacts = []
    for coord, rows in table.items():
        group, name = coord.split(":")
        versions = []
        for row in rows:
            version, released, *rest = row
            deps, api, calls = (list(rest) + [[], [], []])[:3]
            versions.append(
                {
                    "version": version,
                    "released": released,
                    "dependencies": [_decl(d) for d in deps],
                    "api": [{"id": a, "kind": "class" if a[:1].isupper() else "method"} for a in api],
                    "invocations": [{"from": f, "to": t} for f, t in calls],
                }
            )
        artifacts.append({"group": group, "name": name, "versions": versions})
    return snapshot_from_dict({"artifacts": artifacts})


def manifest(deps: list[str], calls: list[tuple[str, str]] = (), api: list[str] = ("main",), module_id: str = "app",
             extra: list[dict[str, Any]] = (), local: list[str] = ()) -> WorkspaceManifest:
    module = {
        "moduleId": module_id,
        "directDeps": [_decl(d) for d in deps],
        "clientApi": [{"id": a} for a in api],
        "clientInvocations": [{"from": f, "to": t} for f, t in calls],
        "localDeps": list(local),
    }
    return manifest_from_dict({"modules": [module, *extra]})


def _coord(text: str) -> ArtifactCoordinate:
    # client names keep their own colon: "<client>:group:artifact"
    group, _, name = text.partition(":") if text.startswith("<client>:") else text.rpartition(":")
    return ArtifactCoordinate(group, name)


def graph_matches(name: str) -> list[str]:
    """Differences between the parsed fixture and its expected graph (empty when equal)."""
    g = parse_verbose_tree((TREES / f"{name}.txt").read_text(encoding="utf-8"))
    want = json.loads((TREES / f"{name}.expected.json").read_text(encoding="utf-8"))
    problems = []
    got_nodes = {str(c): str(n.version) for c, n in g.nodes.items()}
    if got_nodes != want["nodes"]:
        problems.append(f"nodes {got_nodes} != {want['nodes']}")
    for key, edges in (("edges", g.edges), ("omitted", g.omitted_edges)):
        expected = {(_coord(u), _coord(v)) for u, v in want[key]}
        if edges != expected:
            problems.append(f"{key} {sorted(edges)} != {sorted(expected)}")
    for absent in want["absent"]:
        if _coord(absent) in g.nodes:
            problems.append(f"{absent} should be absent")
    return problems


# criterion number -> (passed, detail); printed by the terminal summary hook in conftest
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> bool:
    ACCEPTANCE[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
    return passed
