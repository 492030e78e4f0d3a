"""Ingest ``mvn dependency:tree -Dverbose`` output.

The verbose tree keeps the relationships Maven shadowed during mediation as
parenthesised ``omitted for ...`` entries; they come back as omitted edges
pointing at the retained node.
"""

from __future__ import annotations

import re
from collections import deque

from .errors import TreeParseError
from .graph import CLIENT_GROUP, DependencyGraph, Node, client_coordinate
from .registry import LIVE_SCOPES, SCOPES, ArtifactCoordinate
from .semver import Version, VersionSpec, parse_version

_UNITS = ("+- ", "\\- ", "|  ", "   ")
_LOG_PREFIX = re.compile(r"^\[(INFO|DEBUG|WARNING)\]\s?")
_CONFLICT = re.compile(r"omitted for conflict with ([^\s;)]+)")


def _split_prefix(line: str, line_no: int) -> tuple[int, str]:
    depth = 0
    pos = 0
    while line.startswith(_UNITS, pos):
        depth += 1
        pos += 3
    if depth and line[pos - 3 : pos] not in ("+- ", "\\- "):
        raise TreeParseError(line_no, "tree prefix must end with '+- ' or '\\- '")
    return depth, line[pos:]


def _parse_coords(text: str, line_no: int, *, root: bool) -> tuple[ArtifactCoordinate, Version, str]:
    parts = text.split(":")
    # root: g:a:packaging[:classifier]:version; others add a trailing scope
    if root:
        if len(parts) not in (4, 5):
            raise TreeParseError(line_no, f"malformed root coordinates {text!r}")
        scope = "compile"
        version = parts[-1]
    else:
        if len(parts) not in (5, 6):
            raise TreeParseError(line_no, f"malformed coordinates {text!r}")
        scope = parts[-1]
        version = parts[-2]
        if scope not in SCOPES and scope != "system":
            raise TreeParseError(line_no, f"unknown scope {scope!r}")
    if not all(parts[:2]) or not version:
        raise TreeParseError(line_no, f"empty coordinate field in {text!r}")
    return ArtifactCoordinate(parts[0], parts[1]), parse_version(version), scope


def parse_verbose_tree(text: str) -> DependencyGraph:
    graph: DependencyGraph | None = None
    stack: list[ArtifactCoordinate | None] = []
    # (parent, coord, declared version, reason, line number)
    omitted: list[tuple[ArtifactCoordinate, ArtifactCoordinate, Version, str, int]] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _LOG_PREFIX.sub("", raw.rstrip())
        if not line.strip():
            continue
        depth, content = _split_prefix(line, line_no)
        if graph is None:
            if depth:
                raise TreeParseError(line_no, "tree must start with the root artifact")
            coord, version, _ = _parse_coords(content.split(" ")[0], line_no, root=True)
            client = client_coordinate(str(coord))
            graph = DependencyGraph(client)
            graph.nodes[client] = Node(client, version, 0, is_client=True)
            stack = [client]
            continue
        if depth == 0:
            raise TreeParseError(line_no, "second root line")
        if depth > len(stack):
            raise TreeParseError(line_no, "indentation skips a level")
        del stack[depth:]
        parent = stack[depth - 1]

        is_omitted = content.startswith("(")
        if is_omitted:
            if not content.endswith(")") or " - " not in content:
                raise TreeParseError(line_no, f"malformed omitted entry {content!r}")
            coords_text, reason = content[1:-1].split(" - ", 1)
        else:
            coords_text, _, reason = content.partition(" ")
        coord, version, scope = _parse_coords(coords_text, line_no, root=False)
        optional = "(optional" in reason

        dropped = (
            parent is None
            or scope not in LIVE_SCOPES
            or (optional and depth > 1)
            or (is_omitted and "omitted for cycle" in reason)
        )
        if dropped or is_omitted:
            stack.append(None)
            if not dropped:
                omitted.append((parent, coord, version, reason, line_no))
            continue
        edge = (parent, coord)
        if coord in graph.nodes:
            # a repeated non-omitted entry is a duplicate in all but name
            omitted.append((parent, coord, version, "omitted for duplicate", line_no))
            stack.append(None)
            continue
        graph.nodes[coord] = Node(coord, version, depth)
        graph.edges.add(edge)
        graph.declared_specs[edge] = VersionSpec.exactly(version)
        stack.append(coord)

    if graph is None:
        raise TreeParseError(0, "empty dependency tree")

    for parent, coord, declared, reason, line_no in omitted:
        if coord not in graph.nodes:
            continue  # its retained entry was filtered out by scope
        if parent is None:
            continue
        conflict = _CONFLICT.search(reason)
        if conflict and parse_version(conflict.group(1)) != graph.nodes[coord].version:
            raise TreeParseError(
                line_no,
                f"{coord} omitted for conflict with {conflict.group(1)}, "
                f"but the retained node is {graph.nodes[coord].version}",
            )
        edge = (parent, coord)
        if edge not in graph.edges:
            graph.omitted_edges.add(edge)
            graph.declared_specs.setdefault(edge, VersionSpec.exactly(declared))

    _recompute_depths(graph)
    graph.topological_order()
    return graph


def _recompute_depths(graph: DependencyGraph) -> None:
    adjacency: dict[ArtifactCoordinate, list[ArtifactCoordinate]] = {c: [] for c in graph.nodes}
    for u, v in graph.all_edges():
        adjacency[u].append(v)
    seen = {graph.client: 0}
    queue = deque([graph.client])
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if v not in seen:
                seen[v] = seen[u] + 1
                queue.append(v)
    for coord, node in graph.nodes.items():
        node.depth = seen[coord]


def _render_coords(coord: ArtifactCoordinate, version: Version, scope: str | None) -> str:
    text = f"{coord.group}:{coord.name}:jar:{version}"
    return text if scope is None else f"{text}:{scope}"


def render_verbose_tree(graph: DependencyGraph) -> str:
    """Inverse of :func:`parse_verbose_tree` up to packaging and scope."""
    client = graph.client
    root_name = client.name if ":" in client.name else f"local:{client.name}"
    if client.group != CLIENT_GROUP:
        root_name = str(client)
    lines = [f"{root_name}:jar:{graph.nodes[client].version}"]

    children: dict[ArtifactCoordinate, list[tuple[ArtifactCoordinate, bool]]] = {c: [] for c in graph.nodes}
    for u, v in graph.edges:
        children[u].append((v, False))
    for u, v in graph.omitted_edges:
        children[u].append((v, True))

    def walk(node: ArtifactCoordinate, prefix: str) -> None:
        kids = sorted(children[node])
        for i, (child, is_omitted) in enumerate(kids):
            last = i == len(kids) - 1
            branch = "\\- " if last else "+- "
            if is_omitted:
                spec = graph.declared_specs.get((node, child))
                declared = spec.exact if spec is not None and spec.exact is not None else graph.nodes[child].version
                retained = graph.nodes[child].version
                why = (
                    "omitted for duplicate"
                    if declared == retained
                    else f"omitted for conflict with {retained}"
                )
                lines.append(f"{prefix}{branch}({_render_coords(child, declared, 'compile')} - {why})")
            else:
                lines.append(f"{prefix}{branch}{_render_coords(child, graph.nodes[child].version, 'compile')}")
                walk(child, prefix + ("   " if last else "|  "))

    walk(client, "")
    return "\n".join(lines) + "\n"
