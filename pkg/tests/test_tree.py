from __future__ import annotations

import pytest

from helpers import TREES, graph_matches
from lagless.errors import TreeParseError
from lagless.registry import ArtifactCoordinate
from lagless.tree import parse_verbose_tree, render_verbose_tree

NAMES = sorted(p.stem for p in TREES.glob("*.txt"))


@pytest.mark.parametrize("name", NAMES)
def test_fixture(name: str) -> None:
    assert graph_matches(name) == []


def test_there_are_at_least_five_fixtures() -> None:
    assert len(NAMES) >= 5


def test_log_prefixes_are_stripped() -> None:
    text = "[INFO] g:root:jar:1.0\n[INFO] \\- g:a:jar:2.0:compile\n"
    g = parse_verbose_tree(text)
    assert g.version(ArtifactCoordinate("g", "a")).raw == "2.0"


def test_depths_follow_shortest_path() -> None:
    text = "\n".join([
        "g:root:jar:1.0",
        "+- g:a:jar:1.0:compile",
        "|  \\- g:b:jar:1.0:compile",
        "|     \\- g:c:jar:1.0:compile",
        "\\- g:d:jar:1.0:compile",
        "   \\- (g:c:jar:1.0:compile - omitted for duplicate)",
    ])
    g = parse_verbose_tree(text)
    assert g.depth(ArtifactCoordinate("g", "c")) == 2


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("", "empty"),
        ("+- g:a:jar:1.0:compile\n", "root"),
        ("g:root:jar:1.0\n+- g:a:jar:1.0:compile\n|  |  \\- g:b:jar:1.0:compile\n", "skips"),
        ("g:root:jar:1.0\n|  g:a:jar:1.0:compile\n", "prefix"),
        ("g:root:jar:1.0\n+- g:a:jar:1.0:weird\n", "scope"),
        ("g:root:jar:1.0\n+- g:a:1.0\n", "malformed"),
        (
            "g:root:jar:1.0\n+- g:a:jar:1.0:compile\n\\- g:b:jar:1.0:compile\n"
            "   \\- (g:a:jar:2.0:compile - omitted for conflict with 3.0)\n",
            "retained node is 1.0",
        ),
    ],
)
def test_errors(text: str, fragment: str) -> None:
    with pytest.raises(TreeParseError, match=fragment):
        parse_verbose_tree(text)


def test_error_carries_line_number() -> None:
    with pytest.raises(TreeParseError) as info:
        parse_verbose_tree("g:root:jar:1.0\n+- g:a:jar:1.0:compile\n+- g:b:1.0\n")
    assert info.value.line_no == 3


@pytest.mark.parametrize("name", NAMES)
def test_render_round_trip(name: str) -> None:
    g = parse_verbose_tree((TREES / f"{name}.txt").read_text(encoding="utf-8"))
    again = parse_verbose_tree(render_verbose_tree(g))
    assert {c: n.version for c, n in again.nodes.items()} == {c: n.version for c, n in g.nodes.items()}
    assert again.edges == g.edges
    assert again.omitted_edges == g.omitted_edges
