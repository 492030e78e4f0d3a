from __future__ import annotations

import pytest

from helpers import manifest, snap
from lagless.errors import BuildError, GraphError, UpdateError
from lagless.graph import (
    Candidate,
    build_graph,
    client_coordinate,
    local_coordinate,
    manifest_from_dict,
    mediate,
    update_after_upgrade,
)
from lagless.registry import ArtifactCoordinate
from lagless.semver import parse_version as V

A, B, C, D = (ArtifactCoordinate("g", n) for n in "abcd")
APP = client_coordinate("app")


def test_fix1_graph(fix1) -> None:
    s, m = fix1
    g = build_graph(s, m, "app")
    assert g.dependencies() == [A, B]
    assert g.edges == {(APP, A), (APP, B)}
    assert g.omitted_edges == set()
    g.check_invariants()


def test_mediate_nearest_then_first_declared() -> None:
    won = mediate([(C, V("2.0"), 2, 0), (C, V("1.0"), 1, 5), (D, V("1.0"), 2, 3), (D, V("2.0"), 2, 1)])
    assert won == {C: V("1.0"), D: V("2.0")}
    assert mediate([Candidate(C, V("1.0"), 1, 0)]) == {C: V("1.0")}


def test_nearest_wins_and_loser_becomes_omitted_edge() -> None:
    s = snap({
        "g:a": [("1.0", "2020-01-01", ["g:c@2.0"])],
        "g:b": [("1.0", "2020-01-01")],
        "g:c": [("1.0", "2020-01-01"), ("2.0", "2020-02-01")],
    })
    g = build_graph(s, manifest(["g:a@1.0", "g:b@1.0", "g:c@1.0"]), "app")
    assert g.version(C) == V("1.0") and g.depth(C) == 1
    assert (A, C) in g.omitted_edges and (A, C) not in g.edges
    assert g.predecessors(C) == sorted([A, APP])


def test_equal_depth_tie_goes_to_first_declared() -> None:
    s = snap({
        "g:a": [("1.0", "2020-01-01", ["g:c@2.0"])],
        "g:b": [("1.0", "2020-01-01", ["g:c@1.0"])],
        "g:c": [("1.0", "2020-01-01"), ("2.0", "2020-02-01")],
    })
    g = build_graph(s, manifest(["g:b@1.0", "g:a@1.0"]), "app")
    assert g.version(C) == V("1.0")
    assert (B, C) in g.edges and (A, C) in g.omitted_edges
    g = build_graph(s, manifest(["g:a@1.0", "g:b@1.0"]), "app")
    assert g.version(C) == V("2.0")


def test_scopes_and_transitive_optional_are_dropped() -> None:
    s = snap({
        "g:a": [("1.0", "2020-01-01", ["g:b@1.0/test", "g:c@1.0?", "g:d@1.0/runtime"])],
        "g:b": [("1.0", "2020-01-01")],
        "g:c": [("1.0", "2020-01-01")],
        "g:d": [("1.0", "2020-01-01")],
    })
    g = build_graph(s, manifest(["g:a@1.0", "g:c@1.0?"]), "app")
    assert set(g.dependencies()) == {A, C, D}  # the client's own optional dep stays
    assert g.depth(D) == 2


def test_cycle_is_an_error() -> None:
    s = snap({"g:a": [("1.0", "2020-01-01", ["g:b@1.0"])], "g:b": [("1.0", "2020-01-01", ["g:a@1.0"])]})
    # b -> a points back at a placed node: the omitted edge closes a cycle
    with pytest.raises(GraphError, match="cycle"):
        build_graph(s, manifest(["g:a@1.0"]), "app")


def test_unknown_artifact_and_unresolvable_spec() -> None:
    s = snap({"g:a": [("1.0", "2020-01-01", ["g:z@1.0"])], "g:b": [("1.0", "2020-01-01")]})
    with pytest.raises(BuildError, match="g:z"):
        build_graph(s, manifest(["g:a@1.0"]), "app")
    with pytest.raises(BuildError):
        build_graph(s, manifest(["g:b@[3,4)"]), "app")


def test_range_spec_picks_newest_match() -> None:
    s = snap({"g:a": [("1.0", "2020-01-01"), ("1.4", "2020-02-01"), ("2.0", "2020-03-01")]})
    g = build_graph(s, manifest(["g:a@[1.0,2.0)"]), "app")
    assert g.version(A) == V("1.4")


def test_local_modules() -> None:
    s = snap({"g:a": [("1.0", "2020-01-01")], "g:b": [("1.0", "2020-01-01")]})
    core = {"moduleId": "core", "directDeps": [{"group": "g", "name": "b", "spec": "1.0"}], "clientApi": [{"id": "core.f"}]}
    m = manifest(["g:a@1.0"], extra=[core], local=["core"])
    assert m.module_order() == ["core", "app"]
    g = build_graph(s, m, "app")
    core_c = local_coordinate("core")
    assert g.nodes[core_c].is_local and g.depth(core_c) == 1
    assert g.depth(B) == 2 and (core_c, B) in g.edges
    assert g.registry_dependencies() == [A, B]


def test_manifest_errors() -> None:
    from lagless.errors import LoadError

    with pytest.raises(LoadError):
        manifest_from_dict({"modules": [{"moduleId": "x", "localDeps": ["nope"]}]})
    with pytest.raises(LoadError):
        manifest_from_dict({"modules": [{"moduleId": "x"}, {"moduleId": "x"}]})


def test_with_upgrade_keeps_other_versions_sticky() -> None:
    s = snap({
        "g:a": [("1.0", "2020-01-01", ["g:c@1.0"]), ("2.0", "2020-02-01", ["g:c@2.0", "g:d@1.0"])],
        "g:c": [("1.0", "2020-01-01"), ("2.0", "2020-02-01")],
        "g:d": [("1.0", "2020-01-01")],
    })
    g = build_graph(s, manifest(["g:a@1.0"]), "app")
    h = g.with_upgrade(A, V("2.0"), s)
    assert g.version(A) == V("1.0") and D not in g  # original untouched
    assert h.version(A) == V("2.0")
    assert h.version(C) == V("1.0")  # already present, keeps its version
    assert h.version(D) == V("1.0") and h.depth(D) == 2  # introduced by the upgrade
    h.check_invariants()


def test_with_upgrade_drops_orphans() -> None:
    s = snap({
        "g:a": [("1.0", "2020-01-01", ["g:c@1.0"]), ("2.0", "2020-02-01")],
        "g:c": [("1.0", "2020-01-01")],
    })
    g = build_graph(s, manifest(["g:a@1.0"]), "app")
    update_after_upgrade(g, A, V("2.0"), s)
    assert C not in g and g.dependencies() == [A]


def test_with_upgrade_errors(fix1) -> None:
    s, m = fix1
    g = build_graph(s, m, "app")
    with pytest.raises(UpdateError):
        g.with_upgrade(A, V("9.0"), s)
    with pytest.raises(UpdateError):
        g.with_upgrade(APP, V("1.0"), s)
    with pytest.raises(UpdateError):
        g.with_upgrade(ArtifactCoordinate("g", "c"), V("1.0.0"), s)


def test_to_dict_shape(fix1) -> None:
    s, m = fix1
    doc = build_graph(s, m, "app").to_dict()
    assert doc["client"] == "<client>:app"
    assert [n["coordinate"] for n in doc["nodes"]] == ["<client>:app", "g:a", "g:b"]
    assert doc["omittedEdges"] == []
