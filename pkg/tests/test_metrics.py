from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import manifest, snap
from lagless.graph import build_graph
from lagless.metrics import (
    LEVEL_KEYS,
    LagReport,
    LagTotals,
    breakage_check,
    format_days,
    lag_report,
    module_average,
    reduced_lag,
    redundant_delta,
    render_table,
    time_lag,
    version_lag,
)
from lagless.planner import PlannerConfig, plan_upgrades
from lagless.registry import ArtifactCoordinate
from lagless.semver import parse_version as V
from lagless.synthgen import GenParams, generate_registry

A, B, C = (ArtifactCoordinate("g", n) for n in "abc")


def test_fix1_initial_lag(fix1) -> None:
    s, m = fix1
    g = build_graph(s, m, "app")
    assert version_lag(s, g) == {
        A: (2, {"Major": 1, "Minor": 1, "Patch": 0, "PreRelease": 0}),
        B: (1, {"Major": 0, "Minor": 0, "Patch": 1, "PreRelease": 0}),
    }
    assert time_lag(s, g) == {A: 366, B: 60}
    r = lag_report(s, g)
    assert r.totals.version_lag == 3 and r.totals.direct == 3 and r.totals.transitive == 0
    assert r.per_dependency[A].latest_release == V("2.0.0")


@pytest.mark.parametrize(
    "mode, reduced_vl, reduced_days, redundant, broken",
    [("full", 1, 152, 0, []), ("naive", 3, 426, 1, [("g:a", "<client>:app", ["a.f"])])],
)
def test_fix1_after_plan(fix1, mode, reduced_vl, reduced_days, redundant, broken) -> None:
    s, m = fix1
    before = build_graph(s, m, "app")
    after = build_graph(s, m, "app")
    plan_upgrades(after, s, PlannerConfig(mode))
    delta = reduced_lag(lag_report(s, before), lag_report(s, after))
    assert delta.version_lag == reduced_vl
    assert delta.time_lag_days == reduced_days
    assert redundant_delta(before, after) == redundant
    found = [(str(f.node), str(f.dependent), sorted(f.missing_apis)) for f in breakage_check(after, s, before)]
    assert found == broken


def test_full_mode_reduces_minor_only(fix1) -> None:
    s, m = fix1
    before = build_graph(s, m, "app")
    after = build_graph(s, m, "app")
    plan_upgrades(after, s)
    delta = reduced_lag(lag_report(s, before), lag_report(s, after))
    assert {k: delta.level(k) for k in LEVEL_KEYS} == {"Major": 0, "Minor": 1, "Patch": 0, "PreRelease": 0}


def test_prereleases_do_not_count() -> None:
    s = snap({"g:a": [("1.0", "2020-01-01"), ("1.1-rc1", "2020-02-01"), ("1.1", "2020-03-01")]})
    g = build_graph(s, manifest(["g:a@1.0"]), "app")
    assert version_lag(s, g)[A][0] == 1


def test_prerelease_current_counts_its_final_as_prerelease_level() -> None:
    s = snap({"g:a": [("1.1-rc1", "2020-02-01"), ("1.1", "2020-03-01")]})
    g = build_graph(s, manifest(["g:a@1.1-rc1"]), "app")
    count, levels = version_lag(s, g)[A]
    assert count == 1 and levels["PreRelease"] == 1


def test_time_lag_uses_latest_release_not_highest_version() -> None:
    # a backport 1.0.1 ships after 2.0
    s = snap({"g:a": [("1.0", "2020-01-01"), ("2.0", "2020-02-01"), ("1.0.1", "2020-05-01")]})
    g = build_graph(s, manifest(["g:a@1.0"]), "app")
    assert time_lag(s, g)[A] == 121
    g = build_graph(s, manifest(["g:a@2.0"]), "app")
    assert time_lag(s, g)[A] == 0


def test_lookup_failure_becomes_report_error() -> None:
    s = snap({"g:a": [("1.0", "2020-01-01")]})
    g = build_graph(s, manifest(["g:a@1.0"]), "app")
    other = snap({"g:b": [("1.0", "2020-01-01")]})
    r = lag_report(other, g)
    assert r.per_dependency == {} and len(r.errors) == 1


def test_breakage_ignores_baseline_gaps() -> None:
    # the client already references a.gone, which no version of a has any more
    s = snap({"g:a": [("0.9", "2019-01-01", [], ["a.gone"]), ("1.0", "2020-01-01", [], ["a.f"]), ("1.1", "2020-02-01", [], ["a.f"])]})
    m = manifest(["g:a@1.0"], calls=[("main", "a.gone"), ("main", "a.f")])
    before = build_graph(s, m, "app")
    assert len(breakage_check(before, s)) == 1
    assert breakage_check(before, s, before) == []


@pytest.mark.parametrize(
    "days, text",
    [(0, "0y0m0d"), (29, "0y0m29d"), (30, "0y1m0d"), (364, "0y12m4d"), (365, "1y0m0d"), (426, "1y2m1d"), (-152, "-0y5m2d")],
)
def test_format_days(days: int, text: str) -> None:
    assert format_days(days) == text


def test_render_table() -> None:
    out = render_table([("before", LagTotals(version_lag=3, minor=1, major=1, patch=1, direct=3, time_lag_days=426))])
    header, row = out.splitlines()
    assert header.split()[:4] == ["Major", "Minor", "Patch", "Pre-release"]
    assert row.split() == ["before", "1", "1", "1", "0", "3", "0", "3", "1y2m1d"]


def test_totals_algebra() -> None:
    t = LagTotals(version_lag=4, major=1, minor=3, time_lag_days=10)
    assert t - t == LagTotals()
    assert (t + t).version_lag == 8
    assert module_average([]) == {}
    assert module_average([LagReport(totals=t), LagReport()])["version_lag"] == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.sampled_from(["full", "naive"]))
def test_level_counts_partition_version_lag(seed: int, mode: str) -> None:
    s, m = generate_registry(GenParams(seed=seed, artifact_count=10))
    g = build_graph(s, m, "app")
    for graph in (g, plan_upgrades(g, s, PlannerConfig(mode)) and g):
        r = lag_report(s, graph)
        t = r.totals
        assert sum(t.level(k) for k in LEVEL_KEYS) == t.version_lag == t.direct + t.transitive
        assert t.time_lag_days == t.time_direct_days + t.time_transitive_days
        assert reduced_lag(r, r) == LagTotals()
        for dep in r.per_dependency.values():
            assert (dep.time_lag_days == 0) == (dep.latest_release == dep.version)
