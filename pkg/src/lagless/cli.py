"""Command-line entry point: ``lagless <subcommand> ...``.

Exit codes: 0 on success, 1 on bad input (including usage errors), 2 when an
internal guarantee is found broken.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from .analysis import depth_impact_study, rows_to_csv
from .errors import InvariantViolation, LaglessError, LoadError
from .graph import ModuleManifest, WorkspaceManifest, build_graph, load_manifest
from .metrics import (
    LagTotals,
    breakage_check,
    lag_report,
    reduced_lag,
    redundant_delta,
    render_table,
)
from .oracle import oracle_plan_check
from .planner import MODES, STRATEGIES, PlannerConfig, plan_workspace, plans_to_dict, replay_plan
from .registry import ArtifactCoordinate, RegistrySnapshot, load_snapshot
from .semver import VersionSpec, parse_version
from .synthgen import GenParams, write_corpus
from .tree import parse_verbose_tree

log = logging.getLogger("lagless")

ORACLE_MAX_ARTIFACTS = 8


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _dump(doc: Any) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_json(path: str, what: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise LoadError(f"cannot read {what} {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise LoadError(f"{path}: invalid JSON: {exc}") from exc


def _module_report(snapshot: RegistrySnapshot, result) -> tuple[dict[str, Any], LagTotals]:
    before = lag_report(snapshot, result.before)
    after = lag_report(snapshot, result.after)
    reduced = reduced_lag(before, after)
    findings = breakage_check(result.after, snapshot, result.before)
    doc = {
        "module": result.module_id,
        "before": before.totals.to_dict(),
        "after": after.totals.to_dict(),
        "reduced": reduced.to_dict(),
        "redundantDelta": redundant_delta(result.before, result.after),
        "breakage": [f.to_dict() for f in findings],
    }
    return doc, reduced


# -- subcommands -------------------------------------------------------------------


def cmd_plan(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(args.snapshot)
    manifest = load_manifest(args.manifest)
    config = PlannerConfig(args.mode, args.strategy, args.max_candidates)
    results = plan_workspace(snapshot, manifest, config)
    _emit(_dump(plans_to_dict(results)), args.out)

    reports, rows = [], []
    total = LagTotals()
    for r in results:
        doc, reduced = _module_report(snapshot, r)
        reports.append(doc)
        rows.append((f"{r.module_id} reduced", reduced))
        total = total + reduced
        if r.plan.errors:
            log.warning("module %s: planning stopped early: %s", r.module_id, "; ".join(r.plan.errors))
    summary = {
        "modules": reports,
        "totals": {
            "reduced": total.to_dict(),
            "redundantDelta": sum(m["redundantDelta"] for m in reports),
            "breakages": sum(len(m["breakage"]) for m in reports),
        },
    }
    if args.report:
        Path(args.report).write_text(_dump(summary), encoding="utf-8")
    if args.format == "table":
        sys.stderr.write(render_table([*rows, ("total reduced", total)]))
    log.info("breakages: %d, redundant delta: %d", summary["totals"]["breakages"], summary["totals"]["redundantDelta"])
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(args.snapshot)
    manifest = load_manifest(args.manifest)
    reports = {}
    for module_id in manifest.module_order():
        reports[module_id] = lag_report(snapshot, build_graph(snapshot, manifest, module_id))
    if args.format == "table":
        _emit(render_table([(m, r.totals) for m, r in reports.items()]), args.out)
    else:
        _emit(_dump({"modules": {m: r.to_dict() for m, r in reports.items()}}), args.out)
    return 0


def _manifest_files(path: str) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        # gen writes snapshot.json and params.json beside manifest.json
        files = sorted(p.rglob("manifest*.json"))
        if not files:
            raise LoadError(f"no manifest files under {p}")
        return files
    if p.is_file():
        return [p]
    raise LoadError(f"no such manifest file or directory: {p}")


def cmd_depth_study(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(args.snapshot)
    manifests = [load_manifest(f) for f in _manifest_files(args.manifests)]
    strategies = STRATEGIES if args.strategy == "all" else (args.strategy,)
    studies = [depth_impact_study(snapshot, manifests, s) for s in strategies]
    rows = [row for study in studies for row in study.rows]
    if args.format == "json":
        _emit(_dump({"studies": [s.to_dict() for s in studies]}), args.out)
    else:
        _emit(rows_to_csv(rows), args.out)
    for s in studies:
        if s.skipped:
            log.warning("%s: skipped %d module(s)", s.strategy, s.skipped)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    doc = _read_json(args.params, "params") if args.params else {}
    if not isinstance(doc, dict):
        raise LoadError("params file must hold a JSON object")
    doc = dict(doc)
    if args.seed is not None:
        doc["seed"] = args.seed
    params = GenParams.from_dict(doc)
    snap, man = write_corpus(params, args.out)
    log.info("wrote %s and %s", snap, man)
    return 0


def cmd_ingest_tree(args: argparse.Namespace) -> int:
    try:
        text = Path(args.tree).read_text(encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot read tree {args.tree}: {exc}") from exc
    graph = parse_verbose_tree(text)
    _emit(_dump(graph.to_dict()), args.out)
    return 0


def _rewritten(module: ModuleManifest, entry: dict[str, Any]) -> ModuleManifest:
    deps = []
    for decl in module.direct_deps:
        node = entry.get("perNode", {}).get(str(decl.target))
        if node and node["selected"] != node["original"]:
            decl = type(decl)(decl.target, VersionSpec.exactly(parse_version(node["selected"])), decl.scope, decl.optional)
        deps.append(decl)
    return ModuleManifest(module.module_id, tuple(deps), module.client_api, module.client_invocations, module.local_deps)


def cmd_verify(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(args.snapshot)
    manifest = load_manifest(args.manifest)
    doc = _read_json(args.plan, "plan")
    if not isinstance(doc, dict) or not isinstance(doc.get("modules"), list):
        raise LoadError("plan file must hold an object with a 'modules' list")
    use_oracle = args.oracle == "always" or (args.oracle == "auto" and len(snapshot) <= ORACLE_MAX_ARTIFACTS)
    problems: list[str] = []
    current = manifest
    for entry in doc["modules"]:
        module_id = entry.get("module")
        mode = PlannerConfig(entry.get("mode", "full")).mode
        strategy = entry.get("strategy", "MMP")
        for coord, node in entry.get("perNode", {}).items():
            if parse_version(node["selected"]) < parse_version(node["original"]):
                problems.append(f"{module_id}: {coord} selected {node['selected']} below original {node['original']}")
        if problems:
            break
        before = build_graph(snapshot, current, module_id)
        steps = [
            (ArtifactCoordinate.parse(c), parse_version(entry["perNode"][c]["selected"]))
            for c in entry.get("processingOrder", [])
        ]
        try:
            after = replay_plan(build_graph(snapshot, current, module_id), snapshot, steps)
        except LaglessError as exc:
            problems.append(f"{module_id}: plan does not replay: {exc}")
            break
        if mode in ("full", "compat-only"):
            for f in breakage_check(after, snapshot, before):
                problems.append(f"{module_id}: {f.dependent} loses {sorted(f.missing_apis)} of {f.node}")
        if mode in ("full", "pruning-only"):
            added = sorted(set(after.dependencies()) - set(before.dependencies()))
            if added or redundant_delta(before, after) > 0:
                problems.append(f"{module_id}: nodes added {[str(c) for c in added]}")
        if use_oracle:
            mismatches, _ = oracle_plan_check(snapshot, current, module_id, entry, mode, strategy)
            problems.extend(f"{module_id}: {m}" for m in mismatches)
        current = current.replace(_rewritten(current.module(module_id), entry))
    if problems:
        raise InvariantViolation("; ".join(problems))
    print(f"plan verified ({len(doc['modules'])} module(s){', oracle checked' if use_oracle else ''})")
    return 0


# -- wiring ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lagless", description="Plan dependency upgrades that lower technical lag safely.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="plan upgrades for every module of a manifest")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", default="full", choices=MODES + ("pruningOnly", "compatOnly"))
    p.add_argument("--strategy", default="MMP", choices=STRATEGIES)
    p.add_argument("--max-candidates", type=int, default=None)
    p.add_argument("--out", help="plan JSON (default: stdout)")
    p.add_argument("--report", help="write lag/breakage report JSON here")
    p.add_argument("--format", default="json", choices=("json", "table"), help="table also prints a lag table to stderr")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("report", help="technical lag of the current graphs")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--format", default="json", choices=("json", "table"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("depth-study", help="breakage by transitive dependency depth")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--manifests", required=True, help="manifest file, or a directory searched for manifest*.json")
    p.add_argument("--strategy", required=True, choices=STRATEGIES + ("all",))
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_depth_study)

    p = sub.add_parser("gen", help="write a synthetic snapshot and manifest")
    p.add_argument("--seed", type=int)
    p.add_argument("--params", help="JSON object of generator parameters")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("ingest-tree", help="parse verbose dependency:tree output")
    p.add_argument("--tree", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest_tree)

    p = sub.add_parser("verify", help="re-check a plan: breakage, redundancy, oracle")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--oracle", default="auto", choices=("auto", "always", "never"))
    p.set_defaults(func=cmd_verify)
    return parser


def _configure_logging(verbose: int) -> None:
    level_name = os.environ.get("LAGLESS_LOG", "").upper()
    level = getattr(logging, level_name, None) if level_name else None
    if not isinstance(level, int):
        level = logging.WARNING
    if verbose:
        level = min(level, logging.INFO if verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 2
    except (LaglessError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
