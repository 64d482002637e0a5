"""Command-line orchestrator: validate, backbone, compare, classify,
batch, aggregate."""

from __future__ import annotations

import argparse
import glob
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import backbone as bb
from . import impact as imp
from . import radar as rd
from .errors import IncompleteEntry, UaRadarError
from .snapshot import load_snapshot

WORKERS_ENV = "UARADAR_WORKERS"


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def cmd_validate(args) -> int:
    try:
        snap = load_snapshot(args.dir)
    except UaRadarError as exc:
        print(f"INVALID {args.dir}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"OK {args.dir}: {snap.config.label}/{snap.phase}/visit{snap.visit_index} "
          f"{len(snap.resources)} resources")
    for w in snap.warnings:
        print(f"  warning: {w}")
    return 0


def cmd_backbone(args) -> int:
    v1 = load_snapshot(args.v1)
    v2 = load_snapshot(args.v2)
    b = bb.extract_backbone(v1, v2)
    bb.write_backbone(b, args.out)
    print(f"backbone written to {args.out}: {len(b.stable_dom)} stable nodes "
          f"({b.pruned_node_count} pruned), {len(b.stable_resources)} stable resources, "
          f"visual floor {b.visual_floor:.6f}")
    return 0


def cmd_compare(args) -> int:
    a = bb.load_backbone(args.a)
    b = bb.load_backbone(args.b)
    report = rd.compare_backbones(a, b, raw_content=args.raw_html_content)
    rd.write_report(report, args.out)
    axes = ", ".join(f"{k}={'null' if v is None else f'{v:.4f}'}"
                     for k, v in report.axes.items())
    print(f"{report.pair_label}/{report.phase}: {axes}")
    if args.svg:
        rd.emit_radar_svg([report], args.svg)
    return 0


def cmd_classify(args) -> int:
    paths = sorted(glob.glob(args.reports))
    if not paths:
        print(f"no reports match {args.reports}", file=sys.stderr)
        return 1
    reports = [rd.load_report(p) for p in paths]
    reports = [r for r in reports if r.phase == args.phase]
    by_page: dict[str, list[rd.RadarReport]] = {}
    for r in reports:
        by_page.setdefault(r.page_url, []).append(r)
    results = []
    failed = False
    for page_url in sorted(by_page):
        try:
            results.append(classify_page(page_url, by_page[page_url]))
        except UaRadarError as exc:
            print(f"classify failed for {page_url}: {exc}", file=sys.stderr)
            failed = True
    imp.write_impact_json(results, args.out)
    for r in results:
        print(f"{r.page_url}: {r.label} ({r.severity})")
    return 1 if failed else 0


def classify_page(page_url: str, reports: list[rd.RadarReport]) -> imp.ImpactReport:
    """Split one page's reports into standard/None groups and classify."""
    std_none = []
    std_std = []
    for r in reports:
        if r.left_config is None or r.right_config is None:
            continue
        modes = {r.left_config.ua_mode, r.right_config.ua_mode}
        delta = imp.extract_delta(r)
        if modes == {"standard", "none"}:
            std_none.append(delta)
        elif modes == {"standard"}:
            std_std.append(delta)
    return imp.classify_impact(std_none, std_std, page_url=page_url)


def _pair_key(label: str, phase: str) -> str:
    return f"{label}_{phase}"


def default_pairs(configs: dict) -> list[tuple[str, str]]:
    """Standard-vs-None per engine, then all standard-standard pairs."""
    std = [lab for lab, c in configs.items() if c["ua_mode"] == "standard"]
    none = [lab for lab, c in configs.items() if c["ua_mode"] == "none"]
    pairs: list[tuple[str, str]] = []
    for s in std:
        for n in none:
            if configs[s]["engine_id"] == configs[n]["engine_id"]:
                pairs.append((s, n))
    for i, s1 in enumerate(std):
        for s2 in std[i + 1:]:
            pairs.append((s1, s2))
    return pairs


def run_compare_entry(entry: dict, pairs: list[tuple[str, str]] | None,
                      out_dir: Path, raw_content: bool = False) -> dict:
    """Process one batch entry: backbones per config+phase, then all pair
    comparisons, impact classification, and report files."""
    page_url = entry["page_url"]
    configs: dict[str, dict] = {}
    backbones: dict[tuple[str, str], bb.Backbone] = {}
    warnings: list[str] = []

    for label, phases in entry["configs"].items():
        first = None
        for phase, dirs in phases.items():
            if len(dirs) != 2:
                raise IncompleteEntry(f"{label}/{phase}: expected 2 visit dirs, got {len(dirs)}")
            v1 = load_snapshot(dirs[0])
            v2 = load_snapshot(dirs[1])
            if {v1.visit_index, v2.visit_index} != {1, 2}:
                raise IncompleteEntry(f"{label}/{phase}: need visit indexes 1 and 2")
            if v1.visit_index == 2:
                v1, v2 = v2, v1
            backbones[(label, phase)] = bb.extract_backbone(v1, v2)
            first = v1
        configs[label] = {"engine_id": first.config.engine_id, "ua_mode": first.config.ua_mode}

    if pairs is None:
        pairs = default_pairs(configs)

    slug = slugify(page_url)
    page_dir = out_dir / slug
    page_dir.mkdir(parents=True, exist_ok=True)
    reports: list[rd.RadarReport] = []
    for left, right in pairs:
        for phase in ("pre_js", "post_js"):
            ka, kb = (left, phase), (right, phase)
            if ka not in backbones or kb not in backbones:
                warnings.append(f"skipped {left}{right}/{phase}: missing inputs")
                continue
            report = rd.compare_backbones(backbones[ka], backbones[kb], raw_content=raw_content)
            rd.write_report(report, page_dir / f"report_{_pair_key(report.pair_label, phase)}.json")
            reports.append(report)

    impact_row = None
    post = [r for r in reports if r.phase == "post_js"]
    if post:
        try:
            impact = classify_page(page_url, post)
            imp.write_impact_json([impact], page_dir / "impact.json")
            impact_row = impact
        except UaRadarError as exc:
            warnings.append(f"impact classification skipped: {exc}")

    return {"page_url": page_url, "slug": slug, "reports": reports,
            "impact": impact_row, "warnings": warnings}


def slugify(url: str) -> str:
    return re.sub(r"[^a-zA-Z0-9._-]+", "_", url).strip("_")[:120] or "page"


def cmd_batch(args) -> int:
    plan = json.loads(Path(args.plan).read_text("utf-8"))
    out_dir = Path(plan.get("output_dir", "uaradar-out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = args.workers or plan.get("workers") or _default_workers()
    pairs = [tuple(p) for p in plan["pairs"]] if "pairs" in plan else None
    entries = plan["entries"]

    results: list[dict | None] = [None] * len(entries)
    errors: list[str] = []

    def work(idx: int):
        entry = entries[idx]
        try:
            results[idx] = run_compare_entry(entry, pairs, out_dir,
                                             raw_content=args.raw_html_content)
        except Exception as exc:
            if args.strict_entry:
                raise
            errors.append(f"{entry.get('page_url', f'entry {idx}')}: "
                          f"{type(exc).__name__}: {exc}")

    if workers <= 1:
        for i in range(len(entries)):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(len(entries))))

    done = [r for r in results if r is not None]
    impacts = [r["impact"] for r in done if r["impact"] is not None]
    imp.write_impact_csv(impacts, out_dir / "batch_summary.csv")

    group = plan.get("group")
    if group:
        by_pair: dict[tuple[str, str], list[rd.RadarReport]] = {}
        for r in done:
            for report in r["reports"]:
                by_pair.setdefault((report.pair_label, report.phase), []).append(report)
        for (pair_label, phase), group_reports in sorted(by_pair.items()):
            agg = rd.aggregate_reports(group_reports, group)
            rd.write_report(agg, out_dir / f"aggregate_{group}_{_pair_key(pair_label, phase)}.json")

    log_path = out_dir / "batch_log.txt"
    lines = []
    for r in done:
        lines.append(f"ok {r['page_url']} ({len(r['reports'])} reports)")
        lines.extend(f"  warning: {w}" for w in r["warnings"])
    lines.extend(f"error {e}" for e in errors)
    log_path.write_text("\n".join(lines) + "\n", "utf-8")

    print(f"{len(done)}/{len(entries)} entries processed, reports in {out_dir}")
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    return 1 if errors else 0


def cmd_aggregate(args) -> int:
    paths = sorted(glob.glob(args.reports))
    if not paths:
        print(f"no reports match {args.reports}", file=sys.stderr)
        return 1
    reports = [rd.load_report(p) for p in paths]
    agg = rd.aggregate_reports(reports, args.group)
    rd.write_report(agg, args.out)
    axes = ", ".join(f"{k}={'null' if v is None else f'{v:.4f}'}" for k, v in agg.axes.items())
    print(f"aggregate[{args.group}] over {len(reports)} reports: {axes}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uaradar",
                                     description="web page similarity radar toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a snapshot directory")
    p.add_argument("dir")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("backbone", help="extract the stable backbone of two visits")
    p.add_argument("v1")
    p.add_argument("v2")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_backbone)

    p = sub.add_parser("compare", help="compare two backbone/snapshot directories")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--svg")
    p.add_argument("--raw-html-content", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("classify", help="classify change impact from reports")
    p.add_argument("--reports", required=True, help="glob of report JSON files")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--phase", default="post_js", choices=("pre_js", "post_js"))
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("batch", help="run a corpus plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--strict-entry", action="store_true")
    p.add_argument("--raw-html-content", action="store_true")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("aggregate", help="average reports into one radar")
    p.add_argument("--group", required=True)
    p.add_argument("--reports", required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_aggregate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UaRadarError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
