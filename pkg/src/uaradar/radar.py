"""Five-axis similarity radar: backbone comparison, report serialization,
deterministic SVG rendering, and per-group aggregation."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import textdiff
from .assetdiff import asset_contributions, similarity_from_contributions
from .backbone import Backbone, effective_visual_dissimilarity
from .domstruct import DomTree, MatchGraph, serialize_html, sftm_match, structure_similarity
from .errors import ConfigMismatch, EmptyInput, PageUrlMismatch, PhaseMismatch
from .snapshot import BrowserConfig, atomic_write_text, pair_record_lists
from .visualdiff import raw_dissimilarity

AXES = ("html_structure", "html_content", "visual", "javascript", "css")

AXIS_LABELS = {
    "html_structure": "HTML structure",
    "html_content": "HTML content",
    "visual": "Visual rendering",
    "javascript": "JavaScript",
    "css": "CSS",
}

STATUS_MARKERS = ("captcha", "403", "forbidden", "error")
_HUNK_TEXT_CAP = 200


@dataclass
class RadarReport:
    page_url: str
    pair_label: str
    phase: str
    axes: dict[str, float | None]
    evidence: dict
    created_at: str
    left_config: BrowserConfig | None = None
    right_config: BrowserConfig | None = None

    def to_dict(self) -> dict:
        axes = {k: (None if v is None else round(v, 6)) for k, v in self.axes.items()}
        out = {
            "page_url": self.page_url,
            "pair_label": self.pair_label,
            "phase": self.phase,
            "axes": {k: axes[k] for k in AXES},
            "evidence": self.evidence,
            "created_at": self.created_at,
        }
        for side, cfg in (("left_config", self.left_config), ("right_config", self.right_config)):
            if cfg is not None:
                out[side] = {"engine_id": cfg.engine_id, "ua_mode": cfg.ua_mode, "label": cfg.label}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "RadarReport":
        def cfg(key):
            c = d.get(key)
            return BrowserConfig(c["engine_id"], c["ua_mode"], c["label"]) if c else None

        return cls(d["page_url"], d["pair_label"], d["phase"], dict(d["axes"]),
                   d.get("evidence", {}), d.get("created_at", ""),
                   cfg("left_config"), cfg("right_config"))


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _attr_changes(g: MatchGraph, d1: DomTree, d2: DomTree) -> list[dict]:
    """Attribute-level differences: diffs on updated pairs plus attributes
    of unmatched nodes on either side."""
    out: list[dict] = []
    for l, r, label in g.matched:
        if label != "updated":
            continue
        a1, a2 = d1.nodes[l].attrs, d2.nodes[r].attrs
        for key in sorted(set(a1) | set(a2)):
            if a1.get(key) != a2.get(key):
                out.append({"tag": d1.nodes[l].tag, "attr": key,
                            "left": a1.get(key), "right": a2.get(key)})
    for nid in g.unmatched_left:
        n = d1.nodes[nid]
        for key in sorted(n.attrs):
            out.append({"tag": n.tag, "attr": key, "left": n.attrs[key], "right": None})
    for nid in g.unmatched_right:
        n = d2.nodes[nid]
        for key in sorted(n.attrs):
            out.append({"tag": n.tag, "attr": key, "left": None, "right": n.attrs[key]})
    out.sort(key=lambda e: (e["tag"], e["attr"], str(e["left"]), str(e["right"])))
    return out


def _markers(text: str, http_status: int | None) -> list[str]:
    found = set()
    low = text.lower()
    for marker in STATUS_MARKERS:
        if re.search(rf"\b{re.escape(marker)}\b", low):
            found.add(marker)
    if http_status is not None and http_status >= 400:
        found.add("403" if http_status == 403 else "error")
    return sorted(found)


def _hunk_digest(op: str, text: str) -> str:
    return hashlib.sha256(f"{op}:{text}".encode("utf-8", "replace")).hexdigest()[:16]


def compare_backbones(a: Backbone, b: Backbone, raw_content: bool = False) -> RadarReport:
    """Score two backbones on the five similarity axes with full evidence.

    raw_content switches the content axis from extracted visible text to
    serialized markup (for pre-JS differential-serving checks).
    """
    if a.phase != b.phase:
        raise PhaseMismatch(f"{a.phase} != {b.phase}")
    if a.page_url != b.page_url:
        raise PageUrlMismatch(f"{a.page_url} != {b.page_url}")
    if (a.screenshot_full_page is not None and b.screenshot_full_page is not None
            and a.screenshot_full_page != b.screenshot_full_page):
        raise ConfigMismatch("screenshot full-page flags differ")

    graph = sftm_match(a.stable_dom, b.stable_dom)
    s1 = structure_similarity(graph)
    updated = sum(1 for _, _, lab in graph.matched if lab == "updated")

    if raw_content:
        text_a, text_b = serialize_html(a.stable_dom), serialize_html(b.stable_dom)
    else:
        text_a, text_b = a.stable_text, b.stable_text
    script = textdiff.myers_diff(text_a, text_b)
    d = textdiff.hunk_levenshtein(script)
    if len(text_a) + len(text_b) == 0:
        s2 = 1.0
    else:
        s2 = 1.0 - 2.0 * d / (len(text_a) + len(text_b) + d)
    changed_hunks = [
        {"op": op, "digest": _hunk_digest(op, text), "text": text[:_HUNK_TEXT_CAP]}
        for op, text in script.hunks if op != textdiff.EQUAL
    ]

    pairing = pair_record_lists(a.stable_resources, b.stable_resources,
                                a.read_resource, b.read_resource)
    js_files = asset_contributions(pairing, "script", a.read_resource, b.read_resource)
    css_files = asset_contributions(pairing, "stylesheet", a.read_resource, b.read_resource)
    s_js = similarity_from_contributions(js_files)
    s_css = similarity_from_contributions(css_files)

    evidence = {
        "html_structure": {
            "edges": graph.edge_count,
            "ops": graph.op_count,
            "matched": len(graph.matched),
            "updated": updated,
            "unmatched_left": len(graph.unmatched_left),
            "unmatched_right": len(graph.unmatched_right),
            "attr_changes": _attr_changes(graph, a.stable_dom, b.stable_dom),
        },
        "html_content": {
            "d": d,
            "len_left": len(text_a),
            "len_right": len(text_b),
            "raw_mode": raw_content,
            "changed_hunks": changed_hunks,
            "markers_left": _markers(a.stable_text, a.http_status),
            "markers_right": _markers(b.stable_text, b.http_status),
        },
        "javascript": {
            "units": sum(f["units"] for f in js_files),
            "ops": sum(f["op_count"] for f in js_files),
            "files": js_files,
        },
        "css": {
            "units": sum(f["units"] for f in css_files),
            "ops": sum(f["op_count"] for f in css_files),
            "files": css_files,
        },
    }

    if a.phase == "post_js" and a.screenshot_profile is not None and b.screenshot_profile is not None:
        cross = raw_dissimilarity(a.screenshot_profile, b.screenshot_profile)
        eff = effective_visual_dissimilarity(cross, a.visual_floor, b.visual_floor)
        visual = 1.0 - eff / 2.0
        evidence["visual"] = {
            "cross_raw": cross,
            "floor_left": a.visual_floor,
            "floor_right": b.visual_floor,
            "effective_raw": eff,
            "profile_left": _profile_evidence(a.screenshot_profile),
            "profile_right": _profile_evidence(b.screenshot_profile),
        }
    else:
        visual = None
        evidence["visual"] = None

    axes = {"html_structure": s1, "html_content": s2, "visual": visual,
            "javascript": s_js, "css": s_css}
    return RadarReport(a.page_url, a.config.label + b.config.label, a.phase,
                       axes, evidence, _utcnow(), a.config, b.config)


def _profile_evidence(p) -> dict:
    return {"count": p.count, "weighted_area": round(p.weighted_area, 6),
            "weighted_moment": round(p.weighted_moment, 6), "gm": round(p.gm, 6)}


def recompute_axis(report: RadarReport, axis: str) -> float | None:
    """Re-derive one axis value from its evidence block."""
    if axis == "html_structure":
        e = report.evidence["html_structure"]
        return 1.0 if e["edges"] == 0 else 1.0 - e["ops"] / e["edges"]
    if axis == "html_content":
        e = report.evidence["html_content"]
        total = e["len_left"] + e["len_right"]
        return 1.0 if total == 0 else 1.0 - 2.0 * e["d"] / (total + e["d"])
    if axis in ("javascript", "css"):
        e = report.evidence[axis]
        return 1.0 if e["units"] == 0 else max(0.0, 1.0 - e["ops"] / e["units"])
    if axis == "visual":
        ev = report.evidence.get("visual")
        if ev is None:
            return None
        return 1.0 - ev["effective_raw"] / 2.0
    raise ValueError(axis)


def write_report(report: RadarReport, path: str | Path) -> None:
    atomic_write_text(Path(path), json.dumps(report.to_dict(), indent=2, sort_keys=True))


def load_report(path: str | Path) -> RadarReport:
    return RadarReport.from_dict(json.loads(Path(path).read_text("utf-8")))


def aggregate_reports(reports: list[RadarReport], group_key: str) -> RadarReport:
    """Arithmetic mean per axis, skipping null axes; evidence keeps counts."""
    if not reports:
        raise EmptyInput("no reports to aggregate")
    axes: dict[str, float | None] = {}
    counts: dict[str, int] = {}
    for axis in AXES:
        values = [r.axes[axis] for r in reports if r.axes.get(axis) is not None]
        counts[axis] = len(values)
        axes[axis] = sum(values) / len(values) if values else None
    page_urls = {r.page_url for r in reports}
    phases = {r.phase for r in reports}
    return RadarReport(
        page_url=page_urls.pop() if len(page_urls) == 1 else "multiple",
        pair_label=group_key,
        phase=phases.pop() if len(phases) == 1 else "mixed",
        axes=axes,
        evidence={"axis_sample_counts": counts, "report_count": len(reports)},
        created_at=_utcnow(),
    )


# ---------------------------------------------------------------------------
# SVG

_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c")
_CX, _CY, _R = 300.0, 250.0, 185.0
_W, _H = 600, 560


def _vertex(axis_index: int, score: float) -> tuple[float, float]:
    import math
    angle = math.radians(-90.0 + 72.0 * axis_index)
    return (_CX + _R * score * math.cos(angle), _CY + _R * score * math.sin(angle))


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def emit_radar_svg(reports: list[RadarReport], out: str | Path) -> None:
    """Render 1-3 reports of one page as a deterministic radar SVG."""
    if not 1 <= len(reports) <= 3:
        raise EmptyInput(f"expected 1-3 reports, got {len(reports)}")
    urls = {r.page_url for r in reports}
    if len(urls) != 1:
        raise PageUrlMismatch(f"reports span multiple pages: {sorted(urls)}")

    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">'
    )
    parts.append(f'<rect width="{_W}" height="{_H}" fill="white"/>')
    title = next(iter(urls))
    parts.append(
        f'<text x="{_fmt(_CX)}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{_xml_escape(title)}</text>'
    )
    # grid rings
    for frac in (0.2, 0.4, 0.6, 0.8, 1.0):
        ring = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in
                        (_vertex(i, frac) for i in range(5)))
        parts.append(f'<polygon points="{ring}" fill="none" stroke="#cccccc" stroke-width="1"/>')
    # axis spokes and labels
    for i, axis in enumerate(AXES):
        x, y = _vertex(i, 1.0)
        parts.append(f'<line x1="{_fmt(_CX)}" y1="{_fmt(_CY)}" x2="{_fmt(x)}" y2="{_fmt(y)}" '
                     f'stroke="#999999" stroke-width="1"/>')
        lx, ly = _vertex(i, 1.13)
        parts.append(f'<text x="{_fmt(lx)}" y="{_fmt(ly)}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12">{AXIS_LABELS[axis]}</text>')
    # one polygon per report
    for k, report in enumerate(reports):
        color = _PALETTE[k]
        pts = []
        hollow = []
        for i, axis in enumerate(AXES):
            score = report.axes.get(axis)
            if score is None:
                pts.append(_vertex(i, 0.0))
                hollow.append(i)
            else:
                pts.append(_vertex(i, max(0.0, min(1.0, score))))
        poly = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        parts.append(f'<polygon points="{poly}" fill="{color}" fill-opacity="0.15" '
                     f'stroke="{color}" stroke-width="2"/>')
        for i, (x, y) in enumerate(pts):
            if i in hollow:
                parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="4" '
                             f'fill="white" stroke="{color}" stroke-width="1.5"/>')
            else:
                parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" fill="{color}"/>')
    # legend
    ly = _H - 20.0 * len(reports) - 10.0
    for k, report in enumerate(reports):
        color = _PALETTE[k]
        y = ly + 20.0 * k
        parts.append(f'<rect x="20" y="{_fmt(y)}" width="14" height="14" fill="{color}"/>')
        parts.append(f'<text x="40" y="{_fmt(y + 12.0)}" font-family="sans-serif" '
                     f'font-size="12">{_xml_escape(report.pair_label)} ({report.phase})</text>')
    parts.append("</svg>")
    atomic_write_text(Path(out), "\n".join(parts) + "\n")


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
