"""Backbone extraction: intersect two same-configuration visits to strip
dynamic content before any cross-configuration comparison.

The DOM backbone keeps nodes matched unchanged between the visits plus
their ancestors (ancestors kept structurally with volatile text cleared);
text keeps only the equal diff hunks; resources survive on strict
(url, digest) intersection; the screenshots' self-dissimilarity becomes a
noise floor subtracted from cross-configuration visual scores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import textdiff
from .domstruct import DomNode, DomTree, parse_html, serialize_html, sftm_match
from .errors import ConfigMismatch, PhaseMismatch
from .snapshot import (
    BrowserConfig,
    ResourceRecord,
    Snapshot,
    atomic_write_text,
    load_snapshot,
    write_snapshot,
)
from .visualdiff import ContourProfile, binarize_otsu, contour_profile, raw_dissimilarity


@dataclass
class Backbone:
    page_url: str
    config: BrowserConfig
    phase: str
    stable_dom: DomTree
    stable_text: str
    stable_resources: list[ResourceRecord]
    visual_floor: float
    source_visits: tuple[str, str]
    screenshot_profile: ContourProfile | None = None
    resource_root: Path | None = None
    screenshot_path: Path | None = None
    screenshot_full_page: bool | None = None
    pruned_node_count: int = 0
    volatile_resources: list[str] = field(default_factory=list)
    http_status: int | None = None

    def read_resource(self, record: ResourceRecord) -> bytes:
        return (self.resource_root / record.path).read_bytes()


def extract_backbone(v1: Snapshot, v2: Snapshot) -> Backbone:
    """Build the stable backbone of two visits sharing page, config, phase."""
    if v1.config != v2.config:
        raise ConfigMismatch(f"{v1.config} != {v2.config}")
    if v1.phase != v2.phase:
        raise PhaseMismatch(f"{v1.phase} != {v2.phase}")
    if v1.page_url != v2.page_url:
        raise ConfigMismatch(f"{v1.page_url} != {v2.page_url}")
    if {v1.visit_index, v2.visit_index} != {1, 2}:
        raise ConfigMismatch("expected visit indexes 1 and 2")

    dom1 = parse_html(v1.read(v1.document()))
    dom2 = parse_html(v2.read(v2.document()))
    graph = sftm_match(dom1, dom2)
    stable_dom, pruned = _prune_dom(dom1, graph)

    text1 = textdiff.extract_text(dom1)
    text2 = textdiff.extract_text(dom2)
    stable_text = textdiff.myers_diff(text1, text2).equal_text()

    subres1 = [r for r in v1.resources if r.kind in ("script", "stylesheet")]
    subres2 = [r for r in v2.resources if r.kind in ("script", "stylesheet")]
    keys2 = {(r.url, r.digest) for r in subres2}
    stable_resources = [r for r in subres1 if (r.url, r.digest) in keys2]
    stable_urls = {r.url for r in stable_resources}
    volatile = sorted(({r.url for r in subres1} | {r.url for r in subres2}) - stable_urls)

    floor = 0.0
    profile = None
    shot_path = None
    shot1 = v1.screenshot()
    shot2 = v2.screenshot()
    if shot1 is not None and shot2 is not None:
        p1 = contour_profile(binarize_otsu(v1.read(shot1)))
        p2 = contour_profile(binarize_otsu(v2.read(shot2)))
        floor = raw_dissimilarity(p1, p2)
        profile = p1  # visit 1 is the representative image
        shot_path = v1.root / shot1.path if v1.root else None

    return Backbone(
        page_url=v1.page_url,
        config=v1.config,
        phase=v1.phase,
        stable_dom=stable_dom,
        stable_text=stable_text,
        stable_resources=stable_resources,
        visual_floor=floor,
        source_visits=(f"{v1.root or v1.captured_at}", f"{v2.root or v2.captured_at}"),
        screenshot_profile=profile,
        resource_root=v1.root,
        screenshot_path=shot_path,
        screenshot_full_page=v1.screenshot_full_page,
        pruned_node_count=pruned,
        volatile_resources=volatile,
        http_status=v1.http_status if v1.http_status == v2.http_status else None,
    )


def _prune_dom(dom: DomTree, graph) -> tuple[DomTree, int]:
    """Keep matched-unchanged nodes and their ancestors; clear ancestor text."""
    unchanged = {l for l, _, lab in graph.matched if lab == "unchanged"}
    keep: set[int] = set()
    for nid in unchanged:
        n: int | None = nid
        while n is not None and n not in keep:
            keep.add(n)
            n = dom.nodes[n].parent
    if not keep:
        keep = {dom.root}  # root retained so the backbone stays a tree
    nodes: list[DomNode] = []

    def emit(old: int, parent: int | None) -> int:
        src = dom.nodes[old]
        nid = len(nodes)
        text = src.text if old in unchanged else ""
        nodes.append(DomNode(src.tag, dict(src.attrs), text, parent))
        for c in src.children:
            if c in keep:
                cid = emit(c, nid)
                nodes[nid].children.append(cid)
        return nid

    emit(dom.root, None)
    return DomTree(nodes), len(dom) - len(keep)


def effective_visual_dissimilarity(cross: float, floor_a: float, floor_b: float) -> float:
    """Cross-pair dissimilarity with the larger self-visit noise floor removed."""
    return max(0.0, cross - max(floor_a, floor_b))


def write_backbone(b: Backbone, dir: str | Path) -> None:
    """Serialize a backbone as a snapshot-shaped directory plus backbone.json."""
    root = Path(dir)
    root.mkdir(parents=True, exist_ok=True)
    scripts = []
    stylesheets = []
    for rec in b.stable_resources:
        data = b.read_resource(rec)
        (scripts if rec.kind == "script" else stylesheets).append((rec.url, data))
    screenshot = b.screenshot_path.read_bytes() if b.screenshot_path else None
    write_snapshot(
        root,
        page_url=b.page_url,
        config=b.config,
        phase=b.phase,
        visit_index=1,
        document=serialize_html(b.stable_dom).encode("utf-8"),
        scripts=scripts,
        stylesheets=stylesheets,
        screenshot=screenshot,
        screenshot_full_page=b.screenshot_full_page,
    )
    meta = {
        "visual_floor": b.visual_floor,
        "pruned_node_count": b.pruned_node_count,
        "volatile_resources": b.volatile_resources,
        "stable_text": b.stable_text,
        "source_visits": list(b.source_visits),
        "screenshot_profile": _profile_dict(b.screenshot_profile),
    }
    atomic_write_text(root / "backbone.json", json.dumps(meta, indent=2))


def load_backbone(dir: str | Path) -> Backbone:
    """Load a directory as a Backbone.

    A plain snapshot directory (no backbone.json) loads as a degenerate
    backbone with zero floor, so single captures can be compared directly.
    """
    root = Path(dir)
    snap = load_snapshot(root)
    dom = parse_html(snap.read(snap.document()))
    meta_path = root / "backbone.json"
    if meta_path.is_file():
        meta = json.loads(meta_path.read_text("utf-8"))
        stable_text = meta["stable_text"]
        floor = meta["visual_floor"]
        pruned = meta.get("pruned_node_count", 0)
        volatile = meta.get("volatile_resources", [])
        profile = _profile_from_dict(meta.get("screenshot_profile"))
        visits = tuple(meta.get("source_visits", (str(root), str(root))))
    else:
        stable_text = textdiff.extract_text(dom)
        floor = 0.0
        pruned = 0
        volatile = []
        profile = None
        visits = (str(root), str(root))
    shot = snap.screenshot()
    if profile is None and shot is not None:
        profile = contour_profile(binarize_otsu(snap.read(shot)))
    return Backbone(
        page_url=snap.page_url,
        config=snap.config,
        phase=snap.phase,
        stable_dom=dom,
        stable_text=stable_text,
        stable_resources=[r for r in snap.resources if r.kind in ("script", "stylesheet")],
        visual_floor=floor,
        source_visits=visits,
        screenshot_profile=profile,
        resource_root=root,
        screenshot_path=root / shot.path if shot else None,
        screenshot_full_page=snap.screenshot_full_page,
        pruned_node_count=pruned,
        volatile_resources=volatile,
        http_status=snap.http_status,
    )


def _profile_dict(p: ContourProfile | None) -> dict | None:
    if p is None:
        return None
    return {"count": p.count, "weighted_area": p.weighted_area,
            "weighted_moment": p.weighted_moment, "gm": p.gm}


def _profile_from_dict(d: dict | None) -> ContourProfile | None:
    if d is None:
        return None
    return ContourProfile(d["count"], d["weighted_area"], d["weighted_moment"], d["gm"])
