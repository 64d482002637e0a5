"""Backbone extraction: dynamic-content removal via dual visits."""

import pytest

from uaradar.backbone import (
    effective_visual_dissimilarity,
    extract_backbone,
    load_backbone,
    write_backbone,
)
from uaradar.domstruct import parse_html
from uaradar.errors import ConfigMismatch, PhaseMismatch
from uaradar.snapshot import load_snapshot
from uaradar.textdiff import extract_text

from conftest import write_visit


def doc_with_timestamp(ts: str) -> bytes:
    return (f"<html><head><title>Page</title></head><body>"
            f"<h1>Welcome</h1><p>Stable paragraph text.</p>"
            f"<span id=\"ts\">{ts}</span>"
            f"<div><em>footer</em></div></body></html>").encode()


class TestExtractBackbone:
    def test_identical_visits_keep_everything(self, visit_pair):
        v1, v2 = visit_pair
        b = extract_backbone(v1, v2)
        dom1 = parse_html(v1.read(v1.document()))
        assert b.stable_dom.structurally_equal(dom1)
        assert b.stable_text == extract_text(dom1)
        assert {(r.url, r.digest) for r in b.stable_resources} == {
            (r.url, r.digest) for r in v1.resources if r.kind in ("script", "stylesheet")}
        assert b.visual_floor == 0.0
        assert b.pruned_node_count == 0

    def test_timestamp_text_node_pruned(self, tmp_path):
        # volatile strings use disjoint characters so no equal-hunk residue
        v1 = write_visit(tmp_path / "v1", visit=1, document=doc_with_timestamp("11:11:11"))
        v2 = write_visit(tmp_path / "v2", visit=2, document=doc_with_timestamp("22:22:22"))
        b = extract_backbone(v1, v2)
        tags = [n.tag for n in b.stable_dom.nodes]
        # span kept structurally (matched-updated ancestor? no: span itself
        # matched-updated -> pruned), timestamp text gone either way
        assert "11:11:11" not in extract_text(b.stable_dom)
        assert "Welcome" in b.stable_text
        assert "11" not in b.stable_text and "22" not in b.stable_text
        assert b.pruned_node_count >= 1
        assert "h1" in tags and "em" in tags

    def test_rotated_script_excluded(self, tmp_path):
        common = [("https://cdn.x/lib.js", b"function lib(){return 1}")]
        v1 = write_visit(tmp_path / "v1", visit=1,
                         scripts=common + [("https://ads.x/ad.1111.js", b"track('visit-one')")])
        v2 = write_visit(tmp_path / "v2", visit=2,
                         scripts=common + [("https://ads.x/ad.2222.js", b"track('visit-two')")])
        b = extract_backbone(v1, v2)
        urls = {r.url for r in b.stable_resources}
        assert "https://cdn.x/lib.js" in urls
        assert not any("ads.x" in u for u in urls)
        assert any("ads.x" in u for u in b.volatile_resources)

    def test_same_url_different_digest_is_volatile(self, tmp_path):
        v1 = write_visit(tmp_path / "v1", visit=1,
                         scripts=[("https://x/rotator.js", b"var seed=111111")])
        v2 = write_visit(tmp_path / "v2", visit=2,
                         scripts=[("https://x/rotator.js", b"var seed=222222")])
        b = extract_backbone(v1, v2)
        assert not any(r.url == "https://x/rotator.js" for r in b.stable_resources)
        assert "https://x/rotator.js" in b.volatile_resources

    def test_visual_floor_nonzero_for_differing_screenshots(self, tmp_path):
        from conftest import boxy_screenshot
        v1 = write_visit(tmp_path / "v1", visit=1,
                         screenshot=boxy_screenshot([(10, 10, 40, 20)]))
        v2 = write_visit(tmp_path / "v2", visit=2,
                         screenshot=boxy_screenshot([(10, 10, 40, 20), (60, 50, 30, 20)]))
        b = extract_backbone(v1, v2)
        assert b.visual_floor > 0.0

    def test_pre_js_floor_zero(self, tmp_path):
        v1 = write_visit(tmp_path / "v1", visit=1, phase="pre_js")
        v2 = write_visit(tmp_path / "v2", visit=2, phase="pre_js")
        b = extract_backbone(v1, v2)
        assert b.visual_floor == 0.0
        assert b.screenshot_profile is None

    def test_config_mismatch(self, tmp_path):
        v1 = write_visit(tmp_path / "v1", visit=1, label="C")
        v2 = write_visit(tmp_path / "v2", visit=2, label="F", engine="firefox")
        with pytest.raises(ConfigMismatch):
            extract_backbone(v1, v2)

    def test_phase_mismatch(self, tmp_path):
        v1 = write_visit(tmp_path / "v1", visit=1, phase="pre_js")
        v2 = write_visit(tmp_path / "v2", visit=2, phase="post_js")
        with pytest.raises(PhaseMismatch):
            extract_backbone(v1, v2)

    def test_shrinking(self, tmp_path):
        v1 = write_visit(tmp_path / "v1", visit=1, document=doc_with_timestamp("11:11"))
        v2 = write_visit(tmp_path / "v2", visit=2, document=doc_with_timestamp("22:22"))
        b = extract_backbone(v1, v2)
        dom1 = parse_html(v1.read(v1.document()))
        dom2 = parse_html(v2.read(v2.document()))
        assert len(b.stable_dom) <= min(len(dom1), len(dom2))
        left_keys = {(r.url, r.digest) for r in v1.resources}
        assert all((r.url, r.digest) in left_keys for r in b.stable_resources)


class TestEffectiveVisualDissimilarity:
    def test_floor_subtracted(self):
        assert effective_visual_dissimilarity(0.4, 0.1, 0.3) == pytest.approx(0.1)

    def test_cross_below_floors_clamps_to_zero(self):
        assert effective_visual_dissimilarity(0.2, 0.5, 0.3) == 0.0

    def test_zero_floors_identity(self):
        assert effective_visual_dissimilarity(0.7, 0.0, 0.0) == pytest.approx(0.7)


class TestBackboneSerialization:
    def test_written_backbone_passes_validation(self, visit_pair, tmp_path):
        b = extract_backbone(*visit_pair)
        write_backbone(b, tmp_path / "bb")
        snap = load_snapshot(tmp_path / "bb")
        assert snap.page_url == b.page_url
        assert (tmp_path / "bb" / "backbone.json").is_file()

    def test_idempotence_on_identical_visits(self, visit_pair, tmp_path):
        b = extract_backbone(*visit_pair)
        write_backbone(b, tmp_path / "bb1")
        write_backbone(b, tmp_path / "bb2")
        s1 = load_snapshot(tmp_path / "bb1")
        s2 = load_snapshot(tmp_path / "bb2")
        s2.visit_index = 2
        b2 = extract_backbone(s1, s2)
        assert b2.stable_dom.structurally_equal(b.stable_dom)
        assert b2.stable_text == b.stable_text
        assert {(r.url, r.digest) for r in b2.stable_resources} == {
            (r.url, r.digest) for r in b.stable_resources}
        assert b2.visual_floor == b.visual_floor == 0.0

    def test_no_further_shrinking_with_volatile_fixture(self, tmp_path):
        v1 = write_visit(tmp_path / "v1", visit=1, document=doc_with_timestamp("11:11"))
        v2 = write_visit(tmp_path / "v2", visit=2, document=doc_with_timestamp("22:22"))
        b = extract_backbone(v1, v2)
        write_backbone(b, tmp_path / "bb1")
        write_backbone(b, tmp_path / "bb2")
        s1 = load_snapshot(tmp_path / "bb1")
        s2 = load_snapshot(tmp_path / "bb2")
        s2.visit_index = 2
        b2 = extract_backbone(s1, s2)
        assert b2.stable_dom.structurally_equal(b.stable_dom)
        assert {(r.url, r.digest) for r in b2.stable_resources} == {
            (r.url, r.digest) for r in b.stable_resources}

    def test_load_backbone_roundtrip(self, visit_pair, tmp_path):
        b = extract_backbone(*visit_pair)
        write_backbone(b, tmp_path / "bb")
        loaded = load_backbone(tmp_path / "bb")
        assert loaded.stable_text == b.stable_text
        assert loaded.visual_floor == b.visual_floor
        assert loaded.screenshot_profile == b.screenshot_profile
        assert loaded.stable_dom.structurally_equal(b.stable_dom)

    def test_plain_snapshot_loads_as_degenerate_backbone(self, tmp_path):
        write_visit(tmp_path / "s")
        b = load_backbone(tmp_path / "s")
        assert b.visual_floor == 0.0
        assert b.screenshot_profile is not None
