"""Snapshot format loading, validation, and resource pairing."""

import json

import pytest

from uaradar.assetdiff import hamming, simhash64
from uaradar.errors import (
    DigestMismatch,
    MissingFile,
    MissingManifest,
    PageUrlMismatch,
    SchemaViolation,
)
from uaradar.snapshot import (
    BrowserConfig,
    load_snapshot,
    pair_resources,
    write_snapshot,
)

from conftest import blank_screenshot, write_visit
from test_assetdiff import bundle_fixture, renamed_bundle_fixture


class TestLoadSnapshot:
    def test_roundtrip(self, tmp_path):
        written = write_visit(tmp_path / "s")
        loaded = load_snapshot(tmp_path / "s")
        assert loaded.page_url == written.page_url
        assert loaded.config == written.config
        assert loaded.phase == written.phase
        assert loaded.visit_index == written.visit_index
        assert loaded.captured_at == written.captured_at
        assert loaded.resources == written.resources  # order preserved

    def test_resource_count(self, tmp_path):
        snap = write_visit(
            tmp_path / "s",
            scripts=[("https://x/a.js", b"var a=1"), ("https://x/b.js", b"var b=2")],
            stylesheets=[("https://x/c.css", b"a{x:1}")],
        )
        # 1 document + 2 scripts + 1 stylesheet + 1 screenshot
        assert len(snap.resources) == 5

    def test_missing_manifest(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(MissingManifest):
            load_snapshot(tmp_path / "empty")

    def test_truncated_file_digest_mismatch(self, tmp_path):
        write_visit(tmp_path / "s")
        victim = next((tmp_path / "s" / "resources").iterdir())
        victim.write_bytes(victim.read_bytes()[:-3])
        with pytest.raises(DigestMismatch):
            load_snapshot(tmp_path / "s")

    def test_missing_file(self, tmp_path):
        write_visit(tmp_path / "s")
        next((tmp_path / "s" / "resources").iterdir()).unlink()
        with pytest.raises(MissingFile):
            load_snapshot(tmp_path / "s")

    def test_post_js_without_screenshot(self, tmp_path):
        write_visit(tmp_path / "s")
        manifest_path = tmp_path / "s" / "manifest.json"
        manifest = json.loads(manifest_path.read_text())
        manifest["resources"] = [r for r in manifest["resources"]
                                 if r["kind"] != "screenshot"]
        manifest_path.write_text(json.dumps(manifest))
        with pytest.raises(SchemaViolation) as exc:
            load_snapshot(tmp_path / "s")
        assert exc.value.field == "screenshot"

    def test_missing_required_field(self, tmp_path):
        write_visit(tmp_path / "s")
        manifest_path = tmp_path / "s" / "manifest.json"
        manifest = json.loads(manifest_path.read_text())
        del manifest["captured_at"]
        manifest_path.write_text(json.dumps(manifest))
        with pytest.raises(SchemaViolation) as exc:
            load_snapshot(tmp_path / "s")
        assert exc.value.field == "captured_at"

    def test_duplicate_url_kept_first_with_warning(self, tmp_path):
        snap = write_visit(
            tmp_path / "s",
            scripts=[("https://x/a.js", b"var a=1"), ("https://x/a.js", b"var a=2")],
        )
        assert len([r for r in snap.resources if r.kind == "script"]) == 1
        assert any("duplicate" in w for w in snap.warnings)

    def test_pre_js_no_screenshot_ok(self, tmp_path):
        snap = write_visit(tmp_path / "s", phase="pre_js")
        assert snap.screenshot() is None


class TestPairResources:
    def test_identity_pairing_all_exact(self, tmp_path):
        a = write_visit(tmp_path / "a")
        pairing = pair_resources(a, a)
        assert all(p.match_basis == "exact_url" for p in pairing.pairs)
        assert all(p.left is not None and p.right is not None for p in pairing.pairs)

    def test_exact_url_with_query(self, tmp_path):
        a = write_visit(tmp_path / "a", scripts=[("https://x/a.js?v=1", b"var a=1")])
        b = write_visit(tmp_path / "b", scripts=[("https://x/a.js?v=1", b"var a=1")])
        pairing = pair_resources(a, b)
        script_pairs = pairing.of_kind("script")
        assert len(script_pairs) == 1
        assert script_pairs[0].match_basis == "exact_url"

    def test_path_no_query_fallback(self, tmp_path):
        a = write_visit(tmp_path / "a", scripts=[("https://x/app.js?v=1", b"var a=1")])
        b = write_visit(tmp_path / "b", scripts=[("https://x/app.js?v=2", b"var a=1;var b=2")])
        pairing = pair_resources(a, b)
        script_pairs = pairing.of_kind("script")
        assert len(script_pairs) == 1
        assert script_pairs[0].match_basis == "path_no_query"

    def test_lsh_nearest_on_renamed_bundle(self, tmp_path):
        left_js = bundle_fixture()
        right_js = renamed_bundle_fixture()
        # oracle: exhaustive pairwise Hamming over all candidates
        assert hamming(simhash64(left_js), simhash64(right_js)) == 3
        a = write_visit(tmp_path / "a", scripts=[("https://x/bundle.abc123.js", left_js)])
        b = write_visit(tmp_path / "b", scripts=[("https://x/bundle.def456.js", right_js)])
        pairing = pair_resources(a, b)
        script_pairs = pairing.of_kind("script")
        assert len(script_pairs) == 1
        assert script_pairs[0].match_basis == "lsh_nearest"

    def test_unrelated_scripts_unmatched(self, tmp_path):
        import random
        from conftest import make_js_corpus_file
        rng = random.Random(5150)
        a = write_visit(tmp_path / "a", scripts=[("https://x/one.js", make_js_corpus_file(rng))])
        b = write_visit(tmp_path / "b", scripts=[("https://y/two.js", make_js_corpus_file(rng))])
        pairing = pair_resources(a, b)
        script_pairs = pairing.of_kind("script")
        assert sorted(p.match_basis for p in script_pairs) == ["unmatched", "unmatched"]

    def test_each_resource_in_exactly_one_pair(self, tmp_path):
        a = write_visit(tmp_path / "a", scripts=[("https://x/a.js", b"var a=1"),
                                                 ("https://x/b.js", b"var b=2")])
        b = write_visit(tmp_path / "b", scripts=[("https://x/a.js", b"var a=1")])
        pairing = pair_resources(a, b)
        seen_left = [p.left for p in pairing.pairs if p.left]
        seen_right = [p.right for p in pairing.pairs if p.right]
        assert len(seen_left) == len(a.resources)
        assert len(seen_right) == len(b.resources)
        assert all(p.left or p.right for p in pairing.pairs)

    def test_symmetry_up_to_side_swap(self, tmp_path):
        a = write_visit(tmp_path / "a", scripts=[
            ("https://x/a.js?v=1", b"var a=1"),
            ("https://x/bundle.1.js", bundle_fixture()),
        ])
        b = write_visit(tmp_path / "b", scripts=[
            ("https://x/a.js?v=2", b"var a=1"),
            ("https://x/bundle.2.js", renamed_bundle_fixture()),
        ])
        fwd = pair_resources(a, b)
        rev = pair_resources(b, a)
        fwd_set = {(p.left.url if p.left else None, p.right.url if p.right else None,
                    p.match_basis) for p in fwd.pairs}
        rev_set = {(p.right.url if p.right else None, p.left.url if p.left else None,
                    p.match_basis) for p in rev.pairs}
        assert fwd_set == rev_set

    def test_documents_pair_with_documents(self, tmp_path):
        a = write_visit(tmp_path / "a")
        b = write_visit(tmp_path / "b")
        pairing = pair_resources(a, b)
        doc_pairs = pairing.of_kind("document")
        assert len(doc_pairs) == 1
        assert doc_pairs[0].left.kind == doc_pairs[0].right.kind == "document"

    def test_page_url_mismatch(self, tmp_path):
        a = write_visit(tmp_path / "a", page_url="https://one.test/")
        b = write_visit(tmp_path / "b", page_url="https://two.test/")
        with pytest.raises(PageUrlMismatch):
            pair_resources(a, b)


class TestWriteSnapshot:
    def test_layout(self, tmp_path):
        write_visit(tmp_path / "s", scripts=[("https://x/a.js", b"var a=1")])
        root = tmp_path / "s"
        assert (root / "manifest.json").is_file()
        assert (root / "page.html").is_file()
        assert (root / "screenshot.png").is_file()
        assert list((root / "resources").glob("*.js"))

    def test_http_status_extension_roundtrip(self, tmp_path):
        write_visit(tmp_path / "s", http_status=403,
                    document=b"<html><body><h1>403 Forbidden</h1></body></html>",
                    screenshot=blank_screenshot())
        snap = load_snapshot(tmp_path / "s")
        assert snap.http_status == 403
