"""On-disk snapshot format: loading, validation, writing, and pairing of
resources between two snapshots of the same page."""

from __future__ import annotations

import hashlib
import json
import os
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import urlsplit, urlunsplit

from .assetdiff import LSH_HAMMING_MAX, hamming, simhash64
from .errors import (
    DigestMismatch,
    MissingFile,
    MissingManifest,
    PageUrlMismatch,
    SchemaViolation,
)

ENGINES = ("chromium", "firefox", "webkit")
UA_MODES = ("standard", "none")
PHASES = ("pre_js", "post_js")
KINDS = ("document", "script", "stylesheet", "screenshot")

_KIND_EXT = {"script": "js", "stylesheet": "css"}


@dataclass(frozen=True)
class BrowserConfig:
    engine_id: str
    ua_mode: str
    label: str


@dataclass(frozen=True)
class ResourceRecord:
    url: str
    kind: str
    path: str
    digest: str
    byte_len: int


@dataclass
class Snapshot:
    page_url: str
    config: BrowserConfig
    phase: str
    visit_index: int
    captured_at: str  # ISO-8601 UTC
    resources: list[ResourceRecord]
    root: Path | None = None
    http_status: int | None = None
    screenshot_full_page: bool | None = None
    warnings: list[str] = field(default_factory=list)

    def read(self, record: ResourceRecord) -> bytes:
        if self.root is None:
            raise MissingFile(record.path)
        return (self.root / record.path).read_bytes()

    def document(self) -> ResourceRecord:
        return next(r for r in self.resources if r.kind == "document")

    def screenshot(self) -> ResourceRecord | None:
        return next((r for r in self.resources if r.kind == "screenshot"), None)

    def of_kind(self, kind: str) -> list[ResourceRecord]:
        return [r for r in self.resources if r.kind == kind]


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def load_snapshot(dir: str | Path) -> Snapshot:
    """Load and validate one snapshot directory.

    Every listed file must exist and match its digest; duplicate resource
    URLs keep the first occurrence with a warning.
    """
    root = Path(dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise MissingManifest(str(manifest_path))
    try:
        manifest = json.loads(manifest_path.read_text("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise SchemaViolation("manifest", f"not valid JSON: {exc}")

    for key in ("page_url", "engine_id", "ua_mode", "label", "phase",
                "visit_index", "captured_at", "resources"):
        if key not in manifest:
            raise SchemaViolation(key, "missing")
    if manifest["ua_mode"] not in UA_MODES:
        raise SchemaViolation("ua_mode", str(manifest["ua_mode"]))
    if manifest["phase"] not in PHASES:
        raise SchemaViolation("phase", str(manifest["phase"]))
    if manifest["visit_index"] not in (1, 2):
        raise SchemaViolation("visit_index", str(manifest["visit_index"]))
    if not isinstance(manifest["resources"], list):
        raise SchemaViolation("resources", "not a list")

    records: list[ResourceRecord] = []
    warnings: list[str] = []
    seen_urls: set[str] = set()
    doc_count = shot_count = 0
    for entry in manifest["resources"]:
        for key in ("url", "kind", "path", "digest", "byte_len"):
            if key not in entry:
                raise SchemaViolation(f"resources[].{key}", "missing")
        if entry["kind"] not in KINDS:
            raise SchemaViolation("resources[].kind", str(entry["kind"]))
        if not isinstance(entry["byte_len"], int) or entry["byte_len"] < 0:
            raise SchemaViolation("resources[].byte_len", str(entry["byte_len"]))
        rec = ResourceRecord(entry["url"], entry["kind"], entry["path"],
                             str(entry["digest"]).lower(), entry["byte_len"])
        if rec.kind == "document":
            doc_count += 1
        if rec.kind == "screenshot":
            shot_count += 1
        if rec.url in seen_urls and rec.kind in ("script", "stylesheet"):
            warnings.append(f"duplicate resource url kept-first: {rec.url}")
            continue
        seen_urls.add(rec.url)
        records.append(rec)

    if doc_count != 1:
        raise SchemaViolation("document", f"expected exactly 1, got {doc_count}")
    if shot_count > 1:
        raise SchemaViolation("screenshot", f"expected at most 1, got {shot_count}")
    if manifest["phase"] == "post_js" and shot_count == 0:
        raise SchemaViolation("screenshot", "post_js snapshot requires a screenshot")

    for rec in records:
        fp = root / rec.path
        if not fp.is_file():
            raise MissingFile(rec.path)
        data = fp.read_bytes()
        if sha256_hex(data) != rec.digest or len(data) != rec.byte_len:
            raise DigestMismatch(rec.path)

    return Snapshot(
        page_url=manifest["page_url"],
        config=BrowserConfig(manifest["engine_id"], manifest["ua_mode"], manifest["label"]),
        phase=manifest["phase"],
        visit_index=manifest["visit_index"],
        captured_at=manifest["captured_at"],
        resources=records,
        root=root,
        http_status=manifest.get("http_status"),
        screenshot_full_page=manifest.get("screenshot_full_page"),
        warnings=warnings,
    )


def write_snapshot(
    dir: str | Path,
    page_url: str,
    config: BrowserConfig,
    phase: str,
    visit_index: int,
    document: bytes,
    scripts: list[tuple[str, bytes]] = (),
    stylesheets: list[tuple[str, bytes]] = (),
    screenshot: bytes | None = None,
    captured_at: str | None = None,
    http_status: int | None = None,
    screenshot_full_page: bool | None = None,
) -> Snapshot:
    """Write a conforming snapshot directory and return it loaded back."""
    root = Path(dir)
    (root / "resources").mkdir(parents=True, exist_ok=True)
    if captured_at is None:
        captured_at = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")

    records: list[dict] = []

    def add(url: str, kind: str, path: str, data: bytes):
        (root / path).write_bytes(data)
        records.append({"url": url, "kind": kind, "path": path,
                        "digest": sha256_hex(data), "byte_len": len(data)})

    add(page_url, "document", "page.html", document)
    for kind, items in (("script", scripts), ("stylesheet", stylesheets)):
        for url, data in items:
            path = f"resources/{sha256_hex(data)}.{_KIND_EXT[kind]}"
            add(url, kind, path, data)
    if screenshot is not None:
        add(page_url + "#screenshot", "screenshot", "screenshot.png", screenshot)

    manifest = {
        "page_url": page_url,
        "engine_id": config.engine_id,
        "ua_mode": config.ua_mode,
        "label": config.label,
        "phase": phase,
        "visit_index": visit_index,
        "captured_at": captured_at,
        "resources": records,
    }
    if http_status is not None:
        manifest["http_status"] = http_status
    if screenshot_full_page is not None:
        manifest["screenshot_full_page"] = screenshot_full_page
    atomic_write_text(root / "manifest.json", json.dumps(manifest, indent=2))
    return load_snapshot(root)


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, "utf-8")
    os.replace(tmp, path)


def canonical_url(url: str) -> str:
    """Lowercase scheme/host, strip fragment, keep query."""
    parts = urlsplit(url)
    return urlunsplit((parts.scheme.lower(), parts.netloc.lower(),
                       parts.path, parts.query, ""))


def url_sans_query(url: str) -> str:
    parts = urlsplit(url)
    return urlunsplit((parts.scheme.lower(), parts.netloc.lower(), parts.path, "", ""))


@dataclass
class ResourcePair:
    left: ResourceRecord | None
    right: ResourceRecord | None
    match_basis: str  # exact_url | path_no_query | lsh_nearest | unmatched


@dataclass
class ResourcePairing:
    pairs: list[ResourcePair]

    def of_kind(self, kind: str) -> list[ResourcePair]:
        return [p for p in self.pairs
                if (p.left or p.right).kind == kind]


def pair_resources(a: Snapshot, b: Snapshot) -> ResourcePairing:
    """Partial one-to-one matching of two snapshots' resources.

    Precedence: exact canonical URL, then URL without query, then simhash
    nearest (Hamming <= 6) for scripts/stylesheets, then unmatched.
    """
    if a.page_url != b.page_url:
        raise PageUrlMismatch(f"{a.page_url} != {b.page_url}")
    return pair_record_lists(a.resources, b.resources,
                             lambda r: a.read(r), lambda r: b.read(r))


def pair_record_lists(left: list[ResourceRecord], right: list[ResourceRecord],
                      read_left, read_right) -> ResourcePairing:
    pairs: list[ResourcePair] = []
    free_l = list(left)
    free_r = list(right)

    def take(l: ResourceRecord, r: ResourceRecord, basis: str):
        free_l.remove(l)
        free_r.remove(r)
        pairs.append(ResourcePair(l, r, basis))

    # tier 1: exact canonical URL (kinds must agree)
    by_url: dict[tuple[str, str], list[ResourceRecord]] = defaultdict(list)
    for r in free_r:
        by_url[(canonical_url(r.url), r.kind)].append(r)
    for l in list(free_l):
        bucket = by_url.get((canonical_url(l.url), l.kind))
        if bucket:
            take(l, bucket.pop(0), "exact_url")

    # tier 2: URL with query stripped; same-kind candidates zip in order
    bucket_r: dict[tuple[str, str], list[ResourceRecord]] = defaultdict(list)
    for r in free_r:
        bucket_r[(url_sans_query(r.url), r.kind)].append(r)
    for l in list(free_l):
        bucket = bucket_r.get((url_sans_query(l.url), l.kind))
        if bucket:
            take(l, bucket.pop(0), "path_no_query")

    # tier 3: simhash nearest for script/stylesheet contents
    cand_l = [l for l in free_l if l.kind in ("script", "stylesheet")]
    cand_r = [r for r in free_r if r.kind in ("script", "stylesheet")]
    if cand_l and cand_r:
        sim_l = {l.digest: simhash64(read_left(l)) for l in cand_l}
        sim_r = {r.digest: simhash64(read_right(r)) for r in cand_r}
        scored = []
        for i, l in enumerate(cand_l):
            for j, r in enumerate(cand_r):
                if l.kind != r.kind:
                    continue
                d = hamming(sim_l[l.digest], sim_r[r.digest])
                if d <= LSH_HAMMING_MAX:
                    scored.append((d, i, j))
        used_l: set[int] = set()
        used_r: set[int] = set()
        for d, i, j in sorted(scored):
            if i in used_l or j in used_r:
                continue
            used_l.add(i)
            used_r.add(j)
            take(cand_l[i], cand_r[j], "lsh_nearest")

    for l in free_l:
        pairs.append(ResourcePair(l, None, "unmatched"))
    for r in free_r:
        pairs.append(ResourcePair(None, r, "unmatched"))
    return ResourcePairing(pairs)
