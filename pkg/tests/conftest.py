"""Shared fixture builders: synthetic pages, snapshot directories, images,
and random tree generators with fixed seeds."""

from __future__ import annotations

import io
import random
import string

import numpy as np
import pytest
from PIL import Image

from uaradar.assetdiff import STNode, SyntaxTree
from uaradar.domstruct import DomNode, DomTree
from uaradar.snapshot import BrowserConfig, write_snapshot


def make_png(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, "PNG")
    return buf.getvalue()


def blank_screenshot(w: int = 120, h: int = 90) -> bytes:
    return make_png(np.full((h, w, 3), 255, np.uint8))


def boxy_screenshot(boxes, w: int = 120, h: int = 90) -> bytes:
    """White canvas with black rectangles at (x, y, bw, bh)."""
    arr = np.full((h, w, 3), 255, np.uint8)
    for x, y, bw, bh in boxes:
        arr[y:y + bh, x:x + bw] = 0
    return make_png(arr)


DEFAULT_DOC = (
    b"<html><head><title>Fixture</title></head>"
    b"<body><h1>Welcome</h1><p>Some stable paragraph text.</p>"
    b"<div id=\"main\"><span>alpha</span><span>beta</span></div></body></html>"
)
DEFAULT_JS = [("https://static.example/app.js",
               b"function boot(cfg){window.state=cfg;return cfg.mode;}")]
DEFAULT_CSS = [("https://static.example/site.css",
                b"body { margin: 0; } p { margin-top: 4px; color: #222; }")]


def write_visit(
    dir,
    label: str = "C",
    engine: str = "chromium",
    ua_mode: str = "standard",
    phase: str = "post_js",
    visit: int = 1,
    page_url: str = "https://example.test/",
    document: bytes = DEFAULT_DOC,
    scripts=None,
    stylesheets=None,
    screenshot: bytes | None = None,
    http_status: int | None = None,
):
    if scripts is None:
        scripts = DEFAULT_JS
    if stylesheets is None:
        stylesheets = DEFAULT_CSS
    if screenshot is None and phase == "post_js":
        screenshot = boxy_screenshot([(10, 10, 60, 20), (20, 50, 40, 25)])
    return write_snapshot(
        dir, page_url, BrowserConfig(engine, ua_mode, label), phase, visit,
        document, scripts=scripts, stylesheets=stylesheets,
        screenshot=screenshot if phase == "post_js" else None,
        captured_at=f"2026-01-0{visit}T00:00:00Z",
        http_status=http_status,
    )


@pytest.fixture
def visit_pair(tmp_path):
    """Two byte-identical visits of the same config."""
    v1 = write_visit(tmp_path / "v1", visit=1)
    v2 = write_visit(tmp_path / "v2", visit=2)
    return v1, v2


# ---------------------------------------------------------------------------
# random tree generators

# tags free of implied-close interactions, so any nesting survives a
# serialize/parse round trip
TAGS = ["div", "span", "section", "a", "em", "h2", "ul", "article", "nav", "b"]
WORDS = ["alpha", "beta", "gamma", "delta", "news", "shop", "late", "item"]


def random_dom(rng: random.Random, max_nodes: int = 12) -> DomTree:
    n = rng.randint(1, max_nodes)
    nodes = [DomNode(rng.choice(TAGS), {}, rng.choice(WORDS), None)]
    for i in range(1, n):
        parent = rng.randrange(i)
        attrs = {}
        if rng.random() < 0.3:
            attrs["class"] = rng.choice(WORDS)
        nodes.append(DomNode(rng.choice(TAGS), attrs, rng.choice(WORDS), parent))
        nodes[parent].children.append(i)
    return _renumber_preorder(nodes)


def _renumber_preorder(nodes: list[DomNode]) -> DomTree:
    order: list[int] = []
    stack = [0]
    while stack:
        nid = stack.pop()
        order.append(nid)
        stack.extend(reversed(nodes[nid].children))
    remap = {old: new for new, old in enumerate(order)}
    out = []
    for old in order:
        n = nodes[old]
        out.append(DomNode(n.tag, dict(n.attrs), n.text,
                           remap[n.parent] if n.parent is not None else None,
                           [remap[c] for c in n.children]))
    return DomTree(out)


def mutate_dom(rng: random.Random, tree: DomTree, ops: int) -> DomTree:
    """Apply relabel/delete-leaf/insert-leaf mutations, keeping >= 1 node."""
    nodes = [DomNode(n.tag, dict(n.attrs), n.text, n.parent, list(n.children))
             for n in tree.nodes]
    for _ in range(ops):
        choice = rng.random()
        alive = [i for i, n in enumerate(nodes) if n.tag is not None]
        if choice < 0.45:
            nid = rng.choice(alive)
            nodes[nid].text = rng.choice(WORDS)
        elif choice < 0.7 and len(alive) > 1:
            leaves = [i for i in alive if not [c for c in nodes[i].children
                                               if nodes[c].tag is not None] and i != 0]
            if leaves:
                victim = rng.choice(leaves)
                nodes[nodes[victim].parent].children.remove(victim)
                nodes[victim].tag = None
        else:
            parent = rng.choice(alive)
            nodes.append(DomNode(rng.choice(TAGS), {}, rng.choice(WORDS), parent))
            nodes[parent].children.append(len(nodes) - 1)
    keep = [i for i, n in enumerate(nodes) if n.tag is not None]
    remap = {old: new for new, old in enumerate(keep)}
    packed = [DomNode(nodes[i].tag, nodes[i].attrs, nodes[i].text,
                      remap.get(nodes[i].parent) if nodes[i].parent is not None else None,
                      [remap[c] for c in nodes[i].children if c in remap])
              for i in keep]
    return _renumber_preorder(packed)


def random_syntax_tree(rng: random.Random, max_nodes: int = 40) -> SyntaxTree:
    kinds = ["group", "rule", "decl", "token"]
    labels = [w + str(i) for w in WORDS for i in range(3)]
    n = rng.randint(1, max_nodes)
    root = STNode("module", "")
    pool = [root]
    for _ in range(n - 1):
        parent = rng.choice(pool)
        node = STNode(rng.choice(kinds), rng.choice(labels))
        parent.children.append(node)
        if rng.random() < 0.6:
            pool.append(node)
    return SyntaxTree(root)


def mutate_syntax_tree(rng: random.Random, tree: SyntaxTree, ops: int) -> SyntaxTree:
    """Structural clone with random relabels, deletions, and insertions."""

    def clone(n: STNode) -> STNode:
        return STNode(n.kind, n.label, [clone(c) for c in n.children])

    root = clone(tree.root)

    def all_nodes(n: STNode, acc):
        acc.append(n)
        for c in n.children:
            all_nodes(c, acc)
        return acc

    labels = [w + str(i) for w in WORDS for i in range(3)]
    for _ in range(ops):
        nodes = all_nodes(root, [])
        action = rng.random()
        if action < 0.5:
            rng.choice(nodes).label = rng.choice(labels)
        elif action < 0.75:
            parents = [n for n in nodes if n.children]
            if parents:
                p = rng.choice(parents)
                p.children.pop(rng.randrange(len(p.children)))
        else:
            p = rng.choice(nodes)
            p.children.insert(rng.randint(0, len(p.children)),
                              STNode("token", rng.choice(labels)))
    return SyntaxTree(root)


def random_text(rng: random.Random, max_len: int, alphabet: str = "abcdef ") -> str:
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, max_len)))


def mutated_text(rng: random.Random, base: str, edits: int) -> str:
    s = list(base)
    for _ in range(edits):
        kind = rng.random()
        if kind < 0.4 and s:
            s[rng.randrange(len(s))] = rng.choice("abcdefgh")
        elif kind < 0.7 and s:
            del s[rng.randrange(len(s))]
        else:
            s.insert(rng.randint(0, len(s)), rng.choice("abcdefgh"))
    return "".join(s)


def make_js_corpus_file(rng: random.Random, size: int = 1500) -> bytes:
    """A file with its own identifier vocabulary, like real third-party JS."""
    vocab = ["".join(rng.choice(string.ascii_letters) for _ in range(rng.randint(3, 10)))
             for _ in range(40)]
    kw = ["var", "function", "return", "(", ")", "{", "}", "=", ";", "+"]
    toks = [rng.choice(vocab) if rng.random() < 0.6 else rng.choice(kw)
            for _ in range(size)]
    return " ".join(toks).encode()
