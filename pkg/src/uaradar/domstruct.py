"""DOM trees, flexible tree matching, and the HTML-structure similarity axis.

The matcher is a deliberately small, deterministic variant of
similarity-based flexible tree matching: tf-idf token cosine for initial
pair scores, two rounds of neighbourhood propagation, then a greedy
one-to-one assignment.  An exact Zhang-Shasha tree edit distance is kept
alongside as a validation oracle for small instances.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from html.parser import HTMLParser

from .errors import EmptyDocument, EmptyTree, InstanceTooLarge

# Elements that never take content.
VOID_ELEMENTS = frozenset({
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
})

# Start of any of these implicitly closes an open <p>.
_P_CLOSERS = frozenset({
    "address", "article", "aside", "blockquote", "div", "dl", "fieldset",
    "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr",
    "main", "nav", "ol", "p", "pre", "section", "table", "ul",
})

# tag -> sibling tags whose start implicitly closes it
_IMPLIED_CLOSE = {
    "li": {"li"},
    "dt": {"dt", "dd"},
    "dd": {"dt", "dd"},
    "td": {"td", "th", "tr"},
    "th": {"td", "th", "tr"},
    "tr": {"tr"},
    "option": {"option", "optgroup"},
    "thead": {"tbody", "tfoot"},
    "tbody": {"tbody", "tfoot"},
}

_TOKEN_RE = re.compile(r"[a-z0-9_]+")
_WS_RE = re.compile(r"\s+")


def _collapse_ws(s: str) -> str:
    return _WS_RE.sub(" ", s).strip()


def tokenize(s: str) -> list[str]:
    return _TOKEN_RE.findall(s.lower())


@dataclass
class DomNode:
    tag: str
    attrs: dict[str, str]
    text: str = ""
    parent: int | None = None
    children: list[int] = field(default_factory=list)

    def identity(self) -> tuple:
        """Content identity used for the unchanged test (attr order ignored)."""
        return (self.tag, frozenset(self.attrs.items()), self.text)

    def signature_tokens(self) -> list[str]:
        toks = [self.tag]
        for k, v in self.attrs.items():
            toks.append(k)
            toks.extend(tokenize(v))
        toks.extend(tokenize(self.text))
        return toks


@dataclass
class DomTree:
    nodes: list[DomNode]

    @property
    def root(self) -> int:
        return 0

    def __len__(self) -> int:
        return len(self.nodes)

    def subtree_ids(self, nid: int) -> list[int]:
        out = [nid]
        stack = list(reversed(self.nodes[nid].children))
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(reversed(self.nodes[n].children))
        return out

    def structurally_equal(self, other: "DomTree") -> bool:
        if len(self) != len(other):
            return False
        for a, b in zip(self.nodes, other.nodes):
            if a.identity() != b.identity() or a.children != b.children or a.parent != b.parent:
                return False
        return True


class _TreeBuilder(HTMLParser):
    """Error-tolerant tree construction on top of the stdlib tokenizer."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.roots: list[_RawNode] = []
        self.stack: list[_RawNode] = []

    def _open(self, node: "_RawNode"):
        if self.stack:
            self.stack[-1].children.append(node)
        else:
            self.roots.append(node)

    def handle_starttag(self, tag, attrs):
        tag = tag.lower()
        # implied end tags
        while self.stack:
            top = self.stack[-1].tag
            if top == "p" and tag in _P_CLOSERS:
                self.stack.pop()
            elif tag in _IMPLIED_CLOSE.get(top, ()):
                self.stack.pop()
            else:
                break
        amap: dict[str, str] = {}
        for k, v in attrs:
            k = k.lower()
            if k not in amap:
                amap[k] = v if v is not None else ""
        node = _RawNode(tag, amap)
        self._open(node)
        if tag not in VOID_ELEMENTS:
            self.stack.append(node)

    def handle_startendtag(self, tag, attrs):
        tag = tag.lower()
        amap: dict[str, str] = {}
        for k, v in attrs:
            k = k.lower()
            if k not in amap:
                amap[k] = v if v is not None else ""
        self._open(_RawNode(tag, amap))

    def handle_endtag(self, tag):
        tag = tag.lower()
        for i in range(len(self.stack) - 1, -1, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return
        # stray end tag: ignored

    def handle_data(self, data):
        if self.stack:
            self.stack[-1].texts.append(data)
        # text outside any element is dropped


class _RawNode:
    __slots__ = ("tag", "attrs", "texts", "children")

    def __init__(self, tag: str, attrs: dict[str, str]):
        self.tag = tag
        self.attrs = attrs
        self.texts: list[str] = []
        self.children: list[_RawNode] = []


def parse_html(data: bytes | str) -> DomTree:
    """Parse an HTML document into a DomTree, recovering from malformed markup.

    Comments are dropped; script/style text is kept as the element's text.
    Raises EmptyDocument if no element survives the parse.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    builder = _TreeBuilder()
    builder.feed(data)
    builder.close()
    roots = builder.roots
    if not roots:
        raise EmptyDocument("no elements found")
    root = roots[0]
    # stray top-level siblings are adopted by the first root
    root.children.extend(roots[1:])

    nodes: list[DomNode] = []

    def emit(raw: _RawNode, parent: int | None) -> int:
        nid = len(nodes)
        nodes.append(DomNode(raw.tag, raw.attrs, _collapse_ws("".join(raw.texts)), parent))
        for ch in raw.children:
            cid = emit(ch, nid)
            nodes[nid].children.append(cid)
        return nid

    emit(root, None)
    return DomTree(nodes)


def _escape(s: str, quote: bool = False) -> str:
    s = s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    if quote:
        s = s.replace('"', "&quot;")
    return s


def serialize_html(tree: DomTree) -> str:
    """Render a DomTree back to markup.  parse_html of the output round-trips."""
    out: list[str] = []

    def emit(nid: int):
        n = tree.nodes[nid]
        attrs = "".join(f' {k}="{_escape(v, quote=True)}"' for k, v in n.attrs.items())
        if n.tag in VOID_ELEMENTS:
            out.append(f"<{n.tag}{attrs}>")
            return
        out.append(f"<{n.tag}{attrs}>")
        if n.text:
            out.append(n.text if n.tag in ("script", "style") else _escape(n.text))
        for c in n.children:
            emit(c)
        out.append(f"</{n.tag}>")

    emit(tree.root)
    return "".join(out)


@dataclass
class MatchGraph:
    matched: list[tuple[int, int, str]]  # (left id, right id, "unchanged" | "updated")
    unmatched_left: list[int]
    unmatched_right: list[int]

    @property
    def edge_count(self) -> int:
        return len(self.matched) + len(self.unmatched_left) + len(self.unmatched_right)

    @property
    def op_count(self) -> int:
        updated = sum(1 for _, _, lab in self.matched if lab == "updated")
        return updated + len(self.unmatched_left) + len(self.unmatched_right)


PROPAGATION_WEIGHT = 0.25
PROPAGATION_ROUNDS = 2
MATCH_THRESHOLD = 0.5
MAX_CANDIDATES_PER_NODE = 128


def _token_vectors(trees: list[DomTree]) -> tuple[list[list[dict[str, float]]], dict[str, float]]:
    """tf-idf weighted token vectors; idf over all nodes of both trees."""
    bags = [[Counter(n.signature_tokens()) for n in t.nodes] for t in trees]
    total = sum(len(t) for t in trees)
    df: Counter = Counter()
    for side in bags:
        for bag in side:
            df.update(set(bag))
    idf = {tok: math.log(1.0 + total / n) for tok, n in df.items()}
    vecs = []
    for side in bags:
        vecs.append([{tok: cnt * idf[tok] for tok, cnt in bag.items()} for bag in side])
    return vecs, idf


def _cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if len(b) < len(a):
        a, b = b, a
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    if dot == 0.0:
        return 0.0
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    return dot / (na * nb)


def sftm_match(t1: DomTree, t2: DomTree) -> MatchGraph:
    """Match nodes of two DOM trees one-to-one.

    Pipeline: idf-weighted token cosine per candidate pair, two propagation
    rounds adding 0.25x the mean score of neighbouring pairs, then greedy
    assignment of descending scores above the 0.5 threshold.
    """
    if len(t1) == 0 or len(t2) == 0:
        raise EmptyTree("cannot match an empty tree")
    (v1, v2), _ = _token_vectors([t1, t2])

    # candidate pairs share at least one token (inverted index on the right tree)
    index: dict[str, list[int]] = {}
    for j, vec in enumerate(v2):
        for tok in vec:
            index.setdefault(tok, []).append(j)
    scores: dict[tuple[int, int], float] = {}
    for i, vec in enumerate(v1):
        cand: set[int] = set()
        for tok in vec:
            cand.update(index.get(tok, ()))
        ranked = sorted(((_cosine(vec, v2[j]), j) for j in cand), key=lambda p: (-p[0], p[1]))
        for s, j in ranked[:MAX_CANDIDATES_PER_NODE]:
            if s > 0.0:
                scores[(i, j)] = s

    for _ in range(PROPAGATION_ROUNDS):
        nxt: dict[tuple[int, int], float] = {}
        for (i, j), s in scores.items():
            neigh: list[float] = []
            pi, pj = t1.nodes[i].parent, t2.nodes[j].parent
            if pi is not None and pj is not None and (pi, pj) in scores:
                neigh.append(scores[(pi, pj)])
            for ci in t1.nodes[i].children:
                for cj in t2.nodes[j].children:
                    sc = scores.get((ci, cj))
                    if sc is not None:
                        neigh.append(sc)
            bonus = PROPAGATION_WEIGHT * sum(neigh) / len(neigh) if neigh else 0.0
            nxt[(i, j)] = s + bonus
        scores = nxt

    order = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
    taken_l: set[int] = set()
    taken_r: set[int] = set()
    matched: list[tuple[int, int, str]] = []
    for (i, j), s in order:
        if s < MATCH_THRESHOLD or i in taken_l or j in taken_r:
            continue
        taken_l.add(i)
        taken_r.add(j)
        label = "unchanged" if t1.nodes[i].identity() == t2.nodes[j].identity() else "updated"
        matched.append((i, j, label))
    matched.sort()
    unmatched_left = [i for i in range(len(t1)) if i not in taken_l]
    unmatched_right = [j for j in range(len(t2)) if j not in taken_r]
    return MatchGraph(matched, unmatched_left, unmatched_right)


def structure_similarity(g: MatchGraph) -> float:
    """S1 = 1 - ops/|E|, where |E| counts matched pairs plus unmatched nodes."""
    edges = g.edge_count
    if edges == 0:
        return 1.0
    return 1.0 - g.op_count / edges


def ted_oracle(t1: DomTree, t2: DomTree) -> int:
    """Exact Zhang-Shasha ordered tree edit distance with unit costs."""
    if len(t1) * len(t2) > 10**6:
        raise InstanceTooLarge(f"{len(t1)} x {len(t2)} nodes")
    a = _annotate(t1)
    b = _annotate(t2)
    return _zhang_shasha(a, b, t1, t2)


def _annotate(t: DomTree):
    """Post-order node ids, leftmost-leaf descendants, and key roots."""
    post: list[int] = []

    def walk(nid: int):
        for c in t.nodes[nid].children:
            walk(c)
        post.append(nid)

    walk(t.root)
    pos = {nid: k for k, nid in enumerate(post)}
    lmd = [0] * len(post)
    for k, nid in enumerate(post):
        n = nid
        while t.nodes[n].children:
            n = t.nodes[n].children[0]
        lmd[k] = pos[n]
    keyroots = sorted({lmd[k]: k for k in range(len(post))}.values())
    return post, lmd, keyroots


def _zhang_shasha(a, b, t1: DomTree, t2: DomTree) -> int:
    post1, l1, kr1 = a
    post2, l2, kr2 = b
    n, m = len(post1), len(post2)
    td = [[0] * m for _ in range(n)]

    def cost(i: int, j: int) -> int:
        return 0 if t1.nodes[post1[i]].identity() == t2.nodes[post2[j]].identity() else 1

    for i in kr1:
        for j in kr2:
            ioff, joff = l1[i] - 1, l2[j] - 1
            fd = [[0] * (j - l2[j] + 2) for _ in range(i - l1[i] + 2)]
            for x in range(1, i - l1[i] + 2):
                fd[x][0] = fd[x - 1][0] + 1
            for y in range(1, j - l2[j] + 2):
                fd[0][y] = fd[0][y - 1] + 1
            for x in range(1, i - l1[i] + 2):
                for y in range(1, j - l2[j] + 2):
                    if l1[i] == l1[x + ioff] and l2[j] == l2[y + joff]:
                        fd[x][y] = min(
                            fd[x - 1][y] + 1,
                            fd[x][y - 1] + 1,
                            fd[x - 1][y - 1] + cost(x + ioff, y + joff),
                        )
                        td[x + ioff][y + joff] = fd[x][y]
                    else:
                        p = l1[x + ioff] - 1 - ioff
                        q = l2[y + joff] - 1 - joff
                        fd[x][y] = min(
                            fd[x - 1][y] + 1,
                            fd[x][y - 1] + 1,
                            fd[p][q] + td[x + ioff][y + joff],
                        )
    return td[n - 1][m - 1]
