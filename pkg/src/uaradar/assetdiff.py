"""JS/CSS change detection: simhash fingerprints, lightweight syntax trees,
and two-phase (top-down, bottom-up) tree differencing.

JS files are parsed into lexical block trees (token leaves nested by
bracket structure) behind the same SyntaxTree interface a full-grammar
parser would use; CSS into rule/declaration trees.  The resulting edit
scripts drive the aggregate JavaScript and CSS similarity axes.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

import numpy as np

MIN_MATCH_HEIGHT = 2
DICE_THRESHOLD = 0.5
SHINGLE_LEN = 4
LSH_HAMMING_MAX = 6
STRING_LABEL_MAX = 64

_WS_BYTES = re.compile(rb"\s+")


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized over uint64."""
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def simhash64(content: bytes) -> int:
    """64-bit simhash over 4-byte shingles of whitespace-normalized content."""
    norm = _WS_BYTES.sub(b" ", content).strip()
    if len(norm) == 0:
        return 0
    if len(norm) < SHINGLE_LEN:
        norm = norm.ljust(SHINGLE_LEN, b"\x00")
    data = np.frombuffer(norm, dtype=np.uint8)
    windows = np.lib.stride_tricks.sliding_window_view(data, SHINGLE_LEN)
    shingles = np.ascontiguousarray(windows).view("<u4").ravel().astype(np.uint64)
    hashes = _mix64(shingles)
    bits = (hashes[:, None] >> np.arange(64, dtype=np.uint64)) & np.uint64(1)
    votes = (2 * bits.astype(np.int64) - 1).sum(axis=0)
    fingerprint = 0
    for bit in range(64):
        if votes[bit] > 0:
            fingerprint |= 1 << bit
    return fingerprint


def hamming(a: int, b: int) -> int:
    return bin(a ^ b).count("1")


@dataclass
class STNode:
    kind: str
    label: str
    children: list["STNode"] = field(default_factory=list)
    # filled by SyntaxTree.index()
    id: int = -1
    parent: int | None = None
    height: int = 1
    size: int = 1
    shash: bytes = b""


class SyntaxTree:
    """Ordered labeled tree with per-node height, size, and subtree hash."""

    def __init__(self, root: STNode):
        self.root = root
        self.nodes: list[STNode] = []
        self._index(root, None)

    def _index(self, node: STNode, parent: int | None):
        node.id = len(self.nodes)
        node.parent = parent
        self.nodes.append(node)
        h = hashlib.blake2b(digest_size=16)
        h.update(node.kind.encode())
        h.update(b"\x00")
        h.update(node.label.encode())
        for ch in node.children:
            self._index(ch, node.id)
            h.update(ch.shash)
        node.height = 1 + max((c.height for c in node.children), default=0)
        node.size = 1 + sum(c.size for c in node.children)
        node.shash = h.digest()

    def __len__(self) -> int:
        return len(self.nodes)

    def descendants(self, nid: int) -> list[int]:
        out: list[int] = []
        stack = [c.id for c in reversed(self.nodes[nid].children)]
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(c.id for c in reversed(self.nodes[n].children))
        return out

    def isomorphic(self, other: "SyntaxTree") -> bool:
        return self.root.shash == other.root.shash


def _string_label(raw: str) -> str:
    if len(raw) > STRING_LABEL_MAX:
        return "str:" + hashlib.sha256(raw.encode("utf-8", "replace")).hexdigest()[:16]
    return raw


# ---------------------------------------------------------------------------
# CSS

_CSS_COMMENT = re.compile(r"/\*.*?\*/", re.S)


def parse_css(data: bytes | str) -> SyntaxTree:
    """Error-tolerant CSS parse into rule/declaration nodes.

    Rule labels are the normalized selector list; declaration labels are
    "property: value" lowercased; at-rules keep their prelude as label and
    nest their block contents.  Malformed chunks skip to the next rule.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    text = _CSS_COMMENT.sub(" ", data)
    root = STNode("stylesheet", "")
    _parse_css_block(text, 0, len(text), root)
    return SyntaxTree(root)


def _parse_css_block(text: str, start: int, end: int, parent: STNode) -> None:
    i = start
    while i < end:
        brace = text.find("{", i, end)
        semi = text.find(";", i, end)
        if brace == -1 and semi == -1:
            break
        if brace != -1 and (semi == -1 or brace < semi):
            prelude = " ".join(text[i:brace].split())
            close = _matching_brace(text, brace, end)
            body_start, body_end = brace + 1, close
            if prelude.startswith("@"):
                node = STNode("atrule", prelude)
                parent.children.append(node)
                if "{" in text[body_start:body_end]:
                    _parse_css_block(text, body_start, body_end, node)
                else:
                    _parse_declarations(text[body_start:body_end], node)
            elif prelude:
                node = STNode("rule", prelude)
                parent.children.append(node)
                _parse_declarations(text[body_start:body_end], node)
            # empty prelude: stray block, skipped
            i = close + 1
        else:
            # statement at-rule (@import ...;) or stray declaration text
            stmt = " ".join(text[i:semi].split())
            if stmt.startswith("@"):
                parent.children.append(STNode("atrule", stmt))
            i = semi + 1


def _matching_brace(text: str, open_pos: int, end: int) -> int:
    depth = 0
    for j in range(open_pos, end):
        c = text[j]
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return j
    return end


def _parse_declarations(body: str, parent: STNode) -> None:
    for chunk in body.split(";"):
        if ":" not in chunk:
            continue
        prop, _, value = chunk.partition(":")
        prop = " ".join(prop.split()).lower()
        value = " ".join(value.split()).lower()
        if prop and value:
            parent.children.append(STNode("decl", f"{prop}: {value}"))


def css_declaration_properties(tree: SyntaxTree) -> list[str]:
    out = []
    for n in tree.nodes:
        if n.kind == "decl":
            out.append(n.label.split(":", 1)[0].strip())
    return out


# ---------------------------------------------------------------------------
# JS (lexical block tree)

_JS_TOKEN = re.compile(
    r"""
    //[^\n]* | /\*.*?\*/          # comments (dropped)
  | "(?:\\.|[^"\\])*"            # double-quoted string
  | '(?:\\.|[^'\\])*'            # single-quoted string
  | `(?:\\.|[^`\\])*`            # template literal (no nesting support)
  | [A-Za-z_$][A-Za-z0-9_$]*     # identifier / keyword
  | (?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?  # number
  | [()\[\]{}]                   # brackets
  | [^\sA-Za-z0-9_$()\[\]{}"'`]+ # punctuation run
    """,
    re.S | re.X,
)

_OPEN = {"(": ")", "[": "]", "{": "}"}
_CLOSE = {")", "]", "}"}


def parse_js_lexical(data: bytes | str) -> SyntaxTree:
    """Tokenize JS and nest tokens into groups by bracket structure.

    Comments are dropped; long string literals get stable hashed labels;
    unbalanced brackets are recovered by closing open groups at EOF.
    Bracket tokens stay as leaves so the leaf sequence equals the token
    stream.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    root = STNode("module", "")
    stack = [root]
    for m in _JS_TOKEN.finditer(data):
        tok = m.group(0)
        if tok.startswith("//") or tok.startswith("/*"):
            continue
        if tok[0] in "\"'`" and len(tok) >= 2 and tok[-1] == tok[0]:
            label = _string_label(tok[1:-1])
            stack[-1].children.append(STNode("token", label))
        elif tok in _OPEN:
            group = STNode("group", tok + _OPEN[tok])
            stack[-1].children.append(group)
            group.children.append(STNode("token", tok))
            stack.append(group)
        elif tok in _CLOSE:
            if len(stack) > 1 and stack[-1].label[1] == tok:
                stack[-1].children.append(STNode("token", tok))
                stack.pop()
            else:
                stack[-1].children.append(STNode("token", tok))  # stray close
        else:
            stack[-1].children.append(STNode("token", _string_label(tok)))
    # unbalanced opens: recovered by closing at EOF
    return SyntaxTree(root)


def leaf_labels(tree: SyntaxTree) -> list[str]:
    return [n.label for n in tree.nodes if not n.children]


# ---------------------------------------------------------------------------
# Tree differencing

@dataclass
class EditOp:
    op: str  # insert | delete | update | move
    left: int | None = None
    right: int | None = None
    kind: str = ""
    label: str = ""
    parent_right: int | None = None
    index: int = 0


@dataclass
class EditScript:
    ops: list[EditOp]
    mapping: list[tuple[int, int]]
    mapped_count: int
    total_units: int


def gumtree_diff(t1: SyntaxTree, t2: SyntaxTree) -> EditScript:
    """Two-phase tree matching followed by edit-script derivation.

    Top-down greedily maps identical subtrees (by hash) of height >= 2,
    larger first; bottom-up maps containers whose mapped-descendant dice
    exceeds 0.5, then aligns their unmapped children (hash groups first,
    then a kind-level LCS) so single-leaf edits surface as updates.
    """
    m12: dict[int, int] = {}
    m21: dict[int, int] = {}

    def map_pair(l: int, r: int):
        m12[l] = r
        m21[r] = l

    def map_subtrees(l: int, r: int):
        la = [l] + t1.descendants(l)
        ra = [r] + t2.descendants(r)
        for x, y in zip(la, ra):
            map_pair(x, y)

    _top_down(t1, t2, map_subtrees)
    _bottom_up(t1, t2, m12, m21, map_pair, map_subtrees)
    return _derive_script(t1, t2, m12, m21)


def _top_down(t1: SyntaxTree, t2: SyntaxTree, map_subtrees) -> None:
    open1: dict[int, list[int]] = {}
    open2: dict[int, list[int]] = {}
    open1.setdefault(t1.root.height, []).append(t1.root.id)
    open2.setdefault(t2.root.height, []).append(t2.root.id)

    def open_node(t: SyntaxTree, table: dict[int, list[int]], nid: int):
        for c in t.nodes[nid].children:
            table.setdefault(c.height, []).append(c.id)

    while open1 and open2:
        h1, h2 = max(open1), max(open2)
        if min(h1, h2) < MIN_MATCH_HEIGHT:
            break
        if h1 > h2:
            for nid in open1.pop(h1):
                open_node(t1, open1, nid)
            continue
        if h2 > h1:
            for nid in open2.pop(h2):
                open_node(t2, open2, nid)
            continue
        lefts = open1.pop(h1)
        rights = open2.pop(h2)
        by_hash: dict[bytes, list[int]] = {}
        for nid in rights:
            by_hash.setdefault(t2.nodes[nid].shash, []).append(nid)
        leftover_l: list[int] = []
        for nid in lefts:
            bucket = by_hash.get(t1.nodes[nid].shash)
            if bucket:
                map_subtrees(nid, bucket.pop(0))
            else:
                leftover_l.append(nid)
        for nid in leftover_l:
            open_node(t1, open1, nid)
        for bucket in by_hash.values():
            for nid in bucket:
                open_node(t2, open2, nid)


def _bottom_up(t1, t2, m12, m21, map_pair, map_subtrees) -> None:
    # post-order over t1
    order: list[int] = []

    def post(nid: int):
        for c in t1.nodes[nid].children:
            post(c.id)
        order.append(nid)

    post(t1.root.id)
    for l in order:
        if l in m12 or not t1.nodes[l].children:
            continue
        desc = t1.descendants(l)
        mapped_desc = [d for d in desc if d in m12]
        if not mapped_desc:
            continue
        # candidates: unmapped ancestors of partners of mapped descendants
        cands: list[int] = []
        seen: set[int] = set()
        for d in mapped_desc:
            r = t2.nodes[m12[d]].parent
            while r is not None:
                if r in seen:
                    break
                seen.add(r)
                if r not in m21 and t2.nodes[r].children:
                    cands.append(r)
                r = t2.nodes[r].parent
        best, best_dice = None, 0.0
        for r in sorted(cands):
            rdesc = set(t2.descendants(r))
            common = sum(1 for d in mapped_desc if m12[d] in rdesc)
            dice = 2.0 * common / (len(desc) + len(rdesc))
            if dice > best_dice:
                best, best_dice = r, dice
        if best is not None and best_dice > DICE_THRESHOLD:
            map_pair(l, best)
            _align_children(t1, t2, l, best, m12, m21, map_pair, map_subtrees)


def _align_children(t1, t2, l, r, m12, m21, map_pair, map_subtrees) -> None:
    """Pair up unmapped children of a mapped container: identical subtrees
    first, then kind-level LCS, recursing into non-identical pairs."""
    lc = [c.id for c in t1.nodes[l].children if c.id not in m12]
    rc = [c.id for c in t2.nodes[r].children if c.id not in m21]
    by_hash: dict[bytes, list[int]] = {}
    for nid in rc:
        by_hash.setdefault(t2.nodes[nid].shash, []).append(nid)
    rest_l: list[int] = []
    for nid in lc:
        bucket = by_hash.get(t1.nodes[nid].shash)
        if bucket:
            map_subtrees(nid, bucket.pop(0))
        else:
            rest_l.append(nid)
    rest_r = [nid for nid in rc if nid not in m21]
    for li, ri in _lcs_pairs([t1.nodes[n].kind for n in rest_l],
                             [t2.nodes[n].kind for n in rest_r]):
        ln, rn = rest_l[li], rest_r[ri]
        map_pair(ln, rn)
        _align_children(t1, t2, ln, rn, m12, m21, map_pair, map_subtrees)


def _lcs_pairs(a: list[str], b: list[str]) -> list[tuple[int, int]]:
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return []
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                dp[i][j] = dp[i + 1][j + 1] + 1
            else:
                dp[i][j] = max(dp[i + 1][j], dp[i][j + 1])
    out: list[tuple[int, int]] = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            out.append((i, j))
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1
        else:
            j += 1
    return out


def _derive_script(t1: SyntaxTree, t2: SyntaxTree, m12, m21) -> EditScript:
    ops: list[EditOp] = []
    moved: set[int] = set()  # left ids

    # parent-change moves
    for l, r in m12.items():
        pl = t1.nodes[l].parent
        pr = t2.nodes[r].parent
        if (pl is None) != (pr is None) or (pl is not None and m12.get(pl) != pr):
            moved.add(l)

    # same-parent order moves: keep the longest increasing run, move the rest
    for rp in range(len(t2)):
        kids = [c.id for c in t2.nodes[rp].children]
        stable = [r for r in kids
                  if r in m21 and m21[r] not in moved
                  and t1.nodes[m21[r]].parent is not None
                  and m12.get(t1.nodes[m21[r]].parent) == rp]
        seq = [m21[r] for r in stable]
        keep = _lis_indices(seq)
        for idx, r in enumerate(stable):
            if idx not in keep:
                moved.add(m21[r])

    for l in sorted(m12):
        r = m12[l]
        ln, rn = t1.nodes[l], t2.nodes[r]
        if (ln.kind, ln.label) != (rn.kind, rn.label):
            ops.append(EditOp("update", left=l, right=r, kind=rn.kind, label=rn.label))
    for l in sorted(moved):
        r = m12[l]
        pr = t2.nodes[r].parent
        idx = 0 if pr is None else [c.id for c in t2.nodes[pr].children].index(r)
        ops.append(EditOp("move", left=l, right=r, parent_right=pr, index=idx))
    for l in range(len(t1)):
        if l not in m12:
            ops.append(EditOp("delete", left=l))
    for r in range(len(t2)):
        if r not in m21:
            rn = t2.nodes[r]
            pr = rn.parent
            idx = 0 if pr is None else [c.id for c in t2.nodes[pr].children].index(r)
            ops.append(EditOp("insert", right=r, kind=rn.kind, label=rn.label,
                              parent_right=pr, index=idx))

    mapped_count = len(m12)
    total_units = mapped_count + (len(t1) - mapped_count) + (len(t2) - mapped_count)
    mapping = sorted(m12.items())
    return EditScript(ops, mapping, mapped_count, total_units)


def _lis_indices(seq: list[int]) -> set[int]:
    """Indices of one longest strictly-increasing subsequence of seq."""
    if not seq:
        return set()
    import bisect
    tails: list[int] = []   # values
    tidx: list[int] = []    # index of tail value
    prev = [-1] * len(seq)
    for i, v in enumerate(seq):
        k = bisect.bisect_left(tails, v)
        if k == len(tails):
            tails.append(v)
            tidx.append(i)
        else:
            tails[k] = v
            tidx[k] = i
        prev[i] = tidx[k - 1] if k > 0 else -1
    out: set[int] = set()
    i = tidx[-1]
    while i != -1:
        out.add(i)
        i = prev[i]
    return out


_PARSERS = {"script": parse_js_lexical, "stylesheet": parse_css}


def asset_contributions(pairing, kind: str, read_left, read_right) -> list[dict]:
    """Per-pair diff contributions for one resource kind.

    Digest-equal pairs skip the diff and contribute zero ops over their
    node count; one-sided pairs are charged their full node count.
    """
    parse = _PARSERS[kind]
    out: list[dict] = []
    for pair in pairing.of_kind(kind):
        left, right = pair.left, pair.right
        entry = {
            "url": (left or right).url,
            "basis": pair.match_basis,
            "left_digest": left.digest if left else None,
            "right_digest": right.digest if right else None,
        }
        if left is not None and right is not None:
            if left.digest == right.digest:
                tree = parse(read_left(left))
                entry.update(units=len(tree), op_count=0,
                             changed_properties=[], changed_selectors=[])
            else:
                t1 = parse(read_left(left))
                t2 = parse(read_right(right))
                script = gumtree_diff(t1, t2)
                entry.update(units=script.total_units, op_count=len(script.ops),
                             changed_properties=_changed_labels(t1, t2, script, "decl", _decl_property),
                             changed_selectors=_changed_labels(t1, t2, script, "rule", str))
        else:
            tree = parse(read_left(left) if left is not None else read_right(right))
            entry.update(units=len(tree), op_count=len(tree),
                         changed_properties=sorted({
                             _decl_property(n.label) for n in tree.nodes if n.kind == "decl"}),
                         changed_selectors=sorted({
                             n.label for n in tree.nodes if n.kind == "rule"}))
        out.append(entry)
    return out


def asset_similarity(pairing, kind: str, read_left, read_right) -> float:
    """1 - sum(ops)/sum(units) over all pairs of the kind; 1.0 when empty."""
    contribs = asset_contributions(pairing, kind, read_left, read_right)
    return similarity_from_contributions(contribs)


def similarity_from_contributions(contribs: list[dict]) -> float:
    units = sum(c["units"] for c in contribs)
    ops = sum(c["op_count"] for c in contribs)
    if units == 0:
        return 1.0
    return max(0.0, 1.0 - ops / units)


def _decl_property(label: str) -> str:
    return label.split(":", 1)[0].strip()


def _changed_labels(t1: SyntaxTree, t2: SyntaxTree, script: EditScript,
                    kind: str, extract) -> list[str]:
    """Labels of nodes of one kind touched by the edit script (both sides)."""
    labels: set[str] = set()
    for op in script.ops:
        if op.left is not None and t1.nodes[op.left].kind == kind:
            labels.add(extract(t1.nodes[op.left].label))
        if op.right is not None and t2.nodes[op.right].kind == kind:
            labels.add(extract(t2.nodes[op.right].label))
    return sorted(labels)


def apply_edit_script(t1: SyntaxTree, script: EditScript) -> SyntaxTree:
    """Replay an edit script against t1, reconstructing the right-hand tree.

    Uses only t1 plus the script (mapping and ops); validation hook for the
    soundness property.
    """
    m12 = dict(script.mapping)
    updates = {op.left: (op.kind, op.label) for op in script.ops if op.op == "update"}
    moves = {op.left: (op.parent_right, op.index) for op in script.ops if op.op == "move"}
    inserts = [op for op in script.ops if op.op == "insert"]
    deleted = {op.left for op in script.ops if op.op == "delete"}

    made: dict[int, STNode] = {}  # right id -> new node
    parent_of: dict[int, int | None] = {}
    placed_at: dict[int, int] = {}  # right id -> explicit final index (moved/inserted)
    for l, r in m12.items():
        src = t1.nodes[l]
        kind, label = updates.get(l, (src.kind, src.label))
        made[r] = STNode(kind, label)
        if l in moves:
            parent_of[r], placed_at[r] = moves[l]
        else:
            pl = t1.nodes[l].parent
            parent_of[r] = m12[pl] if pl is not None else None
    for op in inserts:
        made[op.right] = STNode(op.kind, op.label)
        parent_of[op.right] = op.parent_right
        placed_at[op.right] = op.index
    for l in deleted:
        if l in m12:
            raise ValueError("delete op targets a mapped node")

    # children: stable nodes keep t1 relative order; moved/inserted nodes land
    # at their recorded index, ascending
    kids: dict[int | None, list[int]] = {}
    stable_order: dict[int, int] = {}
    for l in range(len(t1)):
        if l in m12:
            stable_order[m12[l]] = l
    for r, p in parent_of.items():
        kids.setdefault(p, []).append(r)
    for p, rs in kids.items():
        stable = sorted([r for r in rs if r not in placed_at], key=lambda r: stable_order[r])
        explicit = sorted([r for r in rs if r in placed_at], key=lambda r: (placed_at[r], r))
        final = list(stable)
        for r in explicit:
            final.insert(min(placed_at[r], len(final)), r)
        kids[p] = final

    roots = kids.get(None, [])
    if len(roots) != 1:
        raise ValueError(f"script does not produce a single root (got {len(roots)})")

    def build(r: int) -> STNode:
        node = made[r]
        node.children = [build(c) for c in kids.get(r, [])]
        return node

    return SyntaxTree(build(roots[0]))
