"""Visible-text extraction and the HTML-content similarity axis.

Character-level Myers diff produces an insert/delete script; the distance
estimate follows the diff-match-patch rule (max of pending insert and
delete lengths per change block) and is normalized into a similarity via
1 - 2d/(|a| + |b| + d).
"""

from __future__ import annotations

from dataclasses import dataclass

from .domstruct import DomTree

LINE_PREDIFF_MIN = 10_000
# change blocks beyond this size are kept coarse instead of re-diffed per char
REFINE_CAP = 200_000

EQUAL = "equal"
INSERT = "insert"
DELETE = "delete"


@dataclass
class DiffScript:
    hunks: list[tuple[str, str]]  # (op, text)

    def left(self) -> str:
        return "".join(t for op, t in self.hunks if op in (EQUAL, DELETE))

    def right(self) -> str:
        return "".join(t for op, t in self.hunks if op in (EQUAL, INSERT))

    def equal_text(self) -> str:
        return "".join(t for op, t in self.hunks if op == EQUAL)


@dataclass
class ContentScore:
    d: int
    len_left: int
    len_right: int
    s2: float


def extract_text(t: DomTree) -> str:
    """Pre-order concatenation of element text, skipping script/style."""
    parts: list[str] = []
    stack = [t.root]
    order: list[int] = []
    while stack:
        nid = stack.pop()
        order.append(nid)
        stack.extend(reversed(t.nodes[nid].children))
    for nid in order:
        n = t.nodes[nid]
        if n.tag in ("script", "style"):
            continue
        if n.text:
            parts.append(n.text)
    return " ".join(parts).strip()


def _common_prefix(a, b) -> int:
    n = min(len(a), len(b))
    lo = 0
    while lo < n and a[lo] == b[lo]:
        lo += 1
    return lo


def _common_suffix(a, b) -> int:
    n = min(len(a), len(b))
    k = 0
    while k < n and a[len(a) - 1 - k] == b[len(b) - 1 - k]:
        k += 1
    return k


def _myers_core(a, b) -> list[tuple[str, object]]:
    """Minimal insert/delete script between two sequences (Myers O(ND))."""
    n, m = len(a), len(b)
    if n == 0:
        return [(INSERT, b)] if m else []
    if m == 0:
        return [(DELETE, a)]
    max_d = n + m
    size = 2 * max_d + 1
    v = [0] * size
    trace: list[list[int]] = []
    found = False
    for d in range(max_d + 1):
        trace.append(v[:])
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v[k - 1 + max_d] < v[k + 1 + max_d]):
                x = v[k + 1 + max_d]
            else:
                x = v[k - 1 + max_d] + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[k + max_d] = x
            if x >= n and y >= m:
                found = True
                break
        if found:
            break

    # backtrack: collect (op, index-run) triples in reverse
    ops: list[tuple[str, int, int]] = []  # (op, start, end) over a or b
    x, y = n, m
    for d in range(len(trace) - 1, 0, -1):
        vprev = trace[d]
        k = x - y
        if k == -d or (k != d and vprev[k - 1 + max_d] < vprev[k + 1 + max_d]):
            pk = k + 1
        else:
            pk = k - 1
        px = vprev[pk + max_d]
        py = px - pk
        snake = (x - px) if pk == k + 1 else (x - px - 1)
        if snake > 0:
            ops.append((EQUAL, x - snake, x))
        if pk == k + 1:
            ops.append((INSERT, py, py + 1))
        else:
            ops.append((DELETE, px, px + 1))
        x, y = px, py
    if x > 0:
        ops.append((EQUAL, 0, x))
    ops.reverse()

    out: list[tuple[str, object]] = []
    for op, s, e in ops:
        seq = a[s:e] if op in (EQUAL, DELETE) else b[s:e]
        out.append((op, seq))
    return out


def _normalize(hunks: list[tuple[str, str]]) -> list[tuple[str, str]]:
    """Merge adjacent same-op hunks, drop empties, order deletes before inserts."""
    merged: list[tuple[str, str]] = []
    pend_del: list[str] = []
    pend_ins: list[str] = []

    def flush():
        if pend_del:
            merged.append((DELETE, "".join(pend_del)))
            pend_del.clear()
        if pend_ins:
            merged.append((INSERT, "".join(pend_ins)))
            pend_ins.clear()

    for op, text in hunks:
        if not text:
            continue
        if op == EQUAL:
            flush()
            if merged and merged[-1][0] == EQUAL:
                merged[-1] = (EQUAL, merged[-1][1] + text)
            else:
                merged.append((EQUAL, text))
        elif op == DELETE:
            pend_del.append(text)
        else:
            pend_ins.append(text)
    flush()
    return merged


def _diff_chars(a: str, b: str) -> list[tuple[str, str]]:
    pre = _common_prefix(a, b)
    head = a[:pre]
    a, b = a[pre:], b[pre:]
    suf = _common_suffix(a, b)
    tail = a[len(a) - suf:] if suf else ""
    a, b = a[:len(a) - suf], b[:len(b) - suf]
    hunks: list[tuple[str, str]] = []
    if head:
        hunks.append((EQUAL, head))
    hunks.extend((op, seq) for op, seq in _myers_core(a, b))
    if tail:
        hunks.append((EQUAL, tail))
    return hunks


def _diff_lines_then_refine(a: str, b: str) -> list[tuple[str, str]]:
    """Diff on whole lines first, then re-diff each changed block per char."""
    la = a.splitlines(keepends=True)
    lb = b.splitlines(keepends=True)
    codes: dict[str, int] = {}
    ca = [codes.setdefault(ln, len(codes)) for ln in la]
    cb = [codes.setdefault(ln, len(codes)) for ln in lb]
    line_ops = _myers_core(ca, cb)

    hunks: list[tuple[str, str]] = []
    ia = ib = 0
    pend_a: list[str] = []
    pend_b: list[str] = []

    def flush_block():
        nonlocal pend_a, pend_b
        if not pend_a and not pend_b:
            return
        ta, tb = "".join(pend_a), "".join(pend_b)
        if len(ta) + len(tb) <= REFINE_CAP:
            hunks.extend(_diff_chars(ta, tb))
        else:
            if ta:
                hunks.append((DELETE, ta))
            if tb:
                hunks.append((INSERT, tb))
        pend_a, pend_b = [], []

    for op, seq in line_ops:
        count = len(seq)
        if op == EQUAL:
            flush_block()
            hunks.append((EQUAL, "".join(la[ia:ia + count])))
            ia += count
            ib += count
        elif op == DELETE:
            pend_a.extend(la[ia:ia + count])
            ia += count
        else:
            pend_b.extend(lb[ib:ib + count])
            ib += count
    flush_block()
    return hunks


def myers_diff(a: str, b: str) -> DiffScript:
    """Character-level minimal insert/delete script between two strings.

    Inputs longer than 10k characters on both sides are pre-diffed per
    line, then each changed block is refined per character.  Swapped
    inputs yield exact mirror scripts, keeping downstream distances
    symmetric.
    """
    if a == b:
        return DiffScript([(EQUAL, a)] if a else [])
    if (len(b), b) < (len(a), a):
        flip = {EQUAL: EQUAL, INSERT: DELETE, DELETE: INSERT}
        mirrored = [(flip[op], t) for op, t in myers_diff(b, a).hunks]
        return DiffScript(_normalize(mirrored))
    if min(len(a), len(b)) > LINE_PREDIFF_MIN:
        hunks = _diff_lines_then_refine(a, b)
    else:
        hunks = _diff_chars(a, b)
    return DiffScript(_normalize(hunks))


def hunk_levenshtein(s: DiffScript) -> int:
    """Distance estimate: per change block, the max of insert and delete lengths."""
    d = 0
    ins = dele = 0
    for op, text in s.hunks:
        if op == INSERT:
            ins += len(text)
        elif op == DELETE:
            dele += len(text)
        else:
            d += max(ins, dele)
            ins = dele = 0
    return d + max(ins, dele)


def content_similarity(a: str, b: str) -> ContentScore:
    """S2 = 1 - 2d/(|a| + |b| + d); 1.0 when both strings are empty."""
    d = hunk_levenshtein(myers_diff(a, b))
    la, lb = len(a), len(b)
    if la + lb == 0:
        return ContentScore(0, 0, 0, 1.0)
    return ContentScore(d, la, lb, 1.0 - 2.0 * d / (la + lb + d))
