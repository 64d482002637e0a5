"""Change-impact classification of UA-dependent differences.

Comparison reports are reduced to canonical sets of evidence atoms; the
atom sets of every standard-vs-None pair and every standard-vs-standard
pair feed a fixed, ordered rule list mapping change patterns to an impact
label and a usability severity.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ArityMismatch, MissingEvidence
from .radar import RadarReport

CSS_PROPERTY = "css_property"
HTML_ATTRIBUTE = "html_attribute"
TEXT_SIGNAL = "text_signal"
STATUS_SIGNAL = "status_signal"

Atom = tuple[str, str, str]  # (category, name, context)

SEVERITY_BY_LABEL = {
    "margin_collapsing_fail": "SEVERE",
    "soft_wrap_fail": "SEVERE",
    "unnecessary_blank_lines": "SEVERE",
    "inline_css_change": "MODERATE",
    "lazy_loading_fail": "SEVERE",
    "displaced_iframe": "MODERATE",
    "disabled_component": "UNUSABLE",
    "browser_not_identified": "UNUSABLE",
    "content_restriction": "UNUSABLE",
    "no_impact": "IRRITANT",
    "no_pattern": "NONE",
}

@dataclass(frozen=True)
class ChangeDelta:
    atoms: frozenset[Atom]

    @classmethod
    def from_atoms(cls, atoms) -> "ChangeDelta":
        return cls(frozenset(atoms))

    def sorted_atoms(self) -> list[Atom]:
        return sorted(self.atoms)

    def __bool__(self) -> bool:
        return bool(self.atoms)


@dataclass
class ImpactReport:
    page_url: str
    label: str
    severity: str
    matched_atoms: list[Atom]

    def to_dict(self) -> dict:
        return {
            "page_url": self.page_url,
            "label": self.label,
            "severity": self.severity,
            "matched_atoms": [list(a) for a in self.matched_atoms],
        }


def _parse_style(style: str | None) -> dict[str, str]:
    out: dict[str, str] = {}
    if not style:
        return out
    for chunk in style.split(";"):
        if ":" not in chunk:
            continue
        prop, _, value = chunk.partition(":")
        prop = prop.strip().lower()
        if prop:
            out[prop] = " ".join(value.split()).lower()
    return out


def extract_delta(report: RadarReport) -> ChangeDelta:
    """Reduce one comparison report to its canonical set of evidence atoms."""
    ev = report.evidence
    if not ev or "html_structure" not in ev or "html_content" not in ev:
        raise MissingEvidence(f"report {report.pair_label} carries no evidence blocks")
    atoms: set[Atom] = set()

    for block_name in ("css", "javascript"):
        for f in ev.get(block_name, {}).get("files", ()):
            for prop in f.get("changed_properties", ()):
                atoms.add((CSS_PROPERTY, prop, f["url"]))
            for sel in f.get("changed_selectors", ()):
                low = sel.lower()
                for marker in ("disabled", "inactive"):
                    if f":{marker}" in low:
                        atoms.add((HTML_ATTRIBUTE, marker, f["url"]))

    for change in ev["html_structure"].get("attr_changes", ()):
        tag, attr = change["tag"], change["attr"]
        if attr == "style":
            left = _parse_style(change.get("left"))
            right = _parse_style(change.get("right"))
            for prop in sorted(set(left) | set(right)):
                if left.get(prop) != right.get(prop):
                    atoms.add((CSS_PROPERTY, prop, "inline"))
        else:
            atoms.add((HTML_ATTRIBUTE, attr, tag))

    content = ev["html_content"]
    left_m = set(content.get("markers_left", ()))
    right_m = set(content.get("markers_right", ()))
    for marker in left_m ^ right_m:
        atoms.add((STATUS_SIGNAL, marker, "document"))

    for hunk in content.get("changed_hunks", ()):
        atoms.add((TEXT_SIGNAL, hunk["digest"], "document"))

    return ChangeDelta.from_atoms(atoms)


def _names(delta: ChangeDelta, category: str) -> set[str]:
    return {name for cat, name, _ in delta.atoms if cat == category}


def _match(delta: ChangeDelta, category: str, names=None, context=None) -> list[Atom]:
    out = []
    for atom in delta.sorted_atoms():
        cat, name, ctx = atom
        if cat != category:
            continue
        if names is not None and name not in names:
            continue
        if context is not None and ctx != context:
            continue
        out.append(atom)
    return out


def classify_impact(std_none: list[ChangeDelta], std_std: list[ChangeDelta],
                    page_url: str = "") -> ImpactReport:
    """Ordered first-match rule evaluation over browser-pair deltas.

    std_none holds one delta per standard-vs-None comparison, std_std one
    per standard-vs-standard comparison.
    """
    if not std_none or not std_std:
        raise ArityMismatch("need at least one delta on each side")

    def report(label: str, matched: list[Atom]) -> ImpactReport:
        return ImpactReport(page_url, label, SEVERITY_BY_LABEL[label], matched)

    all_equal = all(d.atoms == std_none[0].atoms for d in std_none)
    if all_equal:
        delta = std_none[0]
        rules = [
            ("margin_collapsing_fail",
             _match(delta, CSS_PROPERTY, names={"margin-top", "margin-bottom"})),
            # matched by property name: "wrap" alone is not a standard value
            ("soft_wrap_fail",
             _match(delta, CSS_PROPERTY, names={"white-space"})),
            ("unnecessary_blank_lines",
             _match(delta, CSS_PROPERTY, names={"page-break-before", "page-break-after"})),
            ("inline_css_change",
             _match(delta, CSS_PROPERTY, context="inline")),
            ("lazy_loading_fail",
             _match(delta, HTML_ATTRIBUTE, names={"src"}, context="img")),
            ("displaced_iframe",
             _match(delta, HTML_ATTRIBUTE, names={"width", "height"}, context="iframe")),
            ("disabled_component",
             _match(delta, HTML_ATTRIBUTE, names={"disabled", "inactive"})),
            ("browser_not_identified",
             _match(delta, STATUS_SIGNAL)),
        ]
        for label, matched in rules:
            if matched:
                return report(label, matched)
        none_set = {d.atoms for d in std_none}
        std_set = {d.atoms for d in std_std}
        if none_set != std_set:
            std_union = frozenset().union(*std_set)
            matched = sorted(delta.atoms - std_union)
            return report("content_restriction", matched)
        return report("no_pattern", [])

    def pairwise_distinct(deltas: list[ChangeDelta]) -> bool:
        seen = set()
        for d in deltas:
            if d.atoms in seen:
                return False
            seen.add(d.atoms)
        return True

    if pairwise_distinct(std_none) and pairwise_distinct(std_std):
        return report("no_impact", [])
    return report("no_pattern", [])


def write_impact_json(reports: list[ImpactReport], path: str | Path) -> None:
    from .snapshot import atomic_write_text
    payload = [r.to_dict() for r in reports]
    atomic_write_text(Path(path), json.dumps(payload, indent=2, sort_keys=True))


def write_impact_csv(reports: list[ImpactReport], path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["url", "label", "severity"])
        for r in reports:
            writer.writerow([r.page_url, r.label, r.severity])
    tmp.replace(path)
