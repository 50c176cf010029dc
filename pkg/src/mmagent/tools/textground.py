"""Locate query text among OCR boxes.

Two stages: an edit-distance filter over the recognized strings, then an
optional refinement by region label when the query carries an object name
(``text[:object_name]``, e.g. ``"menu: button"``).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class OcrBox:
    text: str
    box: tuple[float, float, float, float]  # x0, y0, x1, y1 in pixels
    region_label: str | None = None

    def __post_init__(self) -> None:
        x0, y0, x1, y1 = self.box
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"degenerate box {self.box}")


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit costs on case-folded strings."""
    a = a.casefold()
    b = b.casefold()
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def parse_text_query(query: str) -> tuple[str, str | None]:
    """Split ``text[:object_name]`` at the last colon."""
    if ":" in query:
        text, _, label = query.rpartition(":")
        return text.strip(), label.strip() or None
    return query.strip(), None


def default_threshold(query_text: str) -> int:
    return max(1, len(query_text) // 5)


def text_ground(
    query: str, boxes: list[OcrBox], threshold: int | None = None
) -> list[OcrBox]:
    """Boxes whose text matches the query within the edit-distance threshold.

    When more than one box matches and the query names an object, matches are
    narrowed to boxes whose region label equals that name; if no match carries
    a label, or none of the labels agree, the stage-1 matches are returned
    unchanged.  An empty result is a valid "not found".
    """
    query_text, object_name = parse_text_query(query)
    if threshold is None:
        threshold = default_threshold(query_text)
    matches = [b for b in boxes if edit_distance(b.text, query_text) <= threshold]
    if len(matches) > 1 and object_name is not None:
        labeled = [b for b in matches if b.region_label is not None]
        if labeled:
            refined = [
                b for b in labeled
                if b.region_label.casefold() == object_name.casefold()
            ]
            if refined:
                return refined
    return matches
