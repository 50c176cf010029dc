"""Detection post-processing: count the boxes matching a label."""

from __future__ import annotations


def count_objects(detections: list[dict], label: str) -> tuple[int, str]:
    """Count detections whose label matches (case-insensitive) and render the
    observation text."""
    wanted = label.casefold()
    matched = [d for d in detections if str(d.get("label", "")).casefold() == wanted]
    count = len(matched)
    if count == 0:
        return 0, f"Detected 0 {label}(s); none found."
    spots = ", ".join(_format_box(d.get("box")) for d in matched)
    return count, f"Detected {count} {label}(s) at {spots}."


def _format_box(box) -> str:
    if not box:
        return "(unlocated)"
    return "(" + ", ".join(f"{v:g}" for v in box) + ")"
