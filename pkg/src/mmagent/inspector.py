"""Visual resource tracking.

Every image or video the session touches, whether supplied by the user or
produced by a tool, gets a dense index, an immutable metadata record and a
one-line summary the planner can read.  Transcript and OCR sidecars live in
a separate map keyed by index so the records themselves never mutate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .tools.transcripts import TranscriptLine, slice_lines


class InvalidMetadata(Exception):
    pass


class NotFound(Exception):
    pass


@dataclass(frozen=True)
class VisualResource:
    """Metadata for one image or video.

    Video-only fields (duration_s, has_audio, has_subtitles) are None for
    images.  ``parent`` is (index, tool name) provenance and is present
    exactly when ``source`` is "system".  ``clip_span`` marks a segmented
    clip's (start, end) inside the parent video, in seconds.
    """

    index: int
    kind: str  # "image" | "video"
    source: str  # "user" | "system"
    location: str
    description: str
    duration_s: float | None = None
    has_audio: bool | None = None
    has_subtitles: bool | None = None
    parent: tuple[int, str] | None = None
    clip_span: tuple[float, float] | None = None


def _format_seconds(value: float) -> str:
    return f"{value:g}"


def summarize(resource: VisualResource) -> str:
    """Deterministic single-line summary, always naming ``visual[i]``."""
    if resource.source == "user":
        origin = "user-provided"
    else:
        parent_index, tool = resource.parent  # type: ignore[misc]
        origin = f"system: {tool} from visual[{parent_index}]"
    line = f"visual[{resource.index}]: {resource.kind} ({origin}) - {resource.description}"
    if resource.clip_span is not None and resource.parent is not None:
        a, b = resource.clip_span
        line += (
            f"; segment {_format_seconds(a)}s-{_format_seconds(b)}s"
            f" of visual[{resource.parent[0]}]"
        )
    if resource.kind == "video":
        extras = [f"duration {_format_seconds(resource.duration_s or 0.0)}s"]
        extras.append("audio" if resource.has_audio else "no audio")
        extras.append("subtitles" if resource.has_subtitles else "no subtitles")
        line += "; " + ", ".join(extras)
    return line


@dataclass
class ResourceStore:
    """Append-only catalog of a session's visual resources.

    ``workspace`` anchors artifact locators: system-produced resources store
    paths relative to it so traces stay machine-independent.
    """

    workspace: Path
    _resources: list[VisualResource] = field(default_factory=list)
    _sidecars: dict[int, dict[str, list[TranscriptLine]]] = field(default_factory=dict)
    _ocr: dict[int, list] = field(default_factory=dict)

    def register(
        self,
        kind: str,
        location: str,
        description: str,
        *,
        source: str = "user",
        duration_s: float | None = None,
        has_audio: bool | None = None,
        has_subtitles: bool | None = None,
        parent: tuple[int, str] | None = None,
        clip_span: tuple[float, float] | None = None,
    ) -> tuple[int, str]:
        """Add a resource; returns (index, summary line).

        The index is the previous catalog size; indices are never reused or
        reordered.
        """
        if kind not in ("image", "video"):
            raise InvalidMetadata(f"unknown resource kind: {kind!r}")
        if not location:
            raise InvalidMetadata("location is required")
        if (source == "system") != (parent is not None):
            raise InvalidMetadata("source=system exactly when parent is present")
        if kind == "image":
            if duration_s is not None or has_audio is not None or has_subtitles is not None:
                raise InvalidMetadata("video-only fields set on an image")
        else:
            if duration_s is None or duration_s <= 0:
                raise InvalidMetadata("videos need a positive duration_s")
            has_audio = bool(has_audio)
            has_subtitles = bool(has_subtitles)
        if clip_span is not None:
            if parent is None:
                raise InvalidMetadata("clip_span requires a parent")
            start, end = clip_span
            if not start < end:
                raise InvalidMetadata(f"empty clip span ({start}, {end})")
            parent_rec = self.get(parent[0])
            if parent_rec.duration_s is not None and not (
                0 <= start and end <= parent_rec.duration_s
            ):
                raise InvalidMetadata(
                    f"clip span ({start}, {end}) outside parent duration "
                    f"{parent_rec.duration_s}"
                )
        resource = VisualResource(
            index=len(self._resources),
            kind=kind,
            source=source,
            location=location,
            description=description,
            duration_s=duration_s,
            has_audio=has_audio,
            has_subtitles=has_subtitles,
            parent=parent,
            clip_span=clip_span,
        )
        self._resources.append(resource)
        return resource.index, summarize(resource)

    def register_clip(
        self, parent_index: int, tool: str, span: tuple[float, float], description: str
    ) -> tuple[int, str]:
        """Register a video segment produced by a grounding tool.

        The clip inherits the parent's audio/subtitle flags and its transcript
        sidecars restricted to the span (timestamps stay absolute).
        """
        parent = self.get(parent_index)
        if parent.kind != "video":
            raise InvalidMetadata(f"visual[{parent_index}] is not a video")
        start, end = span
        index, summary = self.register(
            "video",
            location=f"artifacts/{len(self._resources)}.mp4",
            description=description,
            source="system",
            duration_s=end - start,
            has_audio=parent.has_audio,
            has_subtitles=parent.has_subtitles,
            parent=(parent_index, tool),
            clip_span=span,
        )
        for channel, lines in self._sidecars.get(parent_index, {}).items():
            sliced = slice_lines(lines, start, end)
            if sliced:
                self.attach_transcript(index, channel, sliced)
        self._materialize(index)
        return index, summary

    def register_crop(
        self, parent_index: int, tool: str, description: str
    ) -> tuple[int, str]:
        """Register an image region produced by a spatial grounding tool."""
        index, summary = self.register(
            "image",
            location=f"artifacts/{len(self._resources)}.png",
            description=description,
            source="system",
            parent=(parent_index, tool),
        )
        self._materialize(index)
        return index, summary

    def _materialize(self, index: int) -> None:
        # Artifact files are placeholders; tools that need real bytes receive
        # locators and resolve them through the adapter side.
        path = self.resolve(self.get(index))
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(b"")

    def get(self, index: int) -> VisualResource:
        if not 0 <= index < len(self._resources):
            raise NotFound(f"visual[{index}] does not exist")
        return self._resources[index]

    def catalog(self) -> list[VisualResource]:
        return list(self._resources)

    def __len__(self) -> int:
        return len(self._resources)

    def resolve(self, resource: VisualResource) -> Path:
        """Absolute path for a resource's locator."""
        path = Path(resource.location)
        if path.is_absolute():
            return path
        return self.workspace / path

    # Sidecar data: transcript channels are "subtitles" (declared or ASR) and
    # "narration" (frame captions); OCR boxes attach to images.

    def attach_transcript(self, index: int, channel: str, lines: list[TranscriptLine]) -> None:
        self.get(index)
        if channel not in ("subtitles", "narration"):
            raise InvalidMetadata(f"unknown transcript channel: {channel!r}")
        self._sidecars.setdefault(index, {})[channel] = list(lines)

    def transcript(self, index: int, channel: str) -> list[TranscriptLine] | None:
        self.get(index)
        return self._sidecars.get(index, {}).get(channel)

    def attach_ocr(self, index: int, boxes: list) -> None:
        self.get(index)
        self._ocr[index] = list(boxes)

    def ocr(self, index: int) -> list | None:
        self.get(index)
        return self._ocr.get(index)


def as_record(resource: VisualResource) -> dict:
    """JSON-friendly form used by trace emission."""
    record: dict = {
        "index": resource.index,
        "kind": resource.kind,
        "source": resource.source,
        "location": resource.location,
        "description": resource.description,
    }
    if resource.kind == "video":
        record["duration_s"] = resource.duration_s
        record["has_audio"] = resource.has_audio
        record["has_subtitles"] = resource.has_subtitles
    if resource.parent is not None:
        record["parent"] = [resource.parent[0], resource.parent[1]]
    if resource.clip_span is not None:
        record["clip_span"] = [resource.clip_span[0], resource.clip_span[1]]
    return record


def from_record(record: dict) -> VisualResource:
    parent = record.get("parent")
    clip_span = record.get("clip_span")
    return VisualResource(
        index=record["index"],
        kind=record["kind"],
        source=record["source"],
        location=record["location"],
        description=record["description"],
        duration_s=record.get("duration_s"),
        has_audio=record.get("has_audio"),
        has_subtitles=record.get("has_subtitles"),
        parent=(parent[0], parent[1]) if parent else None,
        clip_span=(clip_span[0], clip_span[1]) if clip_span else None,
    )
