"""Segmented asset container and hard bindings.

Wire layout of an asset file::

    magic "PVL1"
    repeated segments, each:
        kind          1 byte
        label-length  1 byte
        label         ASCII, label-length bytes
        payload-len   4 bytes, big-endian
        payload       payload-len bytes

An :class:`Asset` holds the *logical* content (the concatenation of segment
payloads) plus the segment table indexing into it; the framing above is
reproduced losslessly by :func:`serialize_asset`, so parse and serialize are
exact inverses.  All byte ranges in this module (segment ranges, exclusion
ranges, splices) address the logical content.

A hard binding is a digest over every logical byte not covered by an
exclusion range.  The manifest segment must always be excluded, since the
digest is stored inside it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import IntEnum

from .errors import (
    DuplicateManifest,
    ExclusionOutOfBounds,
    ExclusionsOverlap,
    LengthMismatch,
    MalformedContainer,
    ManifestNotExcluded,
    NoManifest,
)

MAGIC = b"PVL1"

MANIFEST_LABEL = "manifest"

_SEGMENT_HEAD_FIXED = 6  # kind + label-length + payload-length


class SegmentKind(IntEnum):
    HEADER = 1
    IMAGE_DATA = 2
    METADATA = 3
    MANIFEST = 4
    TRAILER = 5


@dataclass(frozen=True, order=True)
class ByteRange:
    """A half-open range ``[start, start + length)``; length is positive."""

    start: int
    length: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.length <= 0:
            raise ValueError(f"invalid byte range [{self.start}, {self.length})")

    @property
    def end(self) -> int:
        return self.start + self.length

    def contains(self, other: "ByteRange") -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass(frozen=True)
class Segment:
    kind: SegmentKind
    range: ByteRange
    label: str


@dataclass(frozen=True)
class HardBinding:
    """Digest over the logical bytes outside ``exclusions``."""

    algorithm: str
    exclusions: tuple[ByteRange, ...]
    digest: bytes


@dataclass(frozen=True)
class Asset:
    data: bytes
    segments: tuple[Segment, ...]

    def payload(self, segment: Segment) -> bytes:
        return self.data[segment.range.start : segment.range.end]

    def find_manifest(self) -> Segment | None:
        for segment in self.segments:
            if segment.kind == SegmentKind.MANIFEST:
                return segment
        return None

    def find_label(self, label: str) -> Segment | None:
        for segment in self.segments:
            if segment.label == label:
                return segment
        return None


def _check_label(label: str) -> bytes:
    try:
        raw = label.encode("ascii")
    except UnicodeEncodeError:
        raise MalformedContainer(f"segment label is not ASCII: {label!r}") from None
    if len(raw) > 255:
        raise MalformedContainer("segment label longer than 255 bytes")
    return raw


def _check_structure(segments: list[Segment]) -> None:
    manifests = [s for s in segments if s.kind == SegmentKind.MANIFEST]
    if len(manifests) > 1:
        raise DuplicateManifest("more than one manifest segment")
    labels = [s.label for s in segments if s.kind == SegmentKind.METADATA]
    if len(labels) != len(set(labels)):
        raise MalformedContainer("duplicate metadata label")
    for index, segment in enumerate(segments):
        if segment.kind == SegmentKind.HEADER and index != 0:
            raise MalformedContainer("header segment not first")
        if segment.kind == SegmentKind.TRAILER and index != len(segments) - 1:
            raise MalformedContainer("trailer segment not last")


def build_asset(parts: list[tuple[SegmentKind, str, bytes]]) -> Asset:
    """Assemble an asset from ``(kind, label, payload)`` parts."""
    segments: list[Segment] = []
    chunks: list[bytes] = []
    offset = 0
    for kind, label, payload in parts:
        _check_label(label)
        if not payload:
            raise MalformedContainer("empty segment payload")
        segments.append(Segment(SegmentKind(kind), ByteRange(offset, len(payload)), label))
        chunks.append(payload)
        offset += len(payload)
    _check_structure(segments)
    return Asset(b"".join(chunks), tuple(segments))


def parse_asset(data: bytes) -> Asset:
    """Parse container bytes; raises on any framing inconsistency."""
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise MalformedContainer("input must be bytes")
    data = bytes(data)
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise MalformedContainer("bad magic")
    pos = len(MAGIC)
    parts: list[tuple[SegmentKind, str, bytes]] = []
    while pos < len(data):
        if pos + 2 > len(data):
            raise MalformedContainer("truncated segment head")
        kind_byte = data[pos]
        label_len = data[pos + 1]
        pos += 2
        try:
            kind = SegmentKind(kind_byte)
        except ValueError:
            raise MalformedContainer(f"unknown segment kind {kind_byte}") from None
        if pos + label_len + 4 > len(data):
            raise MalformedContainer("truncated segment head")
        raw_label = data[pos : pos + label_len]
        pos += label_len
        if not raw_label.isascii():
            raise MalformedContainer("segment label is not ASCII")
        payload_len = int.from_bytes(data[pos : pos + 4], "big")
        pos += 4
        if payload_len == 0:
            raise MalformedContainer("empty segment payload")
        if pos + payload_len > len(data):
            raise MalformedContainer("segment payload overruns input")
        parts.append((kind, raw_label.decode("ascii"), data[pos : pos + payload_len]))
        pos += payload_len
    return build_asset(parts)


def serialize_asset(asset: Asset) -> bytes:
    """Reproduce the wire bytes for ``asset``; inverse of :func:`parse_asset`."""
    out = bytearray(MAGIC)
    for segment in asset.segments:
        raw_label = _check_label(segment.label)
        payload = asset.payload(segment)
        out.append(int(segment.kind))
        out.append(len(raw_label))
        out += raw_label
        out += len(payload).to_bytes(4, "big")
        out += payload
    return bytes(out)


def wire_span(asset: Asset, segment: Segment) -> ByteRange:
    """The segment payload's position inside :func:`serialize_asset` output."""
    pos = len(MAGIC)
    for candidate in asset.segments:
        head = _SEGMENT_HEAD_FIXED + len(candidate.label)
        if candidate == segment:
            return ByteRange(pos + head, candidate.range.length)
        pos += head + candidate.range.length
    raise ValueError("segment does not belong to this asset")


# ---------------------------------------------------------------------------
# hard binding
# ---------------------------------------------------------------------------

def _checked_exclusions(
    asset: Asset, exclusions: tuple[ByteRange, ...] | list[ByteRange]
) -> tuple[ByteRange, ...]:
    ordered = tuple(sorted(exclusions))
    for rng in ordered:
        if rng.end > len(asset.data):
            raise ExclusionOutOfBounds(
                f"range [{rng.start}, {rng.length}) exceeds asset of {len(asset.data)} bytes"
            )
    for prev, nxt in zip(ordered, ordered[1:]):
        if prev.end > nxt.start:
            raise ExclusionsOverlap(f"ranges at {prev.start} and {nxt.start} overlap")
    return ordered


def _covered(target: ByteRange, ordered: tuple[ByteRange, ...]) -> bool:
    pos = target.start
    for rng in ordered:
        if rng.end <= pos:
            continue
        if rng.start > pos:
            break
        pos = rng.end
        if pos >= target.end:
            return True
    return pos >= target.end


def compute_hard_binding(
    asset: Asset,
    exclusions: tuple[ByteRange, ...] | list[ByteRange],
    algorithm: str = "sha-256",
) -> HardBinding:
    """Digest every logical byte outside ``exclusions``, in offset order.

    If the asset carries a manifest segment, the exclusions must cover it
    completely: the manifest cannot hash itself.
    """
    if algorithm != "sha-256":
        raise ValueError(f"unsupported digest algorithm: {algorithm}")
    ordered = _checked_exclusions(asset, exclusions)
    manifest = asset.find_manifest()
    if manifest is not None and not _covered(manifest.range, ordered):
        raise ManifestNotExcluded("manifest segment not fully covered by exclusions")
    hasher = hashlib.sha256()
    pos = 0
    for rng in ordered:
        if rng.start > pos:
            hasher.update(asset.data[pos : rng.start])
        pos = max(pos, rng.end)
    if pos < len(asset.data):
        hasher.update(asset.data[pos:])
    return HardBinding(algorithm, ordered, hasher.digest())


# ---------------------------------------------------------------------------
# manifest embedding
# ---------------------------------------------------------------------------

def manifest_insert_offset(asset: Asset) -> int:
    """Canonical manifest position: immediately after a leading header."""
    if asset.segments and asset.segments[0].kind == SegmentKind.HEADER:
        return asset.segments[0].range.end
    return 0


def _shift(segment: Segment, delta: int) -> Segment:
    return Segment(
        segment.kind,
        ByteRange(segment.range.start + delta, segment.range.length),
        segment.label,
    )


def embed_manifest(asset: Asset, manifest_bytes: bytes) -> Asset:
    """Insert a manifest segment at the canonical position."""
    if asset.find_manifest() is not None:
        raise DuplicateManifest("asset already carries a manifest")
    if not manifest_bytes:
        raise ValueError("manifest bytes must be non-empty")
    offset = manifest_insert_offset(asset)
    index = 1 if offset else 0
    manifest = Segment(
        SegmentKind.MANIFEST, ByteRange(offset, len(manifest_bytes)), MANIFEST_LABEL
    )
    segments = (
        list(asset.segments[:index])
        + [manifest]
        + [_shift(s, len(manifest_bytes)) for s in asset.segments[index:]]
    )
    data = asset.data[:offset] + manifest_bytes + asset.data[offset:]
    return Asset(data, tuple(segments))


def extract_manifest(asset: Asset) -> bytes:
    segment = asset.find_manifest()
    if segment is None:
        raise NoManifest("asset carries no manifest segment")
    return asset.payload(segment)


def strip_manifest(asset: Asset) -> Asset:
    """Remove the manifest segment; inverse of :func:`embed_manifest`."""
    segment = asset.find_manifest()
    if segment is None:
        raise NoManifest("asset carries no manifest segment")
    data = asset.data[: segment.range.start] + asset.data[segment.range.end :]
    segments = [
        s if s.range.start < segment.range.start else _shift(s, -segment.range.length)
        for s in asset.segments
        if s != segment
    ]
    return Asset(data, tuple(segments))


def replace_manifest(asset: Asset, manifest_bytes: bytes) -> Asset:
    """Swap the manifest payload in place, shifting later segments."""
    if asset.find_manifest() is None:
        raise NoManifest("asset carries no manifest segment")
    return embed_manifest(strip_manifest(asset), manifest_bytes)


# ---------------------------------------------------------------------------
# splicing
# ---------------------------------------------------------------------------

def splice_bytes(asset: Asset, target: ByteRange, replacement: bytes) -> Asset:
    """Overwrite ``target`` with ``replacement`` of identical length."""
    if target.end > len(asset.data):
        raise ExclusionOutOfBounds(
            f"range [{target.start}, {target.length}) exceeds asset of {len(asset.data)} bytes"
        )
    if len(replacement) != target.length:
        raise LengthMismatch(
            f"replacement is {len(replacement)} bytes for a {target.length}-byte range"
        )
    data = asset.data[: target.start] + replacement + asset.data[target.end :]
    return Asset(data, asset.segments)
