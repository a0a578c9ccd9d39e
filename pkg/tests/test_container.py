"""Container format: round-trips, strict parsing, hard-binding digests."""

import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from provlab.container import (
    MAGIC,
    Asset,
    ByteRange,
    SegmentKind,
    build_asset,
    compute_hard_binding,
    embed_manifest,
    extract_manifest,
    manifest_insert_offset,
    parse_asset,
    replace_manifest,
    serialize_asset,
    splice_bytes,
    strip_manifest,
    wire_span,
)
from provlab.errors import (
    DuplicateManifest,
    ExclusionOutOfBounds,
    ExclusionsOverlap,
    LengthMismatch,
    MalformedContainer,
    ManifestNotExcluded,
    NoManifest,
)


def simple_parts(manifest: bytes | None = b"MANIFEST"):
    parts = [
        (SegmentKind.HEADER, "header", b"HEAD"),
        (SegmentKind.METADATA, "meta.gps", b"+10.000000,+020.000000"),
        (SegmentKind.IMAGE_DATA, "image", bytes(range(64))),
        (SegmentKind.TRAILER, "trailer", b"TRLR"),
    ]
    if manifest is not None:
        parts.insert(1, (SegmentKind.MANIFEST, "manifest", manifest))
    return parts


def test_build_parse_serialize_roundtrip():
    asset = build_asset(simple_parts())
    wire = serialize_asset(asset)
    assert wire.startswith(MAGIC)
    again = parse_asset(wire)
    assert again == asset
    assert serialize_asset(again) == wire


def test_logical_data_is_payload_concatenation():
    asset = build_asset(simple_parts(manifest=None))
    assert asset.data == b"HEAD" + b"+10.000000,+020.000000" + bytes(range(64)) + b"TRLR"
    for segment in asset.segments:
        assert asset.payload(segment) == asset.data[segment.range.start : segment.range.end]


def test_wire_span_points_at_payload_bytes():
    asset = build_asset(simple_parts())
    wire = serialize_asset(asset)
    for segment in asset.segments:
        span = wire_span(asset, segment)
        assert wire[span.start : span.end] == asset.payload(segment)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda w: b"XXXX" + w[4:],  # bad magic
        lambda w: w[:-1],  # truncated trailer payload
        lambda w: w + b"\x00",  # trailing garbage (kind 0 unknown)
        lambda w: w[:4] + bytes([1, 1, 0xFF, 0, 0, 0, 1, 0x41]),  # non-ascii label
        lambda w: w[:5],  # truncated segment header
    ],
)
def test_malformed_wire_rejected(mutate):
    wire = serialize_asset(build_asset(simple_parts()))
    with pytest.raises(MalformedContainer):
        parse_asset(mutate(wire))


def test_two_manifests_rejected():
    parts = simple_parts() + [(SegmentKind.MANIFEST, "manifest", b"SECOND")]
    with pytest.raises(DuplicateManifest):
        build_asset(parts)


def test_empty_payload_rejected():
    with pytest.raises(MalformedContainer):
        build_asset([(SegmentKind.HEADER, "header", b"")])


def test_duplicate_metadata_labels_rejected():
    parts = [
        (SegmentKind.HEADER, "header", b"HEAD"),
        (SegmentKind.METADATA, "note", b"one"),
        (SegmentKind.METADATA, "note", b"two"),
    ]
    with pytest.raises(MalformedContainer):
        build_asset(parts)


# ---------------------------------------------------------------------------
# hard binding: independent oracle
# ---------------------------------------------------------------------------

def oracle_digest(data: bytes, exclusions) -> bytes:
    """Straight-line reimplementation: hash the kept spans in order."""
    kept = bytearray()
    pos = 0
    for rng in sorted(exclusions):
        kept += data[pos : rng.start]
        pos = rng.end
    kept += data[pos:]
    return hashlib.sha256(bytes(kept)).digest()


def test_hard_binding_matches_oracle():
    asset = build_asset(simple_parts())
    manifest_segment = asset.find_manifest()
    gps = asset.find_label("meta.gps")
    exclusions = [manifest_segment.range, gps.range]
    binding = compute_hard_binding(asset, exclusions)
    assert binding.digest == oracle_digest(asset.data, exclusions)
    assert binding.algorithm == "sha-256"
    assert binding.exclusions == tuple(sorted(exclusions))


@given(st.data())
@settings(max_examples=100, deadline=None)
def test_hard_binding_matches_oracle_random(data):
    payloads = data.draw(
        st.lists(st.binary(min_size=1, max_size=40), min_size=2, max_size=6)
    )
    parts = [(SegmentKind.HEADER, "header", payloads[0])]
    parts.append((SegmentKind.MANIFEST, "manifest", payloads[1]))
    for index, payload in enumerate(payloads[2:]):
        parts.append((SegmentKind.METADATA, f"m{index}", payload))
    asset = build_asset(parts)
    # exclude the manifest plus a random subset of other segments
    exclusions = [asset.find_manifest().range]
    for segment in asset.segments:
        if segment.kind != SegmentKind.MANIFEST and data.draw(st.booleans()):
            exclusions.append(segment.range)
    binding = compute_hard_binding(asset, exclusions)
    assert binding.digest == oracle_digest(asset.data, exclusions)


def test_hard_binding_requires_manifest_coverage():
    asset = build_asset(simple_parts())
    gps = asset.find_label("meta.gps")
    with pytest.raises(ManifestNotExcluded):
        compute_hard_binding(asset, [gps.range])


def test_hard_binding_rejects_bad_ranges():
    asset = build_asset(simple_parts())
    manifest_range = asset.find_manifest().range
    with pytest.raises(ExclusionOutOfBounds):
        compute_hard_binding(asset, [manifest_range, ByteRange(len(asset.data), 1)])
    with pytest.raises(ExclusionsOverlap):
        compute_hard_binding(
            asset,
            [manifest_range, ByteRange(manifest_range.start + 1, manifest_range.length)],
        )


def test_hard_binding_insensitive_to_excluded_bytes():
    asset = build_asset(simple_parts())
    exclusions = [asset.find_manifest().range, asset.find_label("meta.gps").range]
    before = compute_hard_binding(asset, exclusions)
    mutated = splice_bytes(
        asset, asset.find_label("meta.gps").range, b"-80.000000,-170.000000"
    )
    assert compute_hard_binding(mutated, exclusions).digest == before.digest


def test_hard_binding_sensitive_to_any_covered_byte():
    asset = build_asset(simple_parts())
    exclusions = [asset.find_manifest().range]
    before = compute_hard_binding(asset, exclusions).digest
    image = asset.find_label("image")
    for offset in range(image.range.length):
        target = ByteRange(image.range.start + offset, 1)
        flipped = bytes([asset.data[target.start] ^ 0x01])
        mutated = splice_bytes(asset, target, flipped)
        assert compute_hard_binding(mutated, exclusions).digest != before


# ---------------------------------------------------------------------------
# manifest embedding
# ---------------------------------------------------------------------------

def test_embed_extract_strip_roundtrip():
    bare = build_asset(simple_parts(manifest=None))
    embedded = embed_manifest(bare, b"THE-MANIFEST")
    assert extract_manifest(embedded) == b"THE-MANIFEST"
    segment = embedded.find_manifest()
    assert segment.range.start == manifest_insert_offset(bare)
    assert strip_manifest(embedded) == bare
    with pytest.raises(DuplicateManifest):
        embed_manifest(embedded, b"AGAIN")
    with pytest.raises(NoManifest):
        strip_manifest(bare)


def test_manifest_inserted_after_header():
    bare = build_asset(simple_parts(manifest=None))
    embedded = embed_manifest(bare, b"M")
    kinds = [segment.kind for segment in embedded.segments]
    assert kinds[0] == SegmentKind.HEADER
    assert kinds[1] == SegmentKind.MANIFEST


def test_replace_manifest_shifts_following_segments():
    asset = build_asset(simple_parts())
    replaced = replace_manifest(asset, b"MUCH-LONGER-MANIFEST-PAYLOAD")
    assert extract_manifest(replaced) == b"MUCH-LONGER-MANIFEST-PAYLOAD"
    # non-manifest payloads survive byte-for-byte
    for segment in asset.segments:
        if segment.kind == SegmentKind.MANIFEST:
            continue
        twin = replaced.find_label(segment.label)
        assert replaced.payload(twin) == asset.payload(segment)


def test_splice_requires_equal_length():
    asset = build_asset(simple_parts())
    gps = asset.find_label("meta.gps")
    with pytest.raises(LengthMismatch):
        splice_bytes(asset, gps.range, b"short")


@given(st.binary(max_size=400))
@settings(max_examples=300, deadline=None)
def test_parser_is_total_on_garbage(blob):
    try:
        asset = parse_asset(blob)
    except MalformedContainer:
        return
    except DuplicateManifest:
        return
    assert serialize_asset(asset) == blob
