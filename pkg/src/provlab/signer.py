"""Claim construction, manifest embedding, and fixture scenarios.

``sign_asset`` turns an unsigned asset into a signed one:

1. digest each assertion and compute the hard binding over the asset bytes,
   excluding the manifest-to-be plus any labelled segments;
2. build the claim and sign it.  In ``UNBOUND`` mode the timestamp token is
   fetched over the signature digest and merely attached.  In ``BOUND`` mode
   the construction is two-pass: sign the claim, timestamp that pass-1
   signature, then re-sign ``claim || token-digest``.  The pass-1 signature
   is discarded; what lands in the manifest is the pass-2 signature, whose
   payload pins the whole token;
3. embed the encoded manifest immediately after the header segment.

The claim records the manifest's own byte range among its exclusions, and
that length depends on the encoded claim itself, so construction iterates to
a fixed point.  The digest is unaffected (the manifest region is excluded
either way); only the recorded length wobbles, and it settles within a few
rounds because integer heads grow monotonically.

Fixture scenarios live here too: deterministic signed assets exercising each
configuration the validator and attack toolkit care about.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .container import (
    Asset,
    ByteRange,
    HardBinding,
    SegmentKind,
    build_asset,
    compute_hard_binding,
    embed_manifest,
    manifest_insert_offset,
    serialize_asset,
)
from .credentials import (
    Assertion,
    BindingMode,
    Claim,
    ClaimSignature,
    Manifest,
    digest_assertion,
    encode_claim,
    encode_manifest,
    signed_payload,
)
from .crypto import SigningKey, digest, derive_stream_seed
from .errors import (
    DuplicateManifest,
    ExpiredSignerCert,
    LabelNotFound,
    UnknownScenario,
    UsageViolation,
)
from .timestamp import TimestampAuthority, encode_token
from .trust import Certificate, Usage
from .workspace import DAY, T0, YEAR, Identity, Workspace

CLAIM_SPEC_VERSION = "1.0"

CREATED_LABEL = "std.created"


@dataclass(frozen=True)
class SignerConfig:
    generator_name: str
    key: SigningKey
    chain: tuple[Certificate, ...]
    binding_mode: BindingMode
    exclude_labels: tuple[str, ...] = ()
    tsa: TimestampAuthority | None = None
    clock: int = T0

    def __post_init__(self) -> None:
        if self.binding_mode == BindingMode.BOUND and self.tsa is None:
            raise ValueError("bound signing requires a timestamp authority")


def _build_claim_signature(
    claim: Claim, config: SignerConfig
) -> ClaimSignature:
    if config.binding_mode == BindingMode.UNBOUND:
        signature = config.key.sign(signed_payload(claim, BindingMode.UNBOUND))
        token = None
        if config.tsa is not None:
            token = config.tsa.issue(digest(signature))
        return ClaimSignature(config.chain, signature, token, BindingMode.UNBOUND)
    pass1 = config.key.sign(encode_claim(claim))
    token = config.tsa.issue(digest(pass1))  # type: ignore[union-attr]
    token_digest = digest(encode_token(token))
    signature = config.key.sign(signed_payload(claim, BindingMode.BOUND, token_digest))
    return ClaimSignature(config.chain, signature, token, BindingMode.BOUND)


def sign_asset(
    asset: Asset, assertions: list[Assertion] | tuple[Assertion, ...], config: SignerConfig
) -> Asset:
    """Sign ``asset`` and return it with the manifest embedded."""
    if asset.find_manifest() is not None:
        raise DuplicateManifest("asset already carries a manifest")
    leaf = config.chain[0]
    if leaf.usage != Usage.LEAF_SIGNING:
        raise UsageViolation(f"signing leaf has usage {leaf.usage.value}")
    if leaf.public_key != config.key.public_bytes:
        raise UsageViolation("signing key does not match the leaf certificate")
    if not leaf.in_window(config.clock):
        raise ExpiredSignerCert(f"signing certificate outside validity window at {config.clock}")

    assertions = list(assertions)
    if config.binding_mode == BindingMode.BOUND and not any(
        a.label == CREATED_LABEL for a in assertions
    ):
        assertions.append(Assertion(CREATED_LABEL, {"at": config.clock}))
    assertions.sort(key=lambda a: a.label)
    ordered = tuple(assertions)

    label_ranges = []
    for label in config.exclude_labels:
        segment = asset.find_label(label)
        if segment is None:
            raise LabelNotFound(f"no segment labelled {label!r}")
        label_ranges.append(segment.range)

    # The binding digest covers every byte outside the labelled exclusions;
    # the embedded manifest occupies exactly its own exclusion, so the digest
    # is independent of the manifest length.
    binding_digest = compute_hard_binding(asset, label_ranges).digest
    assertion_digests = tuple((a.label, digest_assertion(a)) for a in ordered)
    manifest_start = manifest_insert_offset(asset)

    manifest_bytes = b""
    manifest_length = 1
    for _ in range(10):
        exclusions = [ByteRange(manifest_start, manifest_length)]
        for rng in label_ranges:
            start = rng.start + manifest_length if rng.start >= manifest_start else rng.start
            exclusions.append(ByteRange(start, rng.length))
        claim = Claim(
            generator=config.generator_name,
            created_at=config.clock,
            assertion_digests=assertion_digests,
            binding=HardBinding("sha-256", tuple(sorted(exclusions)), binding_digest),
            spec_version=CLAIM_SPEC_VERSION,
        )
        manifest = Manifest(claim, ordered, _build_claim_signature(claim, config))
        manifest_bytes = encode_manifest(manifest)
        if len(manifest_bytes) == manifest_length:
            break
        manifest_length = len(manifest_bytes)
    else:
        raise RuntimeError("manifest size did not converge")
    return embed_manifest(asset, manifest_bytes)


# ---------------------------------------------------------------------------
# fixture scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    name: str
    binding_mode: BindingMode
    leaf_serial: int
    leaf_lifetime: int
    intended_policy: str
    exclude_labels: tuple[str, ...] = ()
    description: str = ""


SCENARIOS: dict[str, Scenario] = {
    s.name: s
    for s in (
        Scenario(
            "honest",
            BindingMode.UNBOUND,
            101,
            2 * YEAR,
            "spec",
            description="baseline signed asset, unbound token, manifest-only exclusion",
        ),
        Scenario(
            "gps-excluded",
            BindingMode.UNBOUND,
            102,
            2 * YEAR,
            "spec",
            exclude_labels=("meta.gps",),
            description="location metadata segment sits inside a declared exclusion",
        ),
        Scenario(
            "revocable",
            BindingMode.UNBOUND,
            103,
            2 * YEAR,
            "spec",
            description="signed by a leaf whose serial the attack toolkit later revokes",
        ),
        Scenario(
            "short-lived-cert",
            BindingMode.BOUND,
            104,
            30 * DAY,
            "hardened",
            description="30-day signing certificate for expiry experiments",
        ),
        Scenario(
            "unbound-timestamp",
            BindingMode.UNBOUND,
            105,
            2 * YEAR,
            "spec",
            description="token rides outside the signed payload and can be swapped",
        ),
        Scenario(
            "bound-timestamp",
            BindingMode.BOUND,
            106,
            2 * YEAR,
            "hardened",
            description="two-pass bound signature pinning the token",
        ),
    )
}

DEFAULT_VALIDATION_TIME = T0 + DAY

GPS_TEXT_WIDTH = 22  # "+DD.dddddd,-DDD.dddddd"


def format_gps(lat: float, lon: float) -> str:
    text = f"{lat:+010.6f},{lon:+011.6f}"
    if len(text) != GPS_TEXT_WIDTH:
        raise ValueError(f"coordinates do not fit the fixed width: {text!r}")
    return text


def build_scenario_content(
    scenario: Scenario, seed: int
) -> tuple[Asset, list[Assertion], str]:
    """Deterministic unsigned asset and assertions for a scenario."""
    rng = random.Random(derive_stream_seed(seed, f"fixture/{scenario.name}"))
    generator = f"labcam-{scenario.name}"
    lat = round(rng.uniform(-80.0, 80.0), 6)
    lon = round(rng.uniform(-170.0, 170.0), 6)
    parts = [(SegmentKind.HEADER, "header", b"PVH0" + rng.randbytes(12))]
    if "meta.gps" in scenario.exclude_labels or scenario.name == "gps-excluded":
        parts.append((SegmentKind.METADATA, "meta.gps", format_gps(lat, lon).encode("ascii")))
    parts.append(
        (SegmentKind.METADATA, "meta.note", f"scenario={scenario.name}".encode("ascii"))
    )
    parts.append((SegmentKind.IMAGE_DATA, "image", rng.randbytes(512)))
    parts.append((SegmentKind.TRAILER, "trailer", rng.randbytes(8)))
    assertions = [
        Assertion("std.actions", {"action": "captured", "agent": generator}),
        Assertion(CREATED_LABEL, {"at": T0}),
    ]
    if "meta.gps" in scenario.exclude_labels or scenario.name == "gps-excluded":
        assertions.append(Assertion("std.gps", {"lat": lat, "lon": lon}))
    return build_asset(parts), assertions, generator


@dataclass(frozen=True)
class Fixture:
    scenario: Scenario
    identity: Identity
    original: Asset
    signed: Asset
    original_path: Path
    asset_path: Path
    manifest_path: Path
    validation_time: int = DEFAULT_VALIDATION_TIME


def scenario_identity(workspace: Workspace, scenario: Scenario) -> Identity:
    return workspace.issue_leaf(
        subject=f"labcam-{scenario.name}",
        serial=scenario.leaf_serial,
        key_role=f"leaf/{scenario.name}",
        not_before=T0 - DAY,
        not_after=T0 + scenario.leaf_lifetime,
    )


def make_fixture(workspace: Workspace, scenario_name: str, seed: int | None = None) -> Fixture:
    """Generate one scenario's fixture tree under ``fixtures/<name>/``."""
    scenario = SCENARIOS.get(scenario_name)
    if scenario is None:
        raise UnknownScenario(f"no scenario named {scenario_name!r}")
    seed = workspace.seed if seed is None else seed
    asset, assertions, generator = build_scenario_content(scenario, seed)
    identity = scenario_identity(workspace, scenario)
    workspace.save()
    config = SignerConfig(
        generator_name=generator,
        key=identity.key,
        chain=identity.chain,
        binding_mode=scenario.binding_mode,
        exclude_labels=scenario.exclude_labels,
        tsa=workspace.tsa(),
        clock=workspace.clock,
    )
    signed = sign_asset(asset, assertions, config)

    fixture_dir = workspace.fixtures_dir / scenario.name
    fixture_dir.mkdir(parents=True, exist_ok=True)
    original_path = fixture_dir / "original.pvl"
    asset_path = fixture_dir / "asset.pvl"
    manifest_path = fixture_dir / "fixture.tsv"
    original_bytes = serialize_asset(asset)
    signed_bytes = serialize_asset(signed)
    original_path.write_bytes(original_bytes)
    asset_path.write_bytes(signed_bytes)

    rows = [
        f"# provlab fixture\tscenario={scenario.name}\tseed={seed}",
    ]
    for path, role, blob in (
        (original_path, "original", original_bytes),
        (asset_path, "signed-asset", signed_bytes),
    ):
        rows.append(f"{path.relative_to(workspace.root)}\t{role}\t{digest(blob).hex()}")
    manifest_path.write_text("\n".join(rows) + "\n")

    return Fixture(
        scenario=scenario,
        identity=identity,
        original=asset,
        signed=signed,
        original_path=original_path,
        asset_path=asset_path,
        manifest_path=manifest_path,
    )
