"""Attack toolkit: minimal mutations that flip validation outcomes.

Each attack returns an :class:`AttackOutcome` carrying the mutated asset and
the verdict each policy preset is *expected* to produce.  The expectations
are written down here, by hand, from the semantics of the mutation — they
are never computed by running the validator, so the test suite can compare
the two independently.

Two attacks change no bytes at all: ``sign-with-revoked`` changes authority
state (the serial is revoked after signing) and ``expiry-timewarp`` changes
only the validation time.  The other three are byte-minimal: they touch one
token, one excluded segment, or one whole manifest segment.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .container import (
    Asset,
    extract_manifest,
    replace_manifest,
    splice_bytes,
    strip_manifest,
)
from .credentials import BindingMode, decode_manifest, encode_manifest
from .crypto import digest
from .errors import (
    BoundModeError,
    LabelNotFound,
    LengthMismatch,
    NotExcluded,
    UntrustedTsa,
)
from .signer import SignerConfig, sign_asset
from .timestamp import TimestampAuthority
from .trust import Authority, TrustList, verify_chain
from .validator import Verdict

ATTACK_NAMES = (
    "timestamp-replace",
    "exclusion-mutate",
    "sign-with-revoked",
    "expiry-timewarp",
    "strip-manifest",
)

# which fixture scenarios each attack meaningfully applies to
ATTACK_MATRIX: dict[str, tuple[str, ...]] = {
    "timestamp-replace": ("honest", "gps-excluded", "revocable", "unbound-timestamp"),
    "exclusion-mutate": ("gps-excluded",),
    "sign-with-revoked": ("revocable",),
    "expiry-timewarp": ("short-lived-cert",),
    "strip-manifest": (
        "honest",
        "gps-excluded",
        "revocable",
        "short-lived-cert",
        "unbound-timestamp",
        "bound-timestamp",
    ),
}


@dataclass(frozen=True)
class AttackOutcome:
    name: str
    original: Asset
    mutated: Asset
    expected: dict[str, Verdict]  # policy preset name -> expected verdict
    notes: str
    validation_time: int | None = None  # None: validate at the usual time
    mutates_bytes: bool = True


def attack_timestamp_replace(
    asset: Asset, tsa: TimestampAuthority, new_time: int, trust: TrustList
) -> AttackOutcome:
    """Swap (or plant) the timestamp token on an unbound claim signature.

    The token covers only the digest of the signature bytes, so any party —
    not just the signer — can ask a TSA for a fresh token over that digest
    and splice it in.  With a trusted TSA willing to state ``new_time``, the
    asset's displayed time moves anywhere inside the TSA window.
    """
    manifest = decode_manifest(extract_manifest(asset))
    claim_signature = manifest.claim_signature
    if claim_signature.binding_mode == BindingMode.BOUND:
        raise BoundModeError(
            "the claim signature pins its token; a replacement breaks the signature"
        )
    if not verify_chain(tsa.chain, trust, new_time).valid:
        raise UntrustedTsa(
            "replacement token would not chain to a trusted root at the chosen time"
        )
    token = tsa.issue(digest(claim_signature.signature), clock=new_time)
    mutated_manifest = replace(
        manifest, claim_signature=replace(claim_signature, timestamp=token)
    )
    mutated = replace_manifest(asset, encode_manifest(mutated_manifest))
    return AttackOutcome(
        name="timestamp-replace",
        original=asset,
        mutated=mutated,
        expected={"spec": Verdict.ACCEPTED, "hardened": Verdict.REJECTED},
        notes=(
            f"token re-minted at {new_time} over the unchanged signature digest; "
            "nothing the claim signature covers has moved"
        ),
    )


def attack_exclusion_mutate(asset: Asset, label: str, new_payload: bytes) -> AttackOutcome:
    """Overwrite a segment that the claim's own exclusions leave unhashed.

    The hard-binding digest is computed over everything *outside* the
    declared exclusions, so bytes inside them can be rewritten freely
    without touching the digest.  Length must match: exclusions are offsets.
    """
    manifest = decode_manifest(extract_manifest(asset))
    segment = asset.find_label(label)
    if segment is None:
        raise LabelNotFound(f"no segment labelled {label!r}")
    declared = manifest.claim.binding.exclusions
    if not any(rng.contains(segment.range) for rng in declared):
        raise NotExcluded(
            f"segment {label!r} is covered by the hard binding; a splice would be detected"
        )
    if len(new_payload) != segment.range.length:
        raise LengthMismatch(
            f"replacement is {len(new_payload)} bytes, segment holds {segment.range.length}"
        )
    mutated = splice_bytes(asset, segment.range, bytes(new_payload))
    return AttackOutcome(
        name="exclusion-mutate",
        original=asset,
        mutated=mutated,
        expected={"spec": Verdict.ACCEPTED, "hardened": Verdict.REJECTED},
        notes=(
            f"segment {label!r} rewritten in place inside a declared exclusion; "
            "the binding digest is bit-identical"
        ),
    )


def attack_sign_with_revoked(
    content: Asset,
    assertions,
    config: SignerConfig,
    authority: Authority,
    revoke_at: int,
    validation_time: int,
) -> AttackOutcome:
    """Sign honestly, then keep using the credential after revocation.

    No asset byte changes: the compromise lives in authority state.  A
    validator that never asks about revocation keeps accepting the
    signature for the rest of the certificate's lifetime.
    """
    signed = sign_asset(content, assertions, config)
    authority.revoke(config.chain[0].serial, revoke_at)
    return AttackOutcome(
        name="sign-with-revoked",
        original=signed,
        mutated=signed,
        expected={"spec": Verdict.ACCEPTED, "hardened": Verdict.REJECTED},
        notes=(
            f"serial {config.chain[0].serial} revoked at {revoke_at}; "
            f"asset unchanged, validated at {validation_time}"
        ),
        validation_time=validation_time,
        mutates_bytes=False,
    )


def attack_expiry_timewarp(asset: Asset, validation_time: int) -> AttackOutcome:
    """Validate untouched bytes after the signing certificate expires.

    Under an at-validation-time expiry rule a perfectly honest asset decays
    into UNVERIFIABLE.  A policy that anchors expiry at the timestamped
    moment — bridged forward by archival tokens — keeps accepting it, but
    only when the token is bound; an unbound token cannot carry that weight.
    """
    manifest = decode_manifest(extract_manifest(asset))
    leaf = manifest.claim_signature.signer_chain[0]
    if leaf.in_window(validation_time):
        raise ValueError(
            f"{validation_time} is inside the signing certificate window; not a timewarp"
        )
    bridged = bool(manifest.archival_tokens)
    if manifest.claim_signature.binding_mode == BindingMode.BOUND:
        hardened = Verdict.ACCEPTED if bridged else Verdict.UNVERIFIABLE
    else:
        hardened = Verdict.REJECTED
    return AttackOutcome(
        name="expiry-timewarp",
        original=asset,
        mutated=asset,
        expected={"spec": Verdict.UNVERIFIABLE, "hardened": hardened},
        notes=(
            f"no byte changed; validated at {validation_time}, after leaf expiry "
            f"at {leaf.not_after}; archival tokens present: {bridged}"
        ),
        validation_time=validation_time,
        mutates_bytes=False,
    )


def attack_strip_manifest(asset: Asset) -> AttackOutcome:
    """Remove the manifest segment wholesale.

    Provenance is advisory: an asset with no manifest is indistinguishable
    from one that never had any, so both presets can only report
    UNVERIFIABLE, never REJECTED.  This is the floor any opt-in provenance
    format lives with.
    """
    mutated = strip_manifest(asset)
    return AttackOutcome(
        name="strip-manifest",
        original=asset,
        mutated=mutated,
        expected={"spec": Verdict.UNVERIFIABLE, "hardened": Verdict.UNVERIFIABLE},
        notes="manifest segment removed; remaining bytes untouched",
    )
