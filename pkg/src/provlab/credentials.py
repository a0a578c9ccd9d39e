"""Credential structures: assertions, claims, signatures, manifests.

The claim is the signed heart of a manifest.  It lists assertion digests
(not the assertions themselves, so individual assertions can be redacted
later) and the hard binding that ties the claim to the asset bytes.

``signed_payload`` defines exactly what the claim signature covers:

- ``UNBOUND``: the canonical claim bytes only.  A timestamp token may ride
  along in the :class:`ClaimSignature`, but nothing signed references it.
- ``BOUND``: the canonical claim bytes concatenated with the digest of the
  entire timestamp token, so replacing the token breaks the signature.

Everything here encodes through :mod:`.encoding`, so equal structures have
equal bytes and any bit flip in an encoded claim is signature-visible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .container import ByteRange, HardBinding
from .crypto import SigningKey, digest
from .encoding import decode_value, encode_value
from .errors import (
    BindingArgumentMismatch,
    DecodeError,
    LabelNotFound,
    RedactionNotRedactable,
)
from .timestamp import TimestampToken, token_from_wire, token_to_wire
from .trust import Certificate, certificate_from_wire, certificate_to_wire

REDACTION_LABEL = "prov.redaction"

_MAX_LABEL_LENGTH = 64

Scalar = str | int | float | bytes


class BindingMode(str, Enum):
    UNBOUND = "UNBOUND"
    BOUND = "BOUND"


class RedactionMode(str, Enum):
    SPEC_DROP = "SPEC_DROP"
    HARDENED_COUNTERSIGN = "HARDENED_COUNTERSIGN"


def _check_label(label: str) -> None:
    if not label or len(label) > _MAX_LABEL_LENGTH or not label.isascii():
        raise ValueError(f"invalid assertion label: {label!r}")


@dataclass(frozen=True)
class Assertion:
    """A labelled metadata statement with a flat scalar payload."""

    label: str
    payload: dict[str, Scalar]

    def __post_init__(self) -> None:
        _check_label(self.label)
        for key, value in self.payload.items():
            if not isinstance(key, str):
                raise ValueError("assertion payload keys must be strings")
            if isinstance(value, bool) or not isinstance(value, (str, int, float, bytes)):
                raise ValueError(
                    f"assertion payload value for {key!r} must be a scalar"
                )


@dataclass(frozen=True)
class Claim:
    generator: str
    created_at: int
    assertion_digests: tuple[tuple[str, bytes], ...]
    binding: HardBinding
    spec_version: str

    def __post_init__(self) -> None:
        labels = [label for label, _ in self.assertion_digests]
        if len(labels) != len(set(labels)):
            raise ValueError("duplicate assertion label in claim")

    def digest_for(self, label: str) -> bytes | None:
        for candidate, value in self.assertion_digests:
            if candidate == label:
                return value
        return None


@dataclass(frozen=True)
class ClaimSignature:
    signer_chain: tuple[Certificate, ...]
    signature: bytes
    timestamp: TimestampToken | None
    binding_mode: BindingMode

    def __post_init__(self) -> None:
        if self.binding_mode == BindingMode.BOUND and self.timestamp is None:
            raise ValueError("bound signatures must carry a timestamp token")


@dataclass(frozen=True)
class Manifest:
    claim: Claim
    assertions: tuple[Assertion, ...]
    claim_signature: ClaimSignature
    redaction_signatures: tuple[ClaimSignature, ...] = ()
    archival_tokens: tuple[TimestampToken, ...] = ()

    def find_assertion(self, label: str) -> Assertion | None:
        for assertion in self.assertions:
            if assertion.label == label:
                return assertion
        return None


# ---------------------------------------------------------------------------
# wire shapes
# ---------------------------------------------------------------------------

def assertion_to_wire(assertion: Assertion) -> dict:
    return {"label": assertion.label, "payload": dict(assertion.payload)}


def assertion_from_wire(value: object) -> Assertion:
    if not isinstance(value, dict) or set(value) != {"label", "payload"}:
        raise DecodeError("assertion must be a {label, payload} map")
    label, payload = value["label"], value["payload"]
    if not isinstance(label, str) or not isinstance(payload, dict):
        raise DecodeError("malformed assertion record")
    try:
        return Assertion(label, dict(payload))
    except ValueError as exc:
        raise DecodeError(str(exc)) from exc


def hard_binding_to_wire(binding: HardBinding) -> dict:
    return {
        "algorithm": binding.algorithm,
        "exclusions": [[rng.start, rng.length] for rng in binding.exclusions],
        "digest": binding.digest,
    }


def hard_binding_from_wire(value: object) -> HardBinding:
    if not isinstance(value, dict) or set(value) != {"algorithm", "exclusions", "digest"}:
        raise DecodeError("hard binding must be an {algorithm, exclusions, digest} map")
    if not isinstance(value["algorithm"], str) or not isinstance(value["digest"], bytes):
        raise DecodeError("malformed hard binding record")
    try:
        exclusions = tuple(ByteRange(start, length) for start, length in value["exclusions"])
    except (TypeError, ValueError) as exc:
        raise DecodeError(f"bad exclusion range: {exc}") from exc
    return HardBinding(value["algorithm"], exclusions, value["digest"])


def claim_to_wire(claim: Claim) -> dict:
    return {
        "generator": claim.generator,
        "created_at": claim.created_at,
        "assertion_digests": [[label, d] for label, d in claim.assertion_digests],
        "binding": hard_binding_to_wire(claim.binding),
        "spec_version": claim.spec_version,
    }


def claim_from_wire(value: object) -> Claim:
    expected = {"generator", "created_at", "assertion_digests", "binding", "spec_version"}
    if not isinstance(value, dict) or set(value) != expected:
        raise DecodeError("claim must be a five-field map")
    if not isinstance(value["generator"], str) or not isinstance(value["spec_version"], str):
        raise DecodeError("malformed claim record")
    if not isinstance(value["created_at"], int) or isinstance(value["created_at"], bool):
        raise DecodeError("claim created_at must be an integer")
    try:
        digests = tuple((label, d) for label, d in value["assertion_digests"])
        for label, d in digests:
            if not isinstance(label, str) or not isinstance(d, bytes):
                raise DecodeError("malformed assertion digest entry")
        return Claim(
            generator=value["generator"],
            created_at=value["created_at"],
            assertion_digests=digests,
            binding=hard_binding_from_wire(value["binding"]),
            spec_version=value["spec_version"],
        )
    except (TypeError, ValueError) as exc:
        raise DecodeError(f"bad claim record: {exc}") from exc


def claim_signature_to_wire(signature: ClaimSignature) -> dict:
    return {
        "signer_chain": [certificate_to_wire(cert) for cert in signature.signer_chain],
        "signature": signature.signature,
        "timestamp": None
        if signature.timestamp is None
        else token_to_wire(signature.timestamp),
        "binding_mode": signature.binding_mode.value,
    }


def claim_signature_from_wire(value: object) -> ClaimSignature:
    expected = {"signer_chain", "signature", "timestamp", "binding_mode"}
    if not isinstance(value, dict) or set(value) != expected:
        raise DecodeError("claim signature must be a four-field map")
    if not isinstance(value["signature"], bytes):
        raise DecodeError("claim signature bytes missing")
    try:
        chain = tuple(certificate_from_wire(c) for c in value["signer_chain"])
        timestamp = None if value["timestamp"] is None else token_from_wire(value["timestamp"])
        return ClaimSignature(
            signer_chain=chain,
            signature=value["signature"],
            timestamp=timestamp,
            binding_mode=BindingMode(value["binding_mode"]),
        )
    except (TypeError, ValueError) as exc:
        raise DecodeError(f"bad claim signature record: {exc}") from exc


def manifest_to_wire(manifest: Manifest) -> dict:
    return {
        "claim": claim_to_wire(manifest.claim),
        "assertions": [assertion_to_wire(a) for a in manifest.assertions],
        "claim_signature": claim_signature_to_wire(manifest.claim_signature),
        "redaction_signatures": [
            claim_signature_to_wire(s) for s in manifest.redaction_signatures
        ],
        "archival_tokens": [token_to_wire(t) for t in manifest.archival_tokens],
    }


def manifest_from_wire(value: object) -> Manifest:
    expected = {
        "claim",
        "assertions",
        "claim_signature",
        "redaction_signatures",
        "archival_tokens",
    }
    if not isinstance(value, dict) or set(value) != expected:
        raise DecodeError("manifest must be a five-field map")
    try:
        return Manifest(
            claim=claim_from_wire(value["claim"]),
            assertions=tuple(assertion_from_wire(a) for a in value["assertions"]),
            claim_signature=claim_signature_from_wire(value["claim_signature"]),
            redaction_signatures=tuple(
                claim_signature_from_wire(s) for s in value["redaction_signatures"]
            ),
            archival_tokens=tuple(token_from_wire(t) for t in value["archival_tokens"]),
        )
    except (TypeError, ValueError) as exc:
        raise DecodeError(f"bad manifest record: {exc}") from exc


# ---------------------------------------------------------------------------
# canonical encoding entry points
# ---------------------------------------------------------------------------

def encode_assertion(assertion: Assertion) -> bytes:
    return encode_value(assertion_to_wire(assertion))


def decode_assertion(data: bytes) -> Assertion:
    return assertion_from_wire(decode_value(data))


def encode_claim(claim: Claim) -> bytes:
    return encode_value(claim_to_wire(claim))


def decode_claim(data: bytes) -> Claim:
    return claim_from_wire(decode_value(data))


def encode_claim_signature(signature: ClaimSignature) -> bytes:
    return encode_value(claim_signature_to_wire(signature))


def decode_claim_signature(data: bytes) -> ClaimSignature:
    return claim_signature_from_wire(decode_value(data))


def encode_manifest(manifest: Manifest) -> bytes:
    return encode_value(manifest_to_wire(manifest))


def decode_manifest(data: bytes) -> Manifest:
    return manifest_from_wire(decode_value(data))


def canonical_encode(value: Assertion | Claim | ClaimSignature | Manifest) -> bytes:
    """Canonical bytes for any credential structure."""
    if isinstance(value, Assertion):
        return encode_assertion(value)
    if isinstance(value, Claim):
        return encode_claim(value)
    if isinstance(value, ClaimSignature):
        return encode_claim_signature(value)
    if isinstance(value, Manifest):
        return encode_manifest(value)
    raise TypeError(f"unsupported credential type: {type(value).__name__}")


# ---------------------------------------------------------------------------
# signing payloads and digests
# ---------------------------------------------------------------------------

def signed_payload(
    claim: Claim,
    binding_mode: BindingMode,
    timestamp_digest: bytes | None = None,
) -> bytes:
    """The exact bytes the claim signature covers."""
    if binding_mode == BindingMode.UNBOUND:
        if timestamp_digest is not None:
            raise BindingArgumentMismatch("unbound payloads take no timestamp digest")
        return encode_claim(claim)
    if timestamp_digest is None:
        raise BindingArgumentMismatch("bound payloads require the timestamp digest")
    return encode_claim(claim) + timestamp_digest


def digest_assertion(assertion: Assertion) -> bytes:
    return digest(encode_assertion(assertion))


# ---------------------------------------------------------------------------
# redaction
# ---------------------------------------------------------------------------

def redact_assertion(
    manifest: Manifest,
    label: str,
    mode: RedactionMode,
    redactor_key: SigningKey | None = None,
    redactor_chain: tuple[Certificate, ...] = (),
    redactor_name: str = "",
) -> Manifest:
    """Remove an assertion from the manifest, leaving its digest tombstone.

    ``SPEC_DROP`` just drops the assertion.  ``HARDENED_COUNTERSIGN``
    additionally appends a ``prov.redaction`` record naming the removed
    assertion and a countersignature over that record by the redactor's key,
    which is what a strict validator demands before accepting a tombstone.
    """
    if label == REDACTION_LABEL:
        raise RedactionNotRedactable("redaction records may not be redacted")
    target = manifest.find_assertion(label)
    if target is None:
        raise LabelNotFound(f"no assertion labelled {label!r}")
    remaining = tuple(a for a in manifest.assertions if a.label != label)
    if mode == RedactionMode.SPEC_DROP:
        return replace(manifest, assertions=remaining)
    if redactor_key is None or not redactor_chain:
        raise ValueError("countersigned redaction requires the redactor's key and chain")
    record = Assertion(
        REDACTION_LABEL,
        {
            "target": label,
            "original_digest": digest_assertion(target),
            "redactor": redactor_name or redactor_chain[0].subject,
        },
    )
    countersignature = ClaimSignature(
        signer_chain=tuple(redactor_chain),
        signature=redactor_key.sign(encode_assertion(record)),
        timestamp=None,
        binding_mode=BindingMode.UNBOUND,
    )
    return replace(
        manifest,
        assertions=remaining + (record,),
        redaction_signatures=manifest.redaction_signatures + (countersignature,),
    )
