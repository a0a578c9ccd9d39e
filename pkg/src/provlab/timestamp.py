"""Timestamp tokens and archival extension.

A token is a TSA's signature over ``(message_digest, gen_time)`` and nothing
else.  Whether the token is itself covered by the claim signature is decided
elsewhere (the signer's binding mode); the token format is identical either
way, which is exactly what makes unbound tokens swappable.

Archival extension appends a token over the digest of the entire current
manifest payload to a trailer list inside the manifest segment.  Those
tokens sit outside the claim-signature payload, so anyone can extend an
asset, and each token attests that everything before it existed at its
``gen_time``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .container import Asset, extract_manifest, replace_manifest
from .crypto import DIGEST_SIZE, SigningKey, digest, verify
from .encoding import encode_value
from .errors import DecodeError, ExpiredTsaCert, UsageViolation
from .trust import (
    Certificate,
    ChainStatus,
    TrustList,
    Usage,
    certificate_from_wire,
    certificate_to_wire,
    verify_chain,
)


@dataclass(frozen=True)
class TimestampToken:
    message_digest: bytes
    gen_time: int
    tsa_chain: tuple[Certificate, ...]
    tsa_signature: bytes


def token_signed_payload(message_digest: bytes, gen_time: int) -> bytes:
    return encode_value({"message_digest": message_digest, "gen_time": gen_time})


def token_to_wire(token: TimestampToken) -> dict:
    return {
        "message_digest": token.message_digest,
        "gen_time": token.gen_time,
        "tsa_chain": [certificate_to_wire(cert) for cert in token.tsa_chain],
        "tsa_signature": token.tsa_signature,
    }


def token_from_wire(value: object) -> TimestampToken:
    if not isinstance(value, dict):
        raise DecodeError("timestamp token must be a map")
    try:
        token = TimestampToken(
            message_digest=value["message_digest"],
            gen_time=value["gen_time"],
            tsa_chain=tuple(certificate_from_wire(c) for c in value["tsa_chain"]),
            tsa_signature=value["tsa_signature"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DecodeError(f"bad timestamp token record: {exc}") from exc
    if not isinstance(token.message_digest, bytes) or not isinstance(token.tsa_signature, bytes):
        raise DecodeError("token digest and signature must be byte strings")
    if not isinstance(token.gen_time, int) or isinstance(token.gen_time, bool):
        raise DecodeError("token gen_time must be an integer")
    return token


def encode_token(token: TimestampToken) -> bytes:
    return encode_value(token_to_wire(token))


def issue_token(
    tsa_key: SigningKey,
    tsa_chain: tuple[Certificate, ...],
    message_digest: bytes,
    clock: int,
) -> TimestampToken:
    """Sign ``(message_digest, clock)`` with the TSA leaf key.

    The TSA answers for any digest presented to it; the only honesty checks
    are its own certificate usage and validity window at ``clock``.
    """
    if len(message_digest) != DIGEST_SIZE:
        raise ValueError("message digest must be 32 bytes")
    if not tsa_chain:
        raise ValueError("empty TSA chain")
    leaf = tsa_chain[0]
    if leaf.usage != Usage.LEAF_TSA:
        raise UsageViolation(f"TSA leaf has usage {leaf.usage.value}")
    if leaf.public_key != tsa_key.public_bytes:
        raise UsageViolation("TSA key does not match the leaf certificate")
    if not leaf.in_window(clock):
        raise ExpiredTsaCert(f"TSA certificate outside validity window at {clock}")
    signature = tsa_key.sign(token_signed_payload(message_digest, clock))
    return TimestampToken(message_digest, clock, tuple(tsa_chain), signature)


class TokenStatus(str, Enum):
    VALID = "VALID"
    DIGEST_MISMATCH = "DIGEST_MISMATCH"
    BAD_TOKEN_SIGNATURE = "BAD_TOKEN_SIGNATURE"
    UNTRUSTED_TSA = "UNTRUSTED_TSA"


@dataclass(frozen=True)
class TokenVerdict:
    status: TokenStatus
    detail: str = ""

    @property
    def valid(self) -> bool:
        return self.status == TokenStatus.VALID


def verify_token(
    token: TimestampToken,
    expected_digest: bytes | None,
    trust: TrustList,
) -> TokenVerdict:
    """Verify a token; the TSA chain is checked at ``token.gen_time``.

    Tokens attest past moments, so there is no "current time" input here;
    whether an old token should still be *trusted* now is a policy question
    answered by the validator's archival-chain rule, not by this check.
    ``expected_digest`` is optional because a bound token's digest refers to
    a signature that is not embedded (see the signer's two-pass scheme).
    """
    if not token.tsa_chain:
        return TokenVerdict(TokenStatus.UNTRUSTED_TSA, "empty TSA chain")
    leaf = token.tsa_chain[0]
    if not verify(
        leaf.public_key,
        token_signed_payload(token.message_digest, token.gen_time),
        token.tsa_signature,
    ):
        return TokenVerdict(TokenStatus.BAD_TOKEN_SIGNATURE, "TSA signature invalid")
    if expected_digest is not None and token.message_digest != expected_digest:
        return TokenVerdict(TokenStatus.DIGEST_MISMATCH, "token covers a different digest")
    if leaf.usage != Usage.LEAF_TSA:
        return TokenVerdict(
            TokenStatus.UNTRUSTED_TSA, f"leaf usage {leaf.usage.value} is not a TSA"
        )
    chain_verdict = verify_chain(token.tsa_chain, trust, token.gen_time)
    if chain_verdict.status != ChainStatus.VALID:
        return TokenVerdict(
            TokenStatus.UNTRUSTED_TSA,
            f"TSA chain {chain_verdict.status.value} at gen_time: {chain_verdict.detail}",
        )
    return TokenVerdict(TokenStatus.VALID)


class TimestampAuthority:
    """An offline TSA handle: key, chain, and an injectable clock."""

    def __init__(self, key: SigningKey, chain: tuple[Certificate, ...], clock: int):
        self.key = key
        self.chain = tuple(chain)
        self.clock = clock

    def issue(self, message_digest: bytes, clock: int | None = None) -> TimestampToken:
        return issue_token(
            self.key, self.chain, message_digest, self.clock if clock is None else clock
        )


def archival_extend(asset: Asset, tsa: TimestampAuthority, clock: int | None = None) -> Asset:
    """Append an archival token over the current manifest payload.

    The new token lands in the manifest's archival trailer list; everything
    that was in the manifest before (including earlier archival tokens) is
    covered by the new token's digest.
    """
    from .credentials import decode_manifest, encode_manifest

    manifest_bytes = extract_manifest(asset)
    manifest = decode_manifest(manifest_bytes)
    token = tsa.issue(digest(manifest_bytes), clock)
    extended = replace(manifest, archival_tokens=manifest.archival_tokens + (token,))
    return replace_manifest(asset, encode_manifest(extended))
