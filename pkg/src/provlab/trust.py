"""Certificate hierarchy, chain verification, and revocation channels.

Certificates are small fixed-field records signed by their issuer over the
canonical encoding of every field except the signature itself.  A chain is
ordered leaf-first and verifies against a :class:`TrustList` of self-signed
root anchors.

Revocation is published over two channels backed by the same authority
state: a signed :class:`RevocationList` snapshot, and per-serial
:class:`StatusResponse` records served online (see :mod:`.statusservice`).
Both channels must always agree; the validator chooses which one to consult.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .crypto import SigningKey, verify
from .encoding import decode_value, encode_value
from .errors import DecodeError, UnknownSerial, UsageViolation, ValidityNotNested


class Usage(str, Enum):
    ROOT = "ROOT"
    INTERMEDIATE = "INTERMEDIATE"
    LEAF_SIGNING = "LEAF_SIGNING"
    LEAF_TSA = "LEAF_TSA"


@dataclass(frozen=True)
class Certificate:
    serial: int
    subject: str
    issuer: str
    public_key: bytes
    not_before: int
    not_after: int
    usage: Usage
    issuer_signature: bytes

    def __post_init__(self) -> None:
        if not 0 <= self.serial < 2**64:
            raise ValueError("serial must fit in 64 bits")
        if self.not_before > self.not_after:
            raise ValueError("validity window is inverted")

    def in_window(self, at_time: int) -> bool:
        return self.not_before <= at_time <= self.not_after


def certificate_template_bytes(cert: Certificate) -> bytes:
    """Canonical bytes the issuer signs: every field but the signature."""
    return encode_value(
        {
            "serial": cert.serial,
            "subject": cert.subject,
            "issuer": cert.issuer,
            "public_key": cert.public_key,
            "not_before": cert.not_before,
            "not_after": cert.not_after,
            "usage": cert.usage.value,
        }
    )


def certificate_to_wire(cert: Certificate) -> dict:
    return {
        "serial": cert.serial,
        "subject": cert.subject,
        "issuer": cert.issuer,
        "public_key": cert.public_key,
        "not_before": cert.not_before,
        "not_after": cert.not_after,
        "usage": cert.usage.value,
        "issuer_signature": cert.issuer_signature,
    }


def certificate_from_wire(value: object) -> Certificate:
    if not isinstance(value, dict):
        raise DecodeError("certificate must be a map")
    try:
        cert = Certificate(
            serial=value["serial"],
            subject=value["subject"],
            issuer=value["issuer"],
            public_key=value["public_key"],
            not_before=value["not_before"],
            not_after=value["not_after"],
            usage=Usage(value["usage"]),
            issuer_signature=value["issuer_signature"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DecodeError(f"bad certificate record: {exc}") from exc
    if len(value) != 8:
        raise DecodeError("unexpected fields in certificate record")
    if not isinstance(cert.public_key, bytes) or not isinstance(cert.issuer_signature, bytes):
        raise DecodeError("certificate key material must be byte strings")
    if not all(isinstance(v, int) for v in (cert.serial, cert.not_before, cert.not_after)):
        raise DecodeError("certificate numeric fields must be integers")
    if not isinstance(cert.subject, str) or not isinstance(cert.issuer, str):
        raise DecodeError("certificate names must be strings")
    return cert


def encode_certificate(cert: Certificate) -> bytes:
    return encode_value(certificate_to_wire(cert))


def decode_certificate(data: bytes) -> Certificate:
    return certificate_from_wire(decode_value(data))


def issue_certificate(
    issuer_key: SigningKey,
    template: Certificate,
    issuer_cert: Certificate | None = None,
) -> Certificate:
    """Sign ``template`` with ``issuer_key``.

    ``issuer_cert`` is omitted only for self-signed roots.  The issuer must
    be permitted to issue (ROOT or INTERMEDIATE usage) and the template's
    validity window must nest inside the issuer's.
    """
    if issuer_cert is None:
        if template.usage != Usage.ROOT or template.issuer != template.subject:
            raise UsageViolation("self-signed certificates must be roots")
        if template.public_key != issuer_key.public_bytes:
            raise UsageViolation("root must be signed by its own key")
    else:
        if issuer_cert.usage not in (Usage.ROOT, Usage.INTERMEDIATE):
            raise UsageViolation(f"{issuer_cert.usage.value} certificates cannot issue")
        if template.issuer != issuer_cert.subject:
            raise UsageViolation("template issuer does not name the issuing certificate")
        if issuer_cert.public_key != issuer_key.public_bytes:
            raise UsageViolation("issuer key does not match the issuing certificate")
        if not (
            issuer_cert.not_before <= template.not_before
            and template.not_after <= issuer_cert.not_after
        ):
            raise ValidityNotNested(
                "template validity window escapes the issuer's window"
            )
    signature = issuer_key.sign(certificate_template_bytes(template))
    return replace(template, issuer_signature=signature)


# ---------------------------------------------------------------------------
# chain verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrustList:
    anchors: tuple[Certificate, ...]

    def contains(self, cert: Certificate) -> bool:
        return cert in self.anchors

    def with_anchor(self, cert: Certificate) -> "TrustList":
        if self.contains(cert):
            return self
        return TrustList(self.anchors + (cert,))


class ChainStatus(str, Enum):
    VALID = "VALID"
    EXPIRED = "EXPIRED"
    UNTRUSTED_ROOT = "UNTRUSTED_ROOT"
    BAD_LINK_SIGNATURE = "BAD_LINK_SIGNATURE"


@dataclass(frozen=True)
class ChainVerdict:
    status: ChainStatus
    serial: int | None = None
    detail: str = ""

    @property
    def valid(self) -> bool:
        return self.status == ChainStatus.VALID


def verify_chain(
    chain: tuple[Certificate, ...] | list[Certificate],
    trust: TrustList,
    at_time: int,
) -> ChainVerdict:
    """Verify a leaf-first chain at ``at_time``.

    Checks run in a fixed order so the verdict is deterministic: link
    signatures and issuer relationships first, then root trust, then the
    validity windows of every certificate.
    """
    chain = tuple(chain)
    if not chain:
        return ChainVerdict(ChainStatus.BAD_LINK_SIGNATURE, None, "empty chain")
    for cert, issuer in zip(chain, chain[1:]):
        if issuer.usage not in (Usage.ROOT, Usage.INTERMEDIATE):
            return ChainVerdict(
                ChainStatus.BAD_LINK_SIGNATURE,
                cert.serial,
                f"issuer usage {issuer.usage.value} cannot issue",
            )
        if cert.issuer != issuer.subject:
            return ChainVerdict(
                ChainStatus.BAD_LINK_SIGNATURE, cert.serial, "issuer name mismatch"
            )
        if not verify(issuer.public_key, certificate_template_bytes(cert), cert.issuer_signature):
            return ChainVerdict(
                ChainStatus.BAD_LINK_SIGNATURE, cert.serial, "issuer signature invalid"
            )
    top = chain[-1]
    if top.issuer != top.subject or not verify(
        top.public_key, certificate_template_bytes(top), top.issuer_signature
    ):
        return ChainVerdict(
            ChainStatus.BAD_LINK_SIGNATURE, top.serial, "top of chain is not self-signed"
        )
    if not trust.contains(top):
        return ChainVerdict(
            ChainStatus.UNTRUSTED_ROOT, top.serial, "root is not a trust anchor"
        )
    for cert in chain:
        if not cert.in_window(at_time):
            return ChainVerdict(
                ChainStatus.EXPIRED,
                cert.serial,
                f"certificate {cert.serial} outside validity window at {at_time}",
            )
    return ChainVerdict(ChainStatus.VALID)


# ---------------------------------------------------------------------------
# revocation
# ---------------------------------------------------------------------------

class CertStatus(Enum):
    GOOD = 0
    REVOKED = 1
    UNKNOWN = 2


@dataclass(frozen=True)
class RevocationList:
    issuer: str
    this_update: int
    entries: tuple[tuple[int, int], ...]  # (serial, revoked_at), sorted by serial
    signature: bytes


def _crl_payload(issuer: str, this_update: int, entries: tuple[tuple[int, int], ...]) -> bytes:
    return encode_value(
        {
            "issuer": issuer,
            "this_update": this_update,
            "entries": [[serial, at] for serial, at in entries],
        }
    )


def verify_crl(crl: RevocationList, issuer_cert: Certificate) -> bool:
    if issuer_cert.subject != crl.issuer:
        return False
    return verify(
        issuer_cert.public_key,
        _crl_payload(crl.issuer, crl.this_update, crl.entries),
        crl.signature,
    )


def revocation_list_to_wire(crl: RevocationList) -> dict:
    return {
        "issuer": crl.issuer,
        "this_update": crl.this_update,
        "entries": [[serial, at] for serial, at in crl.entries],
        "signature": crl.signature,
    }


def revocation_list_from_wire(value: object) -> RevocationList:
    if not isinstance(value, dict):
        raise DecodeError("revocation list must be a map")
    try:
        entries = tuple((int(serial), int(at)) for serial, at in value["entries"])
        crl = RevocationList(
            issuer=value["issuer"],
            this_update=value["this_update"],
            entries=entries,
            signature=value["signature"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DecodeError(f"bad revocation list record: {exc}") from exc
    return crl


def encode_revocation_list(crl: RevocationList) -> bytes:
    return encode_value(revocation_list_to_wire(crl))


def decode_revocation_list(data: bytes) -> RevocationList:
    return revocation_list_from_wire(decode_value(data))


@dataclass(frozen=True)
class StatusResponse:
    serial: int
    status: CertStatus
    revoked_at: int | None
    produced_at: int
    responder_signature: bytes


def status_response_payload(
    serial: int, status: CertStatus, revoked_at: int | None, produced_at: int
) -> bytes:
    """Signed bytes for a status response.

    The serial is covered by the signature even though the wire frame omits
    it, so a response for one serial cannot be replayed for another.
    """
    return encode_value(
        {
            "serial": serial,
            "status": status.value,
            "revoked_at": revoked_at or 0,
            "produced_at": produced_at,
        }
    )


def verify_status_response(response: StatusResponse, responder_cert: Certificate) -> bool:
    return verify(
        responder_cert.public_key,
        status_response_payload(
            response.serial, response.status, response.revoked_at, response.produced_at
        ),
        response.responder_signature,
    )


class Authority:
    """A certificate authority: issuance registry plus revocation state.

    The same state backs both revocation channels, which is what makes the
    channel-agreement invariant (CRL entries match online status responses)
    hold by construction.
    """

    def __init__(self, name: str, key: SigningKey, cert: Certificate, clock: int):
        self.name = name
        self.key = key
        self.cert = cert
        self.clock = clock
        self.issued: dict[int, str] = {cert.serial: cert.subject}
        self.revoked: dict[int, int] = {}

    def issue(self, template: Certificate) -> Certificate:
        """Issue ``template``; idempotent for an identical re-issue."""
        if template.serial in self.issued and self.issued[template.serial] != template.subject:
            raise ValueError(
                f"serial {template.serial} already issued to {self.issued[template.serial]!r}"
            )
        cert = issue_certificate(self.key, template, self.cert)
        self.issued[cert.serial] = cert.subject
        return cert

    def revoke(self, serial: int, revoked_at: int) -> None:
        if serial not in self.issued:
            raise UnknownSerial(f"serial {serial} was never issued by {self.name!r}")
        self.revoked[serial] = revoked_at

    def generate_crl(self) -> RevocationList:
        entries = tuple(sorted(self.revoked.items()))
        payload = _crl_payload(self.name, self.clock, entries)
        return RevocationList(self.name, self.clock, entries, self.key.sign(payload))

    def status_for(self, serial: int) -> StatusResponse:
        if serial not in self.issued:
            status, revoked_at = CertStatus.UNKNOWN, None
        elif serial in self.revoked:
            status, revoked_at = CertStatus.REVOKED, self.revoked[serial]
        else:
            status, revoked_at = CertStatus.GOOD, None
        signature = self.key.sign(
            status_response_payload(serial, status, revoked_at, self.clock)
        )
        return StatusResponse(serial, status, revoked_at, self.clock, signature)
