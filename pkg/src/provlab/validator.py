"""Policy-driven validation.

``validate`` accepts arbitrary bytes and always returns a report, never an
exception.  Checks run in a fixed, total order (later checks are SKIPPED,
not omitted, when their inputs are unavailable), so two reports are always
comparable check-by-check:

    parse, manifest-decode, spec-version, assertion-digests, hard-binding,
    exclusion-audit, chain, signature, revocation, timestamp,
    redaction-audit

The policy decides severity, not the evidence: the same asset can be
ACCEPTED under one knob setting and REJECTED under another.  Expiry is the
one failure that is *unverifiable* rather than *rejected* — an expired
credential is not a forged one.

The displayed time always carries its provenance: ``SIGNED`` (a bound token
pinned by the claim signature), ``UNBOUND_TOKEN`` (a token anyone could have
swapped), or ``ABSENT``.  The human rendering never prints a bare date.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum

from .container import (
    Asset,
    ByteRange,
    Segment,
    SegmentKind,
    compute_hard_binding,
    parse_asset,
)
from .credentials import (
    REDACTION_LABEL,
    BindingMode,
    Manifest,
    decode_manifest,
    digest_assertion,
    encode_assertion,
    encode_manifest,
    signed_payload,
)
from .crypto import digest, verify
from .errors import ProvenanceError, ServiceUnreachable
from .statusservice import query_status
from .timestamp import encode_token, verify_token
from .trust import (
    Certificate,
    CertStatus,
    ChainStatus,
    RevocationList,
    TrustList,
    Usage,
    verify_chain,
    verify_crl,
)

REPORT_SCHEMA = "prov-report/1"

CHECK_NAMES = (
    "parse",
    "manifest-decode",
    "spec-version",
    "assertion-digests",
    "hard-binding",
    "exclusion-audit",
    "chain",
    "signature",
    "revocation",
    "timestamp",
    "redaction-audit",
)

GOAL_NAMES = ("G1", "G2", "G3", "G4", "G5")

GOAL_TITLES = {
    "G1": "claim-tamper-evidence",
    "G2": "weak-file-integrity",
    "G3": "timestamp-agreement",
    "G4": "validator-consistency",
    "G5": "strong-file-integrity",
}


class RevocationMode(str, Enum):
    NONE = "NONE"
    STATUS_SERVICE_SOFT_FAIL = "STATUS_SERVICE_SOFT_FAIL"
    STATUS_SERVICE_HARD_FAIL = "STATUS_SERVICE_HARD_FAIL"
    CRL_REQUIRED = "CRL_REQUIRED"


class TimestampRule(str, Enum):
    ACCEPT_UNBOUND = "ACCEPT_UNBOUND"
    REQUIRE_BOUND = "REQUIRE_BOUND"


class FileIntegrity(str, Enum):
    WEAK = "WEAK"
    STRONG = "STRONG"


class ExpiryRule(str, Enum):
    AT_VALIDATION_TIME = "AT_VALIDATION_TIME"
    AT_TIMESTAMP_TIME_WITH_ARCHIVAL_CHAIN = "AT_TIMESTAMP_TIME_WITH_ARCHIVAL_CHAIN"


class Verdict(str, Enum):
    ACCEPTED = "ACCEPTED"
    ACCEPTED_WITH_REDACTION = "ACCEPTED_WITH_REDACTION"
    REJECTED = "REJECTED"
    UNVERIFIABLE = "UNVERIFIABLE"


class CheckOutcome(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    SKIPPED = "SKIPPED"


class GoalStatus(str, Enum):
    HELD = "HELD"
    VIOLATED = "VIOLATED"
    NOT_EVALUATED = "NOT_EVALUATED"


class TimeProvenance(str, Enum):
    SIGNED = "SIGNED"
    UNBOUND_TOKEN = "UNBOUND_TOKEN"
    ABSENT = "ABSENT"


@dataclass(frozen=True)
class ValidationPolicy:
    name: str
    trust: TrustList
    validation_time: int
    spec_version_required: str | None = None
    revocation_mode: RevocationMode = RevocationMode.NONE
    timestamp_rule: TimestampRule = TimestampRule.ACCEPT_UNBOUND
    file_integrity: FileIntegrity = FileIntegrity.WEAK
    expiry_rule: ExpiryRule = ExpiryRule.AT_VALIDATION_TIME
    crl: RevocationList | None = None
    status_endpoint: tuple[str, int] | None = None


def spec_policy(trust: TrustList, validation_time: int, **overrides) -> ValidationPolicy:
    """The permissive preset: what a faithful reading of the format demands
    and nothing more.  Keyword overrides replace individual knobs."""
    settings: dict = dict(
        name="spec",
        revocation_mode=RevocationMode.NONE,
        timestamp_rule=TimestampRule.ACCEPT_UNBOUND,
        file_integrity=FileIntegrity.WEAK,
        expiry_rule=ExpiryRule.AT_VALIDATION_TIME,
    )
    settings.update(overrides)
    return ValidationPolicy(trust=trust, validation_time=validation_time, **settings)


def hardened_policy(trust: TrustList, validation_time: int, **overrides) -> ValidationPolicy:
    """The strict preset: every knob at its defensive setting.  Keyword
    overrides replace individual knobs."""
    settings: dict = dict(
        name="hardened",
        revocation_mode=RevocationMode.CRL_REQUIRED,
        timestamp_rule=TimestampRule.REQUIRE_BOUND,
        file_integrity=FileIntegrity.STRONG,
        expiry_rule=ExpiryRule.AT_TIMESTAMP_TIME_WITH_ARCHIVAL_CHAIN,
    )
    settings.update(overrides)
    return ValidationPolicy(trust=trust, validation_time=validation_time, **settings)


@dataclass(frozen=True)
class CheckResult:
    name: str
    outcome: CheckOutcome
    detail: str = ""


@dataclass(frozen=True)
class DisplayedTime:
    epoch: int | None
    provenance: TimeProvenance


@dataclass(frozen=True)
class MetadataItem:
    label: str
    text: str
    protected: bool


@dataclass(frozen=True)
class ValidationReport:
    policy_name: str
    validation_time: int
    verdict: Verdict
    checks: tuple[CheckResult, ...]
    goals: dict[str, GoalStatus]
    displayed_time: DisplayedTime
    generator: str | None = None
    claimed_created_at: int | None = None
    spec_version: str | None = None
    metadata: tuple[MetadataItem, ...] = ()
    redacted_labels: tuple[str, ...] = ()
    malformed: bool = False

    def check(self, name: str) -> CheckResult:
        for result in self.checks:
            if result.name == name:
                return result
        raise KeyError(name)

    @property
    def accepted(self) -> bool:
        return self.verdict in (Verdict.ACCEPTED, Verdict.ACCEPTED_WITH_REDACTION)


def exit_code_for(report: ValidationReport) -> int:
    """CLI exit-code contract: 0 accepted, 2 rejected, 3 unverifiable,
    4 malformed input."""
    if report.accepted:
        return 0
    if report.verdict == Verdict.REJECTED:
        return 2
    return 4 if report.malformed else 3


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

_UNVERIFIABLE_CHECKS = frozenset({"parse", "manifest-decode"})


class _Run:
    """Mutable state threaded through one validation pass."""

    def __init__(self, policy: ValidationPolicy):
        self.policy = policy
        self.results: list[CheckResult] = []
        self.asset: Asset | None = None
        self.manifest: Manifest | None = None
        self.manifest_segment: Segment | None = None
        self.effective_exclusions: tuple[ByteRange, ...] | None = None
        self.tombstones: tuple[str, ...] = ()
        self.chain_expired = False
        self.malformed = False
        self.displayed = DisplayedTime(None, TimeProvenance.ABSENT)

    def record(self, name: str, outcome: CheckOutcome, detail: str = "") -> None:
        self.results.append(CheckResult(name, outcome, detail))

    def outcome(self, name: str) -> CheckOutcome:
        for result in self.results:
            if result.name == name:
                return result.outcome
        raise KeyError(name)


def _effective_exclusions(
    declared: tuple[ByteRange, ...], manifest_segment: Segment
) -> tuple[ByteRange, ...] | None:
    """Project signing-time exclusions onto the current asset.

    Archival extension legitimately grows the manifest segment after the
    claim was signed; the declared manifest exclusion keeps its start but
    stretches to the current manifest length, and every exclusion beyond it
    shifts by the same delta.  Returns None when no declared exclusion lines
    up with the manifest segment at all.
    """
    anchor = None
    for rng in declared:
        if rng.start == manifest_segment.range.start:
            anchor = rng
            break
    if anchor is None:
        return None
    delta = manifest_segment.range.length - anchor.length
    adjusted = []
    for rng in declared:
        if rng == anchor:
            adjusted.append(manifest_segment.range)
        elif rng.start >= anchor.end:
            adjusted.append(ByteRange(rng.start + delta, rng.length))
        else:
            adjusted.append(rng)
    return tuple(sorted(adjusted))


def _overlaps(a: ByteRange, b: ByteRange) -> bool:
    return a.start < b.end and b.start < a.end


def _valid_redaction_record(
    manifest: Manifest,
    target_label: str,
    expected_digest: bytes | None,
    policy: ValidationPolicy,
) -> bool:
    """A countersigned redaction record covering ``target_label``."""
    for assertion in manifest.assertions:
        if assertion.label != REDACTION_LABEL:
            continue
        if assertion.payload.get("target") != target_label:
            continue
        if (
            expected_digest is not None
            and assertion.payload.get("original_digest") != expected_digest
        ):
            continue
        record_bytes = encode_assertion(assertion)
        for countersignature in manifest.redaction_signatures:
            if not countersignature.signer_chain:
                continue
            leaf = countersignature.signer_chain[0]
            if leaf.usage != Usage.LEAF_SIGNING:
                continue
            if not verify(leaf.public_key, record_bytes, countersignature.signature):
                continue
            chain_verdict = verify_chain(
                countersignature.signer_chain, policy.trust, policy.validation_time
            )
            if chain_verdict.valid:
                return True
    return False


def _check_parse(run: _Run, data: bytes) -> None:
    try:
        run.asset = parse_asset(data)
    except ProvenanceError as exc:
        run.malformed = True
        run.record("parse", CheckOutcome.FAIL, str(exc))
        return
    run.record(
        "parse", CheckOutcome.PASS, f"{len(run.asset.segments)} segments"
    )


def _check_manifest_decode(run: _Run) -> None:
    if run.asset is None:
        run.record("manifest-decode", CheckOutcome.SKIPPED, "no parsed asset")
        return
    segment = run.asset.find_manifest()
    if segment is None:
        run.record("manifest-decode", CheckOutcome.FAIL, "no manifest segment")
        return
    run.manifest_segment = segment
    try:
        run.manifest = decode_manifest(run.asset.payload(segment))
    except ProvenanceError as exc:
        run.malformed = True
        run.record("manifest-decode", CheckOutcome.FAIL, f"undecodable manifest: {exc}")
        return
    run.record("manifest-decode", CheckOutcome.PASS)


def _check_spec_version(run: _Run) -> None:
    if run.manifest is None:
        run.record("spec-version", CheckOutcome.SKIPPED, "no manifest")
        return
    required = run.policy.spec_version_required
    found = run.manifest.claim.spec_version
    if required is None:
        run.record("spec-version", CheckOutcome.PASS, f"claim format {found} (not constrained)")
    elif found == required:
        run.record("spec-version", CheckOutcome.PASS, f"claim format {found}")
    else:
        run.record(
            "spec-version",
            CheckOutcome.FAIL,
            f"claim format {found}, policy requires {required}",
        )


def _check_assertion_digests(run: _Run) -> None:
    if run.manifest is None:
        run.record("assertion-digests", CheckOutcome.SKIPPED, "no manifest")
        return
    manifest = run.manifest
    claim = manifest.claim
    problems: list[str] = []
    for assertion in manifest.assertions:
        if assertion.label == REDACTION_LABEL:
            continue
        expected = claim.digest_for(assertion.label)
        if expected is None:
            problems.append(f"assertion {assertion.label!r} not listed in the claim")
        elif digest_assertion(assertion) != expected:
            problems.append(f"assertion {assertion.label!r} digest mismatch")
    present = {a.label for a in manifest.assertions}
    tombstones = tuple(
        label for label, _ in claim.assertion_digests if label not in present
    )
    run.tombstones = tombstones
    if problems:
        run.record("assertion-digests", CheckOutcome.FAIL, "; ".join(problems))
        return
    verified = sum(1 for a in manifest.assertions if a.label != REDACTION_LABEL)
    detail = f"{verified} assertions verified"
    if tombstones:
        detail += f", {len(tombstones)} REDACTED ({', '.join(tombstones)})"
    run.record("assertion-digests", CheckOutcome.PASS, detail)


def _check_hard_binding(run: _Run) -> None:
    if run.manifest is None or run.asset is None or run.manifest_segment is None:
        run.record("hard-binding", CheckOutcome.SKIPPED, "no manifest")
        return
    binding = run.manifest.claim.binding
    if binding.algorithm != "sha-256":
        run.record(
            "hard-binding", CheckOutcome.FAIL, f"unsupported algorithm {binding.algorithm!r}"
        )
        return
    effective = _effective_exclusions(binding.exclusions, run.manifest_segment)
    if effective is None:
        run.record(
            "hard-binding", CheckOutcome.FAIL, "manifest range not excluded by the claim"
        )
        return
    run.effective_exclusions = effective
    try:
        recomputed = compute_hard_binding(run.asset, effective, binding.algorithm)
    except ProvenanceError as exc:
        run.record("hard-binding", CheckOutcome.FAIL, f"exclusions unusable: {exc}")
        return
    if recomputed.digest != binding.digest:
        run.record(
            "hard-binding",
            CheckOutcome.FAIL,
            "recomputed digest differs from the declared digest",
        )
        return
    run.record(
        "hard-binding",
        CheckOutcome.PASS,
        f"digest match over {len(effective)} exclusion(s)",
    )


def _check_exclusion_audit(run: _Run) -> None:
    if run.policy.file_integrity == FileIntegrity.WEAK:
        run.record(
            "exclusion-audit", CheckOutcome.SKIPPED, "weak integrity honours declared exclusions"
        )
        return
    if run.manifest is None or run.asset is None or run.manifest_segment is None:
        run.record("exclusion-audit", CheckOutcome.SKIPPED, "no manifest")
        return
    if run.effective_exclusions is None:
        run.record("exclusion-audit", CheckOutcome.FAIL, "exclusions could not be resolved")
        return
    unaccounted: list[str] = []
    for rng in run.effective_exclusions:
        if run.manifest_segment.range.contains(rng):
            continue
        segment = next(
            (s for s in run.asset.segments if s.range == rng), None
        )
        if segment is not None and _valid_redaction_record(
            run.manifest, segment.label, None, run.policy
        ):
            continue
        label = segment.label if segment is not None else f"[{rng.start},{rng.length})"
        unaccounted.append(label)
    if unaccounted:
        run.record(
            "exclusion-audit",
            CheckOutcome.FAIL,
            "non-manifest exclusions without countersigned redaction: "
            + ", ".join(unaccounted),
        )
        return
    run.record("exclusion-audit", CheckOutcome.PASS, "only the manifest range is excluded")


def _archival_bridge(run: _Run) -> str | None:
    """Try to bridge an expired signing chain with archival tokens.

    Token i must cover the digest of the manifest as it stood before token i
    was appended.  A token's gen_time is trusted if its own TSA chain is
    valid now, or a later trusted token attests it while that chain was
    valid.  The signing chain must be valid at the first token's gen_time.
    Returns a detail string on success, None on failure.
    """
    manifest = run.manifest
    policy = run.policy
    tokens = manifest.archival_tokens
    if not tokens:
        return None
    for index, token in enumerate(tokens):
        prefix = replace(manifest, archival_tokens=tokens[:index])
        expected = digest(encode_manifest(prefix))
        if not verify_token(token, expected, policy.trust).valid:
            return None
    # a token is anchored if its TSA chain is valid now, or the next token
    # is anchored and attests a moment at which this token's chain was valid
    anchored = [False] * len(tokens)
    for i in range(len(tokens) - 1, -1, -1):
        if verify_chain(tokens[i].tsa_chain, policy.trust, policy.validation_time).valid:
            anchored[i] = True
        elif i + 1 < len(tokens) and anchored[i + 1]:
            anchored[i] = verify_chain(
                tokens[i].tsa_chain, policy.trust, tokens[i + 1].gen_time
            ).valid
    if not anchored[0]:
        return None
    first = tokens[0]
    chain_at_first = verify_chain(
        manifest.claim_signature.signer_chain, policy.trust, first.gen_time
    )
    if not chain_at_first.valid:
        return None
    return (
        f"expired chain bridged by {len(tokens)} archival token(s); "
        f"signing chain valid at {first.gen_time}"
    )


def _check_chain(run: _Run) -> None:
    if run.manifest is None:
        run.record("chain", CheckOutcome.SKIPPED, "no manifest")
        return
    policy = run.policy
    chain = run.manifest.claim_signature.signer_chain
    verdict = verify_chain(chain, policy.trust, policy.validation_time)
    if verdict.valid:
        run.record("chain", CheckOutcome.PASS, f"valid at {policy.validation_time}")
        return
    if verdict.status == ChainStatus.EXPIRED:
        if policy.expiry_rule == ExpiryRule.AT_TIMESTAMP_TIME_WITH_ARCHIVAL_CHAIN:
            bridged = _archival_bridge(run)
            if bridged is not None:
                run.record("chain", CheckOutcome.PASS, bridged)
                return
        run.chain_expired = True
        run.record("chain", CheckOutcome.FAIL, verdict.detail)
        return
    run.record("chain", CheckOutcome.FAIL, f"{verdict.status.value}: {verdict.detail}")


def _check_signature(run: _Run) -> None:
    if run.manifest is None:
        run.record("signature", CheckOutcome.SKIPPED, "no manifest")
        return
    claim_signature = run.manifest.claim_signature
    if not claim_signature.signer_chain:
        run.record("signature", CheckOutcome.FAIL, "empty signer chain")
        return
    leaf = claim_signature.signer_chain[0]
    if leaf.usage != Usage.LEAF_SIGNING:
        run.record(
            "signature", CheckOutcome.FAIL, f"leaf usage {leaf.usage.value} cannot sign claims"
        )
        return
    if claim_signature.binding_mode == BindingMode.BOUND:
        token_digest = digest(encode_token(claim_signature.timestamp))
        payload = signed_payload(run.manifest.claim, BindingMode.BOUND, token_digest)
    else:
        payload = signed_payload(run.manifest.claim, BindingMode.UNBOUND)
    if verify(leaf.public_key, payload, claim_signature.signature):
        run.record(
            "signature", CheckOutcome.PASS, f"{claim_signature.binding_mode.value} payload"
        )
    else:
        run.record("signature", CheckOutcome.FAIL, "claim signature does not verify")


def _responder_cert(chain: tuple[Certificate, ...]) -> Certificate:
    return chain[1] if len(chain) > 1 else chain[0]


def _check_revocation(run: _Run) -> None:
    mode = run.policy.revocation_mode
    if mode == RevocationMode.NONE:
        run.record("revocation", CheckOutcome.SKIPPED, "revocation not checked")
        return
    if run.manifest is None or not run.manifest.claim_signature.signer_chain:
        run.record("revocation", CheckOutcome.SKIPPED, "no manifest")
        return
    chain = run.manifest.claim_signature.signer_chain
    leaf = chain[0]
    if mode == RevocationMode.CRL_REQUIRED:
        crl = run.policy.crl
        if crl is None:
            run.record("revocation", CheckOutcome.FAIL, "no revocation list available")
            return
        issuer_cert = next(
            (c for c in chain[1:] if c.subject == crl.issuer),
            next((c for c in run.policy.trust.anchors if c.subject == crl.issuer), None),
        )
        if issuer_cert is None or not verify_crl(crl, issuer_cert):
            run.record(
                "revocation", CheckOutcome.FAIL, "revocation list signature does not verify"
            )
            return
        entry = next((e for e in crl.entries if e[0] == leaf.serial), None)
        if entry is not None:
            run.record(
                "revocation",
                CheckOutcome.FAIL,
                f"serial {leaf.serial} revoked at {entry[1]}",
            )
            return
        run.record(
            "revocation",
            CheckOutcome.PASS,
            f"serial {leaf.serial} not in revocation list of {len(crl.entries)} entries",
        )
        return
    # online status modes
    endpoint = run.policy.status_endpoint
    soft = mode == RevocationMode.STATUS_SERVICE_SOFT_FAIL
    if endpoint is None:
        if soft:
            run.record(
                "revocation", CheckOutcome.SKIPPED, "no status endpoint (soft fail)"
            )
        else:
            run.record("revocation", CheckOutcome.FAIL, "no status endpoint (fail closed)")
        return
    try:
        response = query_status(endpoint, leaf.serial, _responder_cert(chain))
    except ServiceUnreachable as exc:
        if soft:
            run.record(
                "revocation", CheckOutcome.SKIPPED, f"status service unreachable (soft fail): {exc}"
            )
        else:
            run.record(
                "revocation", CheckOutcome.FAIL, f"status service unreachable (fail closed): {exc}"
            )
        return
    if response.status == CertStatus.GOOD:
        run.record("revocation", CheckOutcome.PASS, f"serial {leaf.serial} status GOOD")
    elif response.status == CertStatus.REVOKED:
        run.record(
            "revocation",
            CheckOutcome.FAIL,
            f"serial {leaf.serial} REVOKED at {response.revoked_at}",
        )
    else:
        run.record(
            "revocation", CheckOutcome.FAIL, f"serial {leaf.serial} UNKNOWN to the responder"
        )


def _check_timestamp(run: _Run) -> None:
    if run.manifest is None:
        run.record("timestamp", CheckOutcome.SKIPPED, "no manifest")
        return
    policy = run.policy
    claim_signature = run.manifest.claim_signature
    token = claim_signature.timestamp
    if token is None:
        if policy.timestamp_rule == TimestampRule.REQUIRE_BOUND:
            run.record("timestamp", CheckOutcome.FAIL, "no timestamp token")
        else:
            run.record("timestamp", CheckOutcome.SKIPPED, "no timestamp token")
        return
    if claim_signature.binding_mode == BindingMode.UNBOUND:
        if policy.timestamp_rule == TimestampRule.REQUIRE_BOUND:
            run.record(
                "timestamp",
                CheckOutcome.FAIL,
                "token is not bound to the claim signature",
            )
            return
        verdict = verify_token(token, digest(claim_signature.signature), policy.trust)
        if verdict.valid:
            run.displayed = DisplayedTime(token.gen_time, TimeProvenance.UNBOUND_TOKEN)
            run.record(
                "timestamp", CheckOutcome.PASS, f"unbound token at {token.gen_time}"
            )
        else:
            run.record(
                "timestamp", CheckOutcome.FAIL, f"{verdict.status.value}: {verdict.detail}"
            )
        return
    # bound: the token digest is pinned inside the signed payload, so the
    # token's own message digest refers to the discarded pass-1 signature
    verdict = verify_token(token, None, policy.trust)
    if not verdict.valid:
        run.record(
            "timestamp", CheckOutcome.FAIL, f"{verdict.status.value}: {verdict.detail}"
        )
        return
    if run.outcome("signature") == CheckOutcome.PASS:
        run.displayed = DisplayedTime(token.gen_time, TimeProvenance.SIGNED)
        run.record("timestamp", CheckOutcome.PASS, f"bound token at {token.gen_time}")
    else:
        run.record(
            "timestamp",
            CheckOutcome.FAIL,
            "bound token cannot be trusted without a verifying claim signature",
        )


def _check_redaction_audit(run: _Run) -> None:
    if run.manifest is None:
        run.record("redaction-audit", CheckOutcome.SKIPPED, "no manifest")
        return
    tombstones = run.tombstones
    if not tombstones:
        run.record("redaction-audit", CheckOutcome.PASS, "no redactions")
        return
    if run.policy.file_integrity == FileIntegrity.WEAK:
        run.record(
            "redaction-audit",
            CheckOutcome.PASS,
            f"{len(tombstones)} tombstone(s) accepted without countersignature",
        )
        return
    missing = [
        label
        for label in tombstones
        if not _valid_redaction_record(
            run.manifest, label, run.manifest.claim.digest_for(label), run.policy
        )
    ]
    if missing:
        run.record(
            "redaction-audit",
            CheckOutcome.FAIL,
            "tombstones without countersigned redaction records: " + ", ".join(missing),
        )
        return
    run.record(
        "redaction-audit",
        CheckOutcome.PASS,
        f"{len(tombstones)} countersigned redaction(s)",
    )


_CHECK_FUNCTIONS = {
    "manifest-decode": _check_manifest_decode,
    "spec-version": _check_spec_version,
    "assertion-digests": _check_assertion_digests,
    "hard-binding": _check_hard_binding,
    "exclusion-audit": _check_exclusion_audit,
    "chain": _check_chain,
    "signature": _check_signature,
    "revocation": _check_revocation,
    "timestamp": _check_timestamp,
    "redaction-audit": _check_redaction_audit,
}


def _collect_metadata(run: _Run) -> tuple[MetadataItem, ...]:
    if run.asset is None:
        return ()
    items = []
    exclusions = run.effective_exclusions or ()
    for segment in run.asset.segments:
        if segment.kind != SegmentKind.METADATA:
            continue
        payload = run.asset.payload(segment)
        try:
            text = payload.decode("utf-8")
        except UnicodeDecodeError:
            text = "0x" + payload[:32].hex()
        protected = not any(_overlaps(segment.range, rng) for rng in exclusions)
        items.append(MetadataItem(segment.label, text, protected))
    return tuple(items)


def _derive_goals(run: _Run) -> dict[str, GoalStatus]:
    def outcome(name: str) -> CheckOutcome:
        return run.outcome(name)

    goals: dict[str, GoalStatus] = {}

    integrity_checks = (outcome("manifest-decode"), outcome("assertion-digests"), outcome("signature"))
    if any(o == CheckOutcome.FAIL for o in integrity_checks):
        goals["G1"] = GoalStatus.VIOLATED
    elif all(o == CheckOutcome.PASS for o in integrity_checks):
        goals["G1"] = GoalStatus.HELD
    else:
        goals["G1"] = GoalStatus.NOT_EVALUATED

    binding = outcome("hard-binding")
    goals["G2"] = {
        CheckOutcome.PASS: GoalStatus.HELD,
        CheckOutcome.FAIL: GoalStatus.VIOLATED,
        CheckOutcome.SKIPPED: GoalStatus.NOT_EVALUATED,
    }[binding]

    if run.displayed.provenance == TimeProvenance.SIGNED:
        goals["G3"] = GoalStatus.HELD
    elif run.displayed.provenance == TimeProvenance.UNBOUND_TOKEN:
        goals["G3"] = GoalStatus.VIOLATED
    elif outcome("timestamp") == CheckOutcome.FAIL:
        goals["G3"] = GoalStatus.VIOLATED
    else:
        goals["G3"] = GoalStatus.NOT_EVALUATED

    goals["G4"] = GoalStatus.NOT_EVALUATED

    if run.policy.file_integrity == FileIntegrity.WEAK:
        goals["G5"] = GoalStatus.NOT_EVALUATED
    else:
        audit = outcome("exclusion-audit")
        if audit == CheckOutcome.PASS and binding == CheckOutcome.PASS:
            goals["G5"] = GoalStatus.HELD
        elif audit == CheckOutcome.FAIL or binding == CheckOutcome.FAIL:
            goals["G5"] = GoalStatus.VIOLATED
        else:
            goals["G5"] = GoalStatus.NOT_EVALUATED

    return goals


def validate(data: bytes, policy: ValidationPolicy) -> ValidationReport:
    """Validate raw asset bytes under ``policy``; total, never raises."""
    run = _Run(policy)
    try:
        _check_parse(run, data)
    except Exception as exc:  # the parse check is the fuzzing frontier
        run.malformed = True
        run.record("parse", CheckOutcome.FAIL, f"unexpected parse failure: {exc}")
    for name in CHECK_NAMES[1:]:
        try:
            _CHECK_FUNCTIONS[name](run)
        except Exception as exc:  # a check may never crash the report
            run.record(name, CheckOutcome.FAIL, f"unexpected failure: {exc}")

    failures = {r.name for r in run.results if r.outcome == CheckOutcome.FAIL}
    rejecting = failures - _UNVERIFIABLE_CHECKS - ({"chain"} if run.chain_expired else set())
    if rejecting:
        verdict = Verdict.REJECTED
    elif failures:
        verdict = Verdict.UNVERIFIABLE
    elif run.tombstones:
        verdict = Verdict.ACCEPTED_WITH_REDACTION
    else:
        verdict = Verdict.ACCEPTED

    claim = run.manifest.claim if run.manifest is not None else None
    return ValidationReport(
        policy_name=policy.name,
        validation_time=policy.validation_time,
        verdict=verdict,
        checks=tuple(run.results),
        goals=_derive_goals(run),
        displayed_time=run.displayed,
        generator=claim.generator if claim else None,
        claimed_created_at=claim.created_at if claim else None,
        spec_version=claim.spec_version if claim else None,
        metadata=_collect_metadata(run),
        redacted_labels=run.tombstones,
        malformed=run.malformed,
    )


# ---------------------------------------------------------------------------
# differential validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DifferentialReport:
    report_a: ValidationReport
    report_b: ValidationReport
    agree: bool
    check_diff: tuple[tuple[str, CheckOutcome, CheckOutcome], ...]
    consistency: GoalStatus  # G4

    @property
    def exit_code(self) -> int:
        return 0 if self.agree else 5


def validate_differential(
    data: bytes, policy_a: ValidationPolicy, policy_b: ValidationPolicy
) -> DifferentialReport:
    """Run both policies over the same bytes and diff the outcomes."""
    report_a = validate(data, policy_a)
    report_b = validate(data, policy_b)
    diff = tuple(
        (a.name, a.outcome, b.outcome)
        for a, b in zip(report_a.checks, report_b.checks)
        if a.outcome != b.outcome
    )
    agree = report_a.verdict == report_b.verdict
    return DifferentialReport(
        report_a=report_a,
        report_b=report_b,
        agree=agree,
        check_diff=diff,
        consistency=GoalStatus.HELD if agree else GoalStatus.VIOLATED,
    )


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def format_epoch(epoch: int) -> str:
    try:
        stamp = datetime.fromtimestamp(epoch, tz=timezone.utc)
    except (OverflowError, OSError, ValueError):
        return f"epoch {epoch}"
    return stamp.strftime("%Y-%m-%dT%H:%M:%SZ")


def _render_time_line(displayed: DisplayedTime) -> str:
    if displayed.provenance == TimeProvenance.SIGNED:
        return f"signed time: {format_epoch(displayed.epoch)} (signed time)"
    if displayed.provenance == TimeProvenance.UNBOUND_TOKEN:
        return f"signed time: {format_epoch(displayed.epoch)} (unverified time)"
    return "signed time: none (no timestamp token)"


def render_report(report: ValidationReport, fmt: str = "human") -> str:
    if fmt == "structured":
        return report_to_json(report)
    if fmt != "human":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = [
        "provenance report",
        f"policy: {report.policy_name}",
        f"validated at: {format_epoch(report.validation_time)}",
        f"verdict: {report.verdict.value}",
        _render_time_line(report.displayed_time),
    ]
    if report.claimed_created_at is not None:
        lines.append(
            f"claimed creation: {format_epoch(report.claimed_created_at)} (signer-reported)"
        )
    if report.generator is not None:
        lines.append(f"generator: {report.generator} [claim format {report.spec_version}]")
    lines.append("checks:")
    for result in report.checks:
        detail = f"  {result.detail}" if result.detail else ""
        lines.append(f"  {result.name:<18} {result.outcome.value:<7}{detail}")
    lines.append("goals:")
    for goal in GOAL_NAMES:
        lines.append(
            f"  {goal} {GOAL_TITLES[goal]:<26} {report.goals[goal].value}"
        )
    if report.metadata:
        lines.append("metadata:")
        for item in report.metadata:
            tag = "protected" if item.protected else "excluded from integrity protection"
            lines.append(f"  {item.label}: {item.text} ({tag})")
    if report.redacted_labels:
        lines.append("redactions: " + ", ".join(report.redacted_labels))
    return "\n".join(lines) + "\n"


def render_differential(diff: DifferentialReport) -> str:
    lines = [
        "differential validation",
        f"policy a: {diff.report_a.policy_name} -> {diff.report_a.verdict.value}",
        f"policy b: {diff.report_b.policy_name} -> {diff.report_b.verdict.value}",
        f"verdict agreement: {'yes' if diff.agree else 'NO'}",
        f"G4 {GOAL_TITLES['G4']}: {diff.consistency.value}",
    ]
    if diff.check_diff:
        lines.append("diverging checks:")
        for name, a, b in diff.check_diff:
            lines.append(f"  {name:<18} {a.value:<7} vs {b.value}")
    return "\n".join(lines) + "\n"


def report_to_json(report: ValidationReport) -> str:
    payload = {
        "schema": REPORT_SCHEMA,
        "policy": report.policy_name,
        "validation_time": report.validation_time,
        "verdict": report.verdict.value,
        "checks": [
            {"name": r.name, "outcome": r.outcome.value, "detail": r.detail}
            for r in report.checks
        ],
        "goals": {name: status.value for name, status in report.goals.items()},
        "displayed_time": {
            "epoch": report.displayed_time.epoch,
            "provenance": report.displayed_time.provenance.value,
        },
        "generator": report.generator,
        "claimed_created_at": report.claimed_created_at,
        "spec_version": report.spec_version,
        "metadata": [
            {"label": m.label, "text": m.text, "protected": m.protected}
            for m in report.metadata
        ],
        "redacted_labels": list(report.redacted_labels),
        "malformed": report.malformed,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def report_from_json(text: str) -> ValidationReport:
    payload = json.loads(text)
    if payload.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unknown report schema {payload.get('schema')!r}")
    return ValidationReport(
        policy_name=payload["policy"],
        validation_time=payload["validation_time"],
        verdict=Verdict(payload["verdict"]),
        checks=tuple(
            CheckResult(c["name"], CheckOutcome(c["outcome"]), c["detail"])
            for c in payload["checks"]
        ),
        goals={name: GoalStatus(status) for name, status in payload["goals"].items()},
        displayed_time=DisplayedTime(
            payload["displayed_time"]["epoch"],
            TimeProvenance(payload["displayed_time"]["provenance"]),
        ),
        generator=payload["generator"],
        claimed_created_at=payload["claimed_created_at"],
        spec_version=payload["spec_version"],
        metadata=tuple(
            MetadataItem(m["label"], m["text"], m["protected"]) for m in payload["metadata"]
        ),
        redacted_labels=tuple(payload["redacted_labels"]),
        malformed=payload["malformed"],
    )


# ---------------------------------------------------------------------------
# policy files
# ---------------------------------------------------------------------------

_POLICY_ENUMS = {
    "revocation_mode": RevocationMode,
    "timestamp_rule": TimestampRule,
    "file_integrity": FileIntegrity,
    "expiry_rule": ExpiryRule,
}

_POLICY_KEYS = {
    "name",
    "spec_version_required",
    "revocation_mode",
    "timestamp_rule",
    "file_integrity",
    "expiry_rule",
    "validation_time",
    "status_endpoint",
    "crl_file",
}


def parse_policy_text(text: str) -> dict[str, object]:
    """Parse ``key = value`` policy lines into raw fields.

    Blank lines and ``#`` comments are ignored.  Unknown keys and malformed
    enum values raise ``ValueError``; turning the fields into a
    :class:`ValidationPolicy` (attaching trust, times, and revocation
    sources) is the caller's job.
    """
    fields: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"policy line {lineno} is not 'key = value': {raw_line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _POLICY_KEYS:
            raise ValueError(f"unknown policy key {key!r} on line {lineno}")
        if key in _POLICY_ENUMS:
            try:
                fields[key] = _POLICY_ENUMS[key](value)
            except ValueError:
                raise ValueError(
                    f"bad value {value!r} for {key} on line {lineno}"
                ) from None
        elif key == "validation_time":
            fields[key] = int(value)
        elif key == "status_endpoint":
            host, _, port = value.rpartition(":")
            if not host:
                raise ValueError(f"bad status endpoint {value!r} on line {lineno}")
            fields[key] = (host, int(port))
        else:
            fields[key] = value
    return fields
