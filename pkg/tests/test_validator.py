"""Validation: check order, verdict logic, policy knobs, rendering."""

import json

import pytest

from provlab.container import (
    ByteRange,
    extract_manifest,
    parse_asset,
    serialize_asset,
    splice_bytes,
    wire_span,
)
from provlab.credentials import RedactionMode, decode_manifest, encode_manifest, redact_assertion
from provlab.container import replace_manifest
from provlab.signer import DEFAULT_VALIDATION_TIME, SCENARIOS, make_fixture
from provlab.statusservice import run_status_service
from provlab.timestamp import archival_extend
from provlab.validator import (
    CHECK_NAMES,
    CheckOutcome,
    FileIntegrity,
    GoalStatus,
    RevocationMode,
    TimeProvenance,
    TimestampRule,
    Verdict,
    exit_code_for,
    hardened_policy,
    parse_policy_text,
    render_differential,
    render_report,
    report_from_json,
    report_to_json,
    spec_policy,
    validate,
    validate_differential,
)
from provlab.workspace import DAY, T0, YEAR, Workspace


@pytest.fixture(scope="module")
def lab(tmp_path_factory):
    return Workspace.initialize(tmp_path_factory.mktemp("valws"), seed=21)


@pytest.fixture(scope="module")
def fixtures(lab):
    return {name: make_fixture(lab, name) for name in SCENARIOS}


def spec_at(lab, at=DEFAULT_VALIDATION_TIME):
    return spec_policy(lab.trust, at)


def hardened_at(lab, at=DEFAULT_VALIDATION_TIME):
    return hardened_policy(lab.trust, at, crl=lab.signing.generate_crl())


def b(fixture):
    return serialize_asset(fixture.signed)


# ---------------------------------------------------------------------------
# report structure
# ---------------------------------------------------------------------------

def test_every_check_always_reported(lab, fixtures):
    for data in (b(fixtures["honest"]), b"garbage", b""):
        report = validate(data, spec_at(lab))
        assert tuple(r.name for r in report.checks) == CHECK_NAMES


def test_honest_fixture_accepted(lab, fixtures):
    report = validate(b(fixtures["honest"]), spec_at(lab))
    assert report.verdict == Verdict.ACCEPTED
    assert exit_code_for(report) == 0
    assert report.generator == "labcam-honest"
    assert report.claimed_created_at == T0
    assert report.goals["G1"] == GoalStatus.HELD
    assert report.goals["G2"] == GoalStatus.HELD


def test_garbage_is_malformed_unverifiable(lab):
    report = validate(b"\x00\x01\x02", spec_at(lab))
    assert report.verdict == Verdict.UNVERIFIABLE
    assert report.malformed
    assert exit_code_for(report) == 4
    assert report.check("parse").outcome == CheckOutcome.FAIL


def test_manifestless_asset_is_unverifiable_not_malformed(lab, fixtures):
    from provlab.container import strip_manifest

    stripped = serialize_asset(strip_manifest(fixtures["honest"].signed))
    report = validate(stripped, spec_at(lab))
    assert report.verdict == Verdict.UNVERIFIABLE
    assert not report.malformed
    assert exit_code_for(report) == 3
    assert report.check("manifest-decode").outcome == CheckOutcome.FAIL
    # downstream checks are reported as skipped, not omitted
    assert report.check("signature").outcome == CheckOutcome.SKIPPED


def test_garbage_manifest_payload_is_malformed(lab, fixtures):
    mangled = replace_manifest(fixtures["honest"].signed, b"\xffnot a manifest")
    report = validate(serialize_asset(mangled), spec_at(lab))
    assert report.verdict == Verdict.UNVERIFIABLE
    assert report.malformed
    assert exit_code_for(report) == 4


def test_covered_byte_flip_rejected(lab, fixtures):
    signed = fixtures["honest"].signed
    image = signed.find_label("image")
    flipped = splice_bytes(
        signed,
        ByteRange(image.range.start, 1),
        bytes([signed.data[image.range.start] ^ 0x80]),
    )
    report = validate(serialize_asset(flipped), spec_at(lab))
    assert report.verdict == Verdict.REJECTED
    assert report.check("hard-binding").outcome == CheckOutcome.FAIL
    assert report.goals["G2"] == GoalStatus.VIOLATED
    assert exit_code_for(report) == 2


def test_rejected_dominates_unverifiable(lab, fixtures):
    """Tampered AND expired: the louder verdict wins."""
    signed = fixtures["honest"].signed
    image = signed.find_label("image")
    flipped = splice_bytes(
        signed,
        ByteRange(image.range.start, 1),
        bytes([signed.data[image.range.start] ^ 0x80]),
    )
    report = validate(serialize_asset(flipped), spec_at(lab, T0 + 5 * YEAR))
    assert report.check("chain").outcome == CheckOutcome.FAIL
    assert report.check("hard-binding").outcome == CheckOutcome.FAIL
    assert report.verdict == Verdict.REJECTED


def test_expired_is_unverifiable_under_spec_policy(lab, fixtures):
    report = validate(b(fixtures["short-lived-cert"]), spec_at(lab, T0 + YEAR))
    assert report.check("chain").outcome == CheckOutcome.FAIL
    assert report.verdict == Verdict.UNVERIFIABLE
    assert exit_code_for(report) == 3


def test_archival_bridge_recovers_expired_chain(lab, fixtures):
    extended = archival_extend(
        fixtures["short-lived-cert"].signed, lab.tsa(), clock=T0 + 15 * DAY
    )
    data = serialize_asset(extended)
    hardened = validate(data, hardened_at(lab, T0 + YEAR))
    assert hardened.check("chain").outcome == CheckOutcome.PASS
    assert hardened.verdict == Verdict.ACCEPTED
    # same bytes under the spec preset stay unverifiable
    spec = validate(data, spec_at(lab, T0 + YEAR))
    assert spec.verdict == Verdict.UNVERIFIABLE


def test_bridge_requires_signing_chain_valid_at_first_token(lab, fixtures):
    # token minted after the 30-day leaf already expired: bridge must fail
    extended = archival_extend(
        fixtures["short-lived-cert"].signed, lab.tsa(), clock=T0 + 60 * DAY
    )
    report = validate(serialize_asset(extended), hardened_at(lab, T0 + YEAR))
    assert report.check("chain").outcome == CheckOutcome.FAIL
    assert report.verdict == Verdict.UNVERIFIABLE


def test_displayed_time_provenance(lab, fixtures):
    unbound = validate(b(fixtures["unbound-timestamp"]), spec_at(lab))
    assert unbound.displayed_time.provenance == TimeProvenance.UNBOUND_TOKEN
    assert unbound.displayed_time.epoch == T0
    assert unbound.goals["G3"] == GoalStatus.VIOLATED

    bound = validate(b(fixtures["bound-timestamp"]), spec_at(lab))
    assert bound.displayed_time.provenance == TimeProvenance.SIGNED
    assert bound.displayed_time.epoch == T0
    assert bound.goals["G3"] == GoalStatus.HELD

    from provlab.container import strip_manifest

    stripped = validate(
        serialize_asset(strip_manifest(fixtures["honest"].signed)), spec_at(lab)
    )
    assert stripped.displayed_time.provenance == TimeProvenance.ABSENT


def test_render_tags_time_provenance(lab, fixtures):
    unbound = render_report(validate(b(fixtures["unbound-timestamp"]), spec_at(lab)))
    assert "(unverified time)" in unbound
    bound = render_report(validate(b(fixtures["bound-timestamp"]), spec_at(lab)))
    assert "(signed time)" in bound
    # a bare date never appears on the signed-time line
    for text in (unbound, bound):
        line = next(l for l in text.splitlines() if l.startswith("signed time:"))
        assert "(" in line and line.rstrip().endswith(")")


def test_structured_report_roundtrip(lab, fixtures):
    report = validate(b(fixtures["gps-excluded"]), hardened_at(lab))
    text = report_to_json(report)
    parsed = json.loads(text)
    assert parsed["schema"] == "prov-report/1"
    assert report_from_json(text) == report
    assert render_report(report, "structured") == text


def test_metadata_protection_tags(lab, fixtures):
    report = validate(b(fixtures["gps-excluded"]), spec_at(lab))
    tags = {item.label: item.protected for item in report.metadata}
    assert tags["meta.gps"] is False
    assert tags["meta.note"] is True
    rendered = render_report(report)
    assert "meta.gps" in rendered and "excluded from integrity protection" in rendered


# ---------------------------------------------------------------------------
# policy knobs
# ---------------------------------------------------------------------------

def test_spec_version_pinning(lab, fixtures):
    ok = spec_policy(lab.trust, DEFAULT_VALIDATION_TIME, spec_version_required="1.0")
    bad = spec_policy(lab.trust, DEFAULT_VALIDATION_TIME, spec_version_required="9.9")
    assert validate(b(fixtures["honest"]), ok).verdict == Verdict.ACCEPTED
    report = validate(b(fixtures["honest"]), bad)
    assert report.verdict == Verdict.REJECTED
    assert report.check("spec-version").outcome == CheckOutcome.FAIL


def test_revocation_modes_against_live_service(lab, fixtures):
    service = run_status_service(lab.signing)
    try:
        revoked_serial = SCENARIOS["revocable"].leaf_serial
        lab.signing.revoke(revoked_serial, T0 + 30 * DAY)
        base = dict(trust=lab.trust, validation_time=DEFAULT_VALIDATION_TIME)
        soft = spec_policy(**base).__class__(
            name="soft",
            revocation_mode=RevocationMode.STATUS_SERVICE_SOFT_FAIL,
            status_endpoint=service.endpoint,
            **base,
        )
        hard = soft.__class__(
            name="hard",
            revocation_mode=RevocationMode.STATUS_SERVICE_HARD_FAIL,
            status_endpoint=service.endpoint,
            **base,
        )
        revoked_bytes = b(fixtures["revocable"])
        assert validate(revoked_bytes, soft).verdict == Verdict.REJECTED
        assert validate(revoked_bytes, hard).verdict == Verdict.REJECTED
        good_bytes = b(fixtures["honest"])
        assert validate(good_bytes, soft).verdict == Verdict.ACCEPTED
        assert validate(good_bytes, hard).verdict == Verdict.ACCEPTED
    finally:
        service.stop()
    # service gone: soft-fail shrugs, hard-fail refuses
    report_soft = validate(good_bytes, soft)
    assert report_soft.verdict == Verdict.ACCEPTED
    assert report_soft.check("revocation").outcome == CheckOutcome.SKIPPED
    report_hard = validate(good_bytes, hard)
    assert report_hard.verdict == Verdict.REJECTED
    assert "unreachable" in report_hard.check("revocation").detail


def test_crl_required_fails_closed_without_a_list(lab, fixtures):
    policy = spec_policy(lab.trust, DEFAULT_VALIDATION_TIME).__class__(
        name="crl-no-list",
        trust=lab.trust,
        validation_time=DEFAULT_VALIDATION_TIME,
        revocation_mode=RevocationMode.CRL_REQUIRED,
    )
    report = validate(b(fixtures["honest"]), policy)
    assert report.verdict == Verdict.REJECTED
    assert report.check("revocation").outcome == CheckOutcome.FAIL


def test_strong_integrity_flags_unaudited_exclusions(lab, fixtures):
    report = validate(b(fixtures["gps-excluded"]), hardened_at(lab))
    assert report.check("exclusion-audit").outcome == CheckOutcome.FAIL
    assert report.goals["G5"] == GoalStatus.VIOLATED
    assert report.verdict == Verdict.REJECTED


def test_redaction_weak_vs_strong(lab, fixtures):
    signed = fixtures["bound-timestamp"].signed
    manifest = decode_manifest(extract_manifest(signed))

    dropped = replace_manifest(
        signed, encode_manifest(redact_assertion(manifest, "std.actions", RedactionMode.SPEC_DROP))
    )
    spec_report = validate(serialize_asset(dropped), spec_at(lab))
    assert spec_report.verdict == Verdict.ACCEPTED_WITH_REDACTION
    assert spec_report.redacted_labels == ("std.actions",)
    assert exit_code_for(spec_report) == 0
    hard_report = validate(serialize_asset(dropped), hardened_at(lab))
    assert hard_report.verdict == Verdict.REJECTED
    assert hard_report.check("redaction-audit").outcome == CheckOutcome.FAIL

    countersigned = replace_manifest(
        signed,
        encode_manifest(
            redact_assertion(
                manifest,
                "std.actions",
                RedactionMode.HARDENED_COUNTERSIGN,
                redactor_key=lab.redactor.key,
                redactor_chain=lab.redactor.chain,
                redactor_name="newsroom",
            )
        ),
    )
    hard_ok = validate(serialize_asset(countersigned), hardened_at(lab))
    assert hard_ok.verdict == Verdict.ACCEPTED_WITH_REDACTION
    assert hard_ok.check("redaction-audit").outcome == CheckOutcome.PASS
    assert exit_code_for(hard_ok) == 0


# ---------------------------------------------------------------------------
# differential validation
# ---------------------------------------------------------------------------

def test_differential_agreement_and_divergence(lab, fixtures):
    agree = validate_differential(
        b(fixtures["bound-timestamp"]), spec_at(lab), hardened_at(lab)
    )
    assert agree.agree and agree.exit_code == 0
    assert agree.consistency == GoalStatus.HELD

    diverge = validate_differential(
        b(fixtures["unbound-timestamp"]), spec_at(lab), hardened_at(lab)
    )
    assert not diverge.agree and diverge.exit_code == 5
    assert diverge.consistency == GoalStatus.VIOLATED
    assert any(name == "timestamp" for name, _, _ in diverge.check_diff)
    rendered = render_differential(diverge)
    assert "G4" in rendered and "VIOLATED" in rendered


# ---------------------------------------------------------------------------
# policy text files
# ---------------------------------------------------------------------------

def test_policy_text_parsing():
    fields = parse_policy_text(
        """
        # comment
        name = newsroom
        revocation_mode = CRL_REQUIRED
        timestamp_rule = REQUIRE_BOUND
        file_integrity = STRONG
        expiry_rule = AT_TIMESTAMP_TIME_WITH_ARCHIVAL_CHAIN
        spec_version_required = 1.0
        validation_time = 1735776000
        status_endpoint = 127.0.0.1:8443
        """
    )
    assert fields["name"] == "newsroom"
    assert fields["revocation_mode"] == RevocationMode.CRL_REQUIRED
    assert fields["timestamp_rule"] == TimestampRule.REQUIRE_BOUND
    assert fields["file_integrity"] == FileIntegrity.STRONG
    assert fields["validation_time"] == 1735776000
    assert fields["status_endpoint"] == ("127.0.0.1", 8443)


@pytest.mark.parametrize(
    "line",
    ["nonsense", "unknown_key = 1", "revocation_mode = SOMETIMES", "validation_time = never"],
)
def test_policy_text_rejects_bad_lines(line):
    with pytest.raises(ValueError):
        parse_policy_text(line)


# ---------------------------------------------------------------------------
# totality
# ---------------------------------------------------------------------------

def test_validator_never_raises_on_mutations(lab, fixtures):
    import random

    wire = b(fixtures["bound-timestamp"])
    rng = random.Random(7)
    policy = spec_at(lab)
    for _ in range(300):
        mutated = bytearray(wire)
        for _ in range(rng.randint(1, 4)):
            mutated[rng.randrange(len(mutated))] = rng.randrange(256)
        report = validate(bytes(mutated), policy)
        assert report.verdict in tuple(Verdict)
        assert exit_code_for(report) in (0, 2, 3, 4)
