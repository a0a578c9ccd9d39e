"""Certificates, chains, revocation, and the online status service."""

import threading

import pytest

from provlab.crypto import derive_signing_key
from provlab.errors import (
    BindFailure,
    ServiceUnreachable,
    UnknownSerial,
    UsageViolation,
    ValidityNotNested,
)
from provlab.statusservice import (
    StatusService,
    encode_request,
    query_status,
    run_status_service,
)
from provlab.trust import (
    Authority,
    Certificate,
    CertStatus,
    ChainStatus,
    TrustList,
    Usage,
    decode_certificate,
    decode_revocation_list,
    encode_certificate,
    encode_revocation_list,
    issue_certificate,
    verify_chain,
    verify_crl,
    verify_status_response,
)

T0 = 1_735_689_600
YEAR = 365 * 86_400


def make_root(name="root", serial=1, span=10):
    key = derive_signing_key(999, name)
    cert = issue_certificate(
        key,
        Certificate(
            serial=serial,
            subject=name,
            issuer=name,
            public_key=key.public_bytes,
            not_before=T0 - span * YEAR,
            not_after=T0 + span * YEAR,
            usage=Usage.ROOT,
            issuer_signature=b"",
        ),
    )
    return key, cert


def make_leaf(root_key, root_cert, name="leaf", serial=100, usage=Usage.LEAF_SIGNING, span=1):
    key = derive_signing_key(999, name)
    cert = issue_certificate(
        root_key,
        Certificate(
            serial=serial,
            subject=name,
            issuer=root_cert.subject,
            public_key=key.public_bytes,
            not_before=T0 - 86_400,
            not_after=T0 + span * YEAR,
            usage=usage,
            issuer_signature=b"",
        ),
        root_cert,
    )
    return key, cert


@pytest.fixture()
def pki():
    root_key, root_cert = make_root()
    leaf_key, leaf_cert = make_leaf(root_key, root_cert)
    trust = TrustList((root_cert,))
    return root_key, root_cert, leaf_key, leaf_cert, trust


def test_certificate_wire_roundtrip(pki):
    _, root_cert, _, leaf_cert, _ = pki
    for cert in (root_cert, leaf_cert):
        assert decode_certificate(encode_certificate(cert)) == cert


def test_chain_valid(pki):
    _, root_cert, _, leaf_cert, trust = pki
    verdict = verify_chain((leaf_cert, root_cert), trust, T0)
    assert verdict.valid
    assert verdict.status == ChainStatus.VALID


def test_chain_untrusted_root(pki):
    _, root_cert, _, leaf_cert, _ = pki
    _, other_root = make_root("other-root", serial=2)
    verdict = verify_chain((leaf_cert, root_cert), TrustList((other_root,)), T0)
    assert verdict.status == ChainStatus.UNTRUSTED_ROOT


def test_chain_expired_leaf(pki):
    _, root_cert, _, leaf_cert, trust = pki
    verdict = verify_chain((leaf_cert, root_cert), trust, T0 + 2 * YEAR)
    assert verdict.status == ChainStatus.EXPIRED
    assert not verdict.valid


def test_chain_bad_link_signature(pki):
    root_key, root_cert, _, leaf_cert, trust = pki
    # re-parent the leaf under a different key but keep the old signature
    forged = decode_certificate(encode_certificate(leaf_cert))
    impostor_key = derive_signing_key(999, "impostor")
    from dataclasses import replace

    forged = replace(forged, public_key=impostor_key.public_bytes)
    verdict = verify_chain((forged, root_cert), trust, T0)
    assert verdict.status == ChainStatus.BAD_LINK_SIGNATURE


def test_chain_check_order_is_stable(pki):
    """Signature problems outrank trust problems outrank windows."""
    root_key, root_cert, _, leaf_cert, _ = pki
    from dataclasses import replace

    forged = replace(leaf_cert, public_key=derive_signing_key(999, "x").public_bytes)
    _, other_root = make_root("other-root", serial=2)
    # bad signature AND untrusted root AND expired: signature wins
    verdict = verify_chain((forged, root_cert), TrustList((other_root,)), T0 + 5 * YEAR)
    assert verdict.status == ChainStatus.BAD_LINK_SIGNATURE


def test_leaf_cannot_issue(pki):
    _, _, leaf_key, leaf_cert, _ = pki
    with pytest.raises(UsageViolation):
        issue_certificate(
            leaf_key,
            Certificate(
                serial=5,
                subject="grandchild",
                issuer=leaf_cert.subject,
                public_key=leaf_key.public_bytes,
                not_before=T0,
                not_after=T0 + YEAR // 2,
                usage=Usage.LEAF_SIGNING,
                issuer_signature=b"",
            ),
            leaf_cert,
        )


def test_validity_windows_must_nest(pki):
    root_key, root_cert, *_ = pki
    with pytest.raises(ValidityNotNested):
        make_leaf(root_key, root_cert, "outlives-root", serial=7, span=20)


# ---------------------------------------------------------------------------
# revocation list
# ---------------------------------------------------------------------------

def test_crl_roundtrip_and_verification(pki):
    root_key, root_cert, _, leaf_cert, _ = pki
    authority = Authority("root", root_key, root_cert, T0)
    authority.issued[leaf_cert.serial] = leaf_cert.subject
    authority.revoke(leaf_cert.serial, T0 + 1000)
    crl = authority.generate_crl()
    assert crl.entries == ((leaf_cert.serial, T0 + 1000),)
    assert verify_crl(crl, root_cert)
    again = decode_revocation_list(encode_revocation_list(crl))
    assert again == crl
    # tampered entry breaks the signature
    from dataclasses import replace

    forged = replace(crl, entries=((leaf_cert.serial + 1, T0 + 1000),))
    assert not verify_crl(forged, root_cert)


def test_revoking_unknown_serial_fails(pki):
    root_key, root_cert, *_ = pki
    authority = Authority("root", root_key, root_cert, T0)
    with pytest.raises(UnknownSerial):
        authority.revoke(31337, T0)


def test_status_response_signature(pki):
    root_key, root_cert, _, leaf_cert, _ = pki
    authority = Authority("root", root_key, root_cert, T0)
    authority.issued[leaf_cert.serial] = leaf_cert.subject
    response = authority.status_for(leaf_cert.serial)
    assert response.status == CertStatus.GOOD
    assert verify_status_response(response, root_cert)
    authority.revoke(leaf_cert.serial, T0 + 5)
    revoked = authority.status_for(leaf_cert.serial)
    assert revoked.status == CertStatus.REVOKED
    assert revoked.revoked_at == T0 + 5
    assert verify_status_response(revoked, root_cert)
    unknown = authority.status_for(424242)
    assert unknown.status == CertStatus.UNKNOWN
    assert verify_status_response(unknown, root_cert)


# ---------------------------------------------------------------------------
# status service over a real socket
# ---------------------------------------------------------------------------

@pytest.fixture()
def service(pki):
    root_key, root_cert, _, leaf_cert, _ = pki
    authority = Authority("root", root_key, root_cert, T0)
    authority.issued[leaf_cert.serial] = leaf_cert.subject
    svc = run_status_service(authority)
    yield svc, authority, root_cert, leaf_cert
    svc.stop()


def test_query_roundtrip(service):
    svc, authority, root_cert, leaf_cert = service
    response = query_status(svc.endpoint, leaf_cert.serial, root_cert)
    assert response.status == CertStatus.GOOD
    authority.revoke(leaf_cert.serial, T0 + 9)
    response = query_status(svc.endpoint, leaf_cert.serial, root_cert)
    assert response.status == CertStatus.REVOKED
    assert response.revoked_at == T0 + 9


def test_concurrent_queries(service):
    svc, _, root_cert, leaf_cert = service
    results, errors = [], []

    def worker():
        try:
            results.append(query_status(svc.endpoint, leaf_cert.serial, root_cert))
        except Exception as exc:  # noqa: BLE001 - collecting for assertion
            errors.append(exc)

    threads = [threading.Thread(target=worker) for _ in range(100)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert not errors
    assert len(results) == 100
    assert all(r.status == CertStatus.GOOD for r in results)
    assert len(svc.query_log) == 100


def test_malformed_frames_do_not_kill_service(service):
    import socket

    svc, _, root_cert, leaf_cert = service
    host, port = svc.endpoint
    for payload in (b"", b"junk", b"\x00" * 64, encode_request(leaf_cert.serial)[:-1]):
        with socket.create_connection((host, port), timeout=2) as sock:
            sock.sendall(len(payload).to_bytes(2, "big") + payload)
            sock.recv(4096)  # error frame or close; either way the server lives
    # service still answers proper queries afterwards
    response = query_status(svc.endpoint, leaf_cert.serial, root_cert)
    assert response.status == CertStatus.GOOD


def test_forged_responder_is_unreachable(service):
    svc, _, _, leaf_cert = service
    _, other_root = make_root("other-root", serial=2)
    with pytest.raises(ServiceUnreachable):
        query_status(svc.endpoint, leaf_cert.serial, other_root)


def test_unreachable_endpoint(pki):
    _, root_cert, _, leaf_cert, _ = pki
    with pytest.raises(ServiceUnreachable):
        query_status(("127.0.0.1", 1), leaf_cert.serial, root_cert, timeout=0.5)


def test_bind_failure(service):
    svc, authority, *_ = service
    host, port = svc.endpoint
    with pytest.raises(BindFailure):
        run_status_service(authority, host=host, port=port)


def test_channel_agreement(service):
    """The CRL and the online channel answer from the same state."""
    svc, authority, root_cert, leaf_cert = service
    authority.revoke(leaf_cert.serial, T0 + 77)
    crl = authority.generate_crl()
    online = query_status(svc.endpoint, leaf_cert.serial, root_cert)
    assert (leaf_cert.serial, online.revoked_at) in crl.entries
    assert online.status == CertStatus.REVOKED
