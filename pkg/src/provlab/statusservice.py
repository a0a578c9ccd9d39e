"""Online certificate-status service: wire protocol, server, and client.

Frames are length-prefixed (u16 big-endian) over a stream socket, one
request per connection.

Request payload::

    "PSTA"  u8 version=1  u64 serial (big-endian)

Response payload::

    "PSTR"  u8 version  u8 status  u64 revoked_at  u64 produced_at
    u16 sig-length  signature

Status codes: 0 GOOD, 1 REVOKED, 2 UNKNOWN; ``revoked_at`` is zero unless
revoked.  The responder signs over the queried serial as well (see
:func:`.trust.status_response_payload`) even though the frame omits it, so
responses cannot be replayed across serials.  A malformed request gets an
error payload (``"PSTE"  u8 version  u8 code``) and the connection closes;
the service itself stays up.

The client never surfaces an unverifiable response: any transport problem,
framing problem, or signature failure collapses to
:class:`~provlab.errors.ServiceUnreachable`, leaving the fail-open/ fail-closed
decision to the validation policy.

The server keeps a query log of every serial asked about.  That log is the
privacy cost of online status checking: the responder learns which
credentials a validator is looking at, and when.
"""

from __future__ import annotations

import socket
import socketserver
import struct
import threading

from .crypto import SIGNATURE_SIZE
from .errors import BindFailure, ServiceUnreachable
from .trust import Authority, Certificate, CertStatus, StatusResponse, verify_status_response

REQUEST_MAGIC = b"PSTA"
RESPONSE_MAGIC = b"PSTR"
ERROR_MAGIC = b"PSTE"
PROTOCOL_VERSION = 1

ERR_MALFORMED = 1
ERR_VERSION = 2

_REQUEST_SIZE = 13
_MAX_FRAME = 4096


def encode_request(serial: int) -> bytes:
    return REQUEST_MAGIC + struct.pack(">BQ", PROTOCOL_VERSION, serial)


def encode_response(response: StatusResponse) -> bytes:
    return (
        RESPONSE_MAGIC
        + struct.pack(
            ">BBQQH",
            PROTOCOL_VERSION,
            response.status.value,
            response.revoked_at or 0,
            response.produced_at,
            len(response.responder_signature),
        )
        + response.responder_signature
    )


def decode_response(payload: bytes, serial: int) -> StatusResponse:
    """Parse a response payload for the serial we asked about."""
    if len(payload) < 24 or payload[:4] != RESPONSE_MAGIC:
        raise ServiceUnreachable("malformed status response frame")
    version, status_code, revoked_at, produced_at, sig_len = struct.unpack(
        ">BBQQH", payload[4:24]
    )
    if version != PROTOCOL_VERSION:
        raise ServiceUnreachable(f"unsupported status protocol version {version}")
    if len(payload) != 24 + sig_len or sig_len != SIGNATURE_SIZE:
        raise ServiceUnreachable("bad status response signature length")
    try:
        status = CertStatus(status_code)
    except ValueError:
        raise ServiceUnreachable(f"unknown status code {status_code}") from None
    return StatusResponse(
        serial=serial,
        status=status,
        revoked_at=revoked_at or None,
        produced_at=produced_at,
        responder_signature=payload[24:],
    )


def _frame(payload: bytes) -> bytes:
    return struct.pack(">H", len(payload)) + payload


def _recv_exact(sock: socket.socket, count: int) -> bytes:
    chunks = []
    remaining = count
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            raise ServiceUnreachable("connection closed mid-frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def _recv_frame(sock: socket.socket) -> bytes:
    header = _recv_exact(sock, 2)
    length = struct.unpack(">H", header)[0]
    if length == 0 or length > _MAX_FRAME:
        raise ServiceUnreachable(f"invalid frame length {length}")
    return _recv_exact(sock, length)


class _Handler(socketserver.BaseRequestHandler):
    def handle(self) -> None:  # one request per connection
        service: StatusService = self.server.status_service  # type: ignore[attr-defined]
        try:
            payload = _recv_frame(self.request)
        except (ServiceUnreachable, OSError):
            return
        if (
            len(payload) != _REQUEST_SIZE
            or payload[:4] != REQUEST_MAGIC
            or payload[4] != PROTOCOL_VERSION
        ):
            code = ERR_VERSION if payload[:4] == REQUEST_MAGIC else ERR_MALFORMED
            error = ERROR_MAGIC + struct.pack(">BB", PROTOCOL_VERSION, code)
            try:
                self.request.sendall(_frame(error))
            except OSError:
                pass
            return
        serial = struct.unpack(">Q", payload[5:13])[0]
        response = service.answer(serial)
        try:
            self.request.sendall(_frame(encode_response(response)))
        except OSError:
            pass


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class StatusService:
    """A running status responder bound to a local TCP port."""

    def __init__(self, authority: Authority, host: str = "127.0.0.1", port: int = 0):
        self.authority = authority
        self._lock = threading.Lock()
        self.query_log: list[int] = []
        try:
            self._server = _Server((host, port), _Handler)
        except OSError as exc:
            raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
        self._server.status_service = self  # type: ignore[attr-defined]
        self.endpoint: tuple[str, int] = self._server.server_address[:2]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def answer(self, serial: int) -> StatusResponse:
        with self._lock:
            self.query_log.append(serial)
            return self.authority.status_for(serial)

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> "StatusService":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.stop()


def run_status_service(
    authority: Authority, host: str = "127.0.0.1", port: int = 0
) -> StatusService:
    """Start a status responder; raises :class:`BindFailure` if binding fails."""
    return StatusService(authority, host, port)


def query_status(
    endpoint: tuple[str, int],
    serial: int,
    responder_cert: Certificate,
    timeout: float = 5.0,
) -> StatusResponse:
    """Query one serial and verify the responder's signature.

    Raises :class:`ServiceUnreachable` for every failure mode: connection
    errors, malformed frames, error frames, and signature mismatches alike.
    """
    try:
        with socket.create_connection(endpoint, timeout=timeout) as sock:
            sock.sendall(_frame(encode_request(serial)))
            payload = _recv_frame(sock)
    except OSError as exc:
        raise ServiceUnreachable(f"status service unreachable: {exc}") from exc
    response = decode_response(payload, serial)
    if not verify_status_response(response, responder_cert):
        raise ServiceUnreachable("status response signature does not verify")
    return response
