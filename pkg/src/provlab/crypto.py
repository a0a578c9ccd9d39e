"""Hashing and signature primitives.

Thin wrappers over :mod:`hashlib` and the ``cryptography`` package's Ed25519
implementation.  Signatures are deterministic and public keys are 32 bytes,
which keeps every fixture byte-stable across runs.

Key material for fixtures is derived from an integer seed with a keyed MAC,
so the same seed always yields the same keys without storing any randomness.
"""

from __future__ import annotations

import hashlib
import hmac
import struct

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

DIGEST_ALGORITHM = "sha-256"
DIGEST_SIZE = 32
PUBLIC_KEY_SIZE = 32
SIGNATURE_SIZE = 64

_DERIVE_KEY = b"provlab/keys/v1"


def digest(data: bytes) -> bytes:
    """SHA-256 of ``data``."""
    return hashlib.sha256(data).digest()


class SigningKey:
    """An Ed25519 private key with its serialised public half."""

    def __init__(self, private: Ed25519PrivateKey):
        self._private = private
        self.public_bytes: bytes = private.public_key().public_bytes_raw()

    @classmethod
    def from_seed_bytes(cls, seed: bytes) -> "SigningKey":
        if len(seed) != 32:
            raise ValueError("seed must be 32 bytes")
        return cls(Ed25519PrivateKey.from_private_bytes(seed))

    @property
    def private_bytes(self) -> bytes:
        return self._private.private_bytes_raw()

    def sign(self, message: bytes) -> bytes:
        return self._private.sign(message)


def verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    """True iff ``signature`` is valid for ``message`` under ``public_key``."""
    if len(public_key) != PUBLIC_KEY_SIZE or len(signature) != SIGNATURE_SIZE:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
    except (InvalidSignature, ValueError):
        return False
    return True


def derive_signing_key(seed: int, role: str) -> SigningKey:
    """Derive the signing key for ``role`` from an integer workspace seed."""
    material = hmac.new(
        _DERIVE_KEY, struct.pack(">Q", seed & (2**64 - 1)) + role.encode("utf-8"),
        hashlib.sha256,
    ).digest()
    return SigningKey.from_seed_bytes(material)


def derive_stream_seed(seed: int, role: str) -> int:
    """Derive a deterministic sub-seed for content generation."""
    material = hmac.new(
        _DERIVE_KEY + b"/stream",
        struct.pack(">Q", seed & (2**64 - 1)) + role.encode("utf-8"),
        hashlib.sha256,
    ).digest()
    return int.from_bytes(material[:8], "big")
