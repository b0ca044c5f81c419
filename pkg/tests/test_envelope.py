import random

import pytest

from marketpalace.crypto import (
    Envelope,
    certify_key,
    open_envelope,
    seal_envelope,
    public_key_bytes,
)
from marketpalace.crypto.certify import CertifiedKey
from marketpalace.errors import (
    BadCertificateError,
    BadSignatureError,
    DecryptionError,
    MarketPalaceError,
    ParameterError,
)


@pytest.fixture(scope="module")
def parties(keypool, server_keys):
    sender, receiver, outsider = keypool[3], keypool[4], keypool[5]
    sender_cert = certify_key(server_keys.private_key, sender.public_key)
    return sender, sender_cert, receiver, outsider


def test_seal_open_roundtrip(parties, server_keys):
    sender, cert, receiver, _ = parties
    env = seal_envelope(
        sender.private_key, cert, receiver.public_key, b"bid: 5000 EUR"
    )
    plaintext, sender_pk = open_envelope(
        receiver.private_key, server_keys.public_key, env
    )
    assert plaintext == b"bid: 5000 EUR"
    assert public_key_bytes(sender_pk) == public_key_bytes(sender.public_key)


def test_third_party_cannot_open(parties, server_keys):
    sender, cert, receiver, outsider = parties
    env = seal_envelope(sender.private_key, cert, receiver.public_key, b"secret")
    with pytest.raises(DecryptionError):
        open_envelope(outsider.private_key, server_keys.public_key, env)


def test_mismatched_cert_and_key_rejected(parties, server_keys, keypool):
    _, cert, receiver, outsider = parties
    with pytest.raises(ParameterError):
        seal_envelope(outsider.private_key, cert, receiver.public_key, b"x")


def test_self_signed_cert_dropped(parties, server_keys):
    # A sender who certified their own key is not a valid user.
    sender, _, receiver, _ = parties
    self_cert = certify_key(sender.private_key, sender.public_key)
    env = seal_envelope(sender.private_key, self_cert, receiver.public_key, b"hi")
    with pytest.raises(BadCertificateError):
        open_envelope(receiver.private_key, server_keys.public_key, env)


def test_large_payload_roundtrip(parties, server_keys):
    sender, cert, receiver, _ = parties
    payload = random.Random(1).randbytes(1 << 20)  # 1 MiB
    env = seal_envelope(sender.private_key, cert, receiver.public_key, payload)
    plaintext, _ = open_envelope(receiver.private_key, server_keys.public_key, env)
    assert plaintext == payload


def test_roundtrip_up_to_four_mib(parties, server_keys):
    # The stated payload ceiling for direct messages.
    sender, cert, receiver, _ = parties
    payload = random.Random(2).randbytes(4 << 20)
    env = seal_envelope(sender.private_key, cert, receiver.public_key, payload)
    plaintext, _ = open_envelope(receiver.private_key, server_keys.public_key, env)
    assert plaintext == payload


def _flip(data: bytes, pos: int, bit: int) -> bytes:
    out = bytearray(data)
    out[pos] ^= 1 << bit
    return bytes(out)


def test_bitflip_fuzz_across_all_fields(parties, server_keys):
    sender, cert, receiver, _ = parties
    env = seal_envelope(sender.private_key, cert, receiver.public_key, b"payload")
    rng = random.Random(0xBEEF)

    def rejects(mutated: Envelope) -> bool:
        try:
            open_envelope(receiver.private_key, server_keys.public_key, mutated)
        except MarketPalaceError:
            return True
        return False

    for _ in range(24):
        pos = rng.randrange(len(env.ciphertext))
        assert rejects(
            Envelope(
                _flip(env.ciphertext, pos, rng.randrange(8)),
                env.wrapped_key,
                env.sender_cert,
                env.signature,
                env.timestamp,
            )
        )
    for _ in range(24):
        pos = rng.randrange(len(env.wrapped_key))
        assert rejects(
            Envelope(
                env.ciphertext,
                _flip(env.wrapped_key, pos, rng.randrange(8)),
                env.sender_cert,
                env.signature,
                env.timestamp,
            )
        )
    for _ in range(24):
        pos = rng.randrange(len(env.sender_cert.certification))
        mangled_cert = CertifiedKey(
            public_key=env.sender_cert.public_key,
            certification=_flip(
                env.sender_cert.certification, pos, rng.randrange(8)
            ),
        )
        assert rejects(
            Envelope(
                env.ciphertext,
                env.wrapped_key,
                mangled_cert,
                env.signature,
                env.timestamp,
            )
        )
    for _ in range(24):
        pos = rng.randrange(len(env.signature))
        assert rejects(
            Envelope(
                env.ciphertext,
                env.wrapped_key,
                env.sender_cert,
                _flip(env.signature, pos, rng.randrange(8)),
                env.timestamp,
            )
        )
    # Timestamp is signed material too.
    assert rejects(
        Envelope(
            env.ciphertext,
            env.wrapped_key,
            env.sender_cert,
            env.signature,
            env.timestamp + 1,
        )
    )


def test_tampered_signature_error_kind(parties, server_keys):
    sender, cert, receiver, _ = parties
    env = seal_envelope(sender.private_key, cert, receiver.public_key, b"m")
    bad = Envelope(
        env.ciphertext,
        env.wrapped_key,
        env.sender_cert,
        _flip(env.signature, 0, 0),
        env.timestamp,
    )
    with pytest.raises(BadSignatureError):
        open_envelope(receiver.private_key, server_keys.public_key, bad)


def test_dict_roundtrip(parties, server_keys):
    sender, cert, receiver, _ = parties
    env = seal_envelope(sender.private_key, cert, receiver.public_key, b"chat: hey")
    restored = Envelope.from_dict(env.to_dict())
    plaintext, _ = open_envelope(
        receiver.private_key, server_keys.public_key, restored
    )
    assert plaintext == b"chat: hey"
