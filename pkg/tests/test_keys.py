import pytest

from marketpalace.crypto import (
    generate_keypair,
    load_private_key_pem,
    private_key_pem,
    public_key_bytes,
    public_key_from_bytes,
    sign_detached,
    verify_detached,
)
from marketpalace.errors import EncodingError, ParameterError


def test_sign_verify_roundtrip(user_keys):
    msg = b"for sale: one bike"
    sig = sign_detached(user_keys.private_key, msg)
    assert verify_detached(user_keys.public_key, msg, sig)


def test_verify_rejects_other_message(user_keys):
    sig = sign_detached(user_keys.private_key, b"message a")
    assert not verify_detached(user_keys.public_key, b"message b", sig)


def test_below_minimum_modulus_rejected():
    with pytest.raises(ParameterError):
        generate_keypair(1024)


def test_generation_produces_distinct_moduli(keypool):
    moduli = {kp.public_key.public_numbers().n for kp in keypool}
    assert len(moduli) == len(keypool)


def test_cross_key_matrix(keypool):
    # Only the diagonal of a 3x3 (key, signature) matrix verifies.
    trio = keypool[:3]
    msgs = [f"msg-{i}".encode() for i in range(3)]
    sigs = [sign_detached(kp.private_key, m) for kp, m in zip(trio, msgs)]
    for i, kp in enumerate(trio):
        for j, (m, s) in enumerate(zip(msgs, sigs)):
            assert verify_detached(kp.public_key, m, s) == (i == j)


def test_public_key_bytes_roundtrip(user_keys):
    der = public_key_bytes(user_keys.public_key)
    restored = public_key_from_bytes(der)
    assert public_key_bytes(restored) == der


def test_malformed_public_key_rejected():
    with pytest.raises(EncodingError):
        public_key_from_bytes(b"\x01\x02\x03not a key")


def test_private_key_pem_roundtrip(user_keys):
    pem = private_key_pem(user_keys.private_key)
    restored = load_private_key_pem(pem)
    assert public_key_bytes(restored.public_key) == public_key_bytes(
        user_keys.public_key
    )


def test_verify_with_garbage_signature_is_false(user_keys):
    assert not verify_detached(user_keys.public_key, b"m", b"\x00" * 256)
    assert not verify_detached(user_keys.public_key, b"m", b"")
