import random

import pytest

from marketpalace.crypto import (
    EncryptedPrivateKey,
    decrypt_private_key,
    encrypt_private_key,
    public_key_bytes,
)
from marketpalace.errors import AuthenticationError, CorruptDataError, ParameterError

PASS = "correct horse battery"


def test_roundtrip(user_keys):
    enc = encrypt_private_key(user_keys.private_key, PASS)
    restored = decrypt_private_key(enc, PASS)
    assert public_key_bytes(restored.public_key()) == public_key_bytes(
        user_keys.public_key
    )


def test_wrong_passphrase_is_authentication_failure(user_keys):
    enc = encrypt_private_key(user_keys.private_key, PASS)
    with pytest.raises(AuthenticationError):
        decrypt_private_key(enc, PASS[:-1] + "X")


def test_one_character_difference_fails(user_keys):
    enc = encrypt_private_key(user_keys.private_key, "passphrase9")
    with pytest.raises(AuthenticationError):
        decrypt_private_key(enc, "passphrase8")


def test_short_passphrase_rejected(user_keys):
    with pytest.raises(ParameterError):
        encrypt_private_key(user_keys.private_key, "short")


def test_low_iteration_count_rejected(user_keys):
    with pytest.raises(ParameterError):
        encrypt_private_key(user_keys.private_key, PASS, kdf_iterations=1000)


def test_fresh_salt_and_nonce_per_call(user_keys):
    a = encrypt_private_key(user_keys.private_key, PASS)
    b = encrypt_private_key(user_keys.private_key, PASS)
    assert a.ciphertext != b.ciphertext
    assert a.kdf_salt != b.kdf_salt
    assert a.nonce != b.nonce


def test_truncation_fuzz_reports_corrupt_data(user_keys):
    # Truncating the ciphertext (KCV prefix intact) must surface as corrupt
    # data, not as a wrong passphrase.
    enc = encrypt_private_key(user_keys.private_key, PASS)
    rng = random.Random(7)
    lengths = [len(enc.ciphertext) - 1, len(enc.ciphertext) // 2, 30, 9] + [
        rng.randrange(9, len(enc.ciphertext)) for _ in range(8)
    ]
    for n in lengths:
        truncated = EncryptedPrivateKey(
            ciphertext=enc.ciphertext[:n],
            kdf_salt=enc.kdf_salt,
            kdf_iterations=enc.kdf_iterations,
            nonce=enc.nonce,
        )
        with pytest.raises(CorruptDataError):
            decrypt_private_key(truncated, PASS)


def test_tampered_body_reports_corrupt_data(user_keys):
    enc = encrypt_private_key(user_keys.private_key, PASS)
    mangled = bytearray(enc.ciphertext)
    mangled[len(mangled) // 2] ^= 0x40
    tampered = EncryptedPrivateKey(
        ciphertext=bytes(mangled),
        kdf_salt=enc.kdf_salt,
        kdf_iterations=enc.kdf_iterations,
        nonce=enc.nonce,
    )
    with pytest.raises(CorruptDataError):
        decrypt_private_key(tampered, PASS)


def test_dict_roundtrip(user_keys):
    enc = encrypt_private_key(user_keys.private_key, PASS)
    restored = EncryptedPrivateKey.from_dict(enc.to_dict())
    assert restored == enc
    decrypt_private_key(restored, PASS)


def test_decrypt_succeeds_iff_same_passphrase(user_keys):
    # Property over a handful of passphrase pairs.
    rng = random.Random(99)
    alphabet = "abcdefgh01"
    for _ in range(6):
        pw = "".join(rng.choice(alphabet) for _ in range(10))
        other = "".join(rng.choice(alphabet) for _ in range(10))
        enc = encrypt_private_key(user_keys.private_key, pw)
        assert decrypt_private_key(enc, pw) is not None
        if other != pw:
            with pytest.raises(AuthenticationError):
                decrypt_private_key(enc, other)
