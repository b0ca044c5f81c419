import hashlib
import itertools
import random

import pytest
from hypothesis import given, strategies as st

from marketpalace.crypto import certify_key, public_key_bytes
from marketpalace.errors import BadCertificateError, EncodingError
from marketpalace.p2p import (
    PeerInfo,
    PeerTable,
    k_closest,
    peer_id_from_cert,
    xor_distance,
)

hex64 = st.text(alphabet="0123456789abcdef", min_size=64, max_size=64)


def test_peer_id_deterministic(user_cert):
    assert peer_id_from_cert(user_cert) == peer_id_from_cert(user_cert)


def test_peer_ids_distinct(server_keys, keypool):
    certs = [
        certify_key(server_keys.private_key, kp.public_key) for kp in keypool[:4]
    ]
    ids = {peer_id_from_cert(c) for c in certs}
    assert len(ids) == 4


def test_peer_id_matches_external_sha256(user_cert):
    expected = hashlib.sha256(public_key_bytes(user_cert.public_key)).hexdigest()
    assert peer_id_from_cert(user_cert) == expected


def test_xor_identity_and_symmetry():
    a, b = "ab" * 32, "cd" * 32
    assert xor_distance(a, a) == 0
    assert xor_distance(a, b) == xor_distance(b, a)


def test_xor_rejects_bad_ids():
    with pytest.raises(EncodingError):
        xor_distance("zz" * 32, "ab" * 32)
    with pytest.raises(EncodingError):
        xor_distance("ab", "ab" * 32)


def test_xor_triangle_inequality_exhaustive_8bit():
    # Exhaustive over 8-bit ids embedded in the low byte.
    def widen(x):
        return format(x, "02x").rjust(64, "0")

    for a, b, c in itertools.product(range(0, 256, 17), repeat=3):
        da_c = xor_distance(widen(a), widen(c))
        da_b = xor_distance(widen(a), widen(b))
        db_c = xor_distance(widen(b), widen(c))
        assert da_c <= da_b + db_c


@given(hex64, hex64, hex64)
def test_xor_triangle_inequality_randomized(a, b, c):
    assert xor_distance(a, c) <= xor_distance(a, b) + xor_distance(b, c)


def _mk_peer(peer_id, user_cert):
    # k_closest only looks at peer_id; reuse one cert for table-free tests.
    return PeerInfo(peer_id=peer_id, address="127.0.0.1:1", cert=user_cert, last_seen=0)


def brute_force_k_closest(peers, target, k):
    ranked = sorted(peers, key=lambda p: (xor_distance(p.peer_id, target), p.peer_id))
    return ranked[:k]


def test_small_table_returns_everything(user_cert):
    rng = random.Random(1)
    peers = [_mk_peer(format(rng.getrandbits(256), "064x"), user_cert) for _ in range(4)]
    got = k_closest(peers, "0" * 64, 20)
    assert len(got) == 4


def test_k1_returns_unique_minimizer(user_cert):
    peers = [_mk_peer(format(i, "064x"), user_cert) for i in (5, 9, 12)]
    got = k_closest(peers, format(8, "064x"), 1)
    assert got[0].peer_id == format(9, "064x")  # 8^9=1 < 8^12=4 < 8^5=13


def test_matches_brute_force_on_random_tables(user_cert):
    rng = random.Random(2024)
    for _ in range(50):
        n = rng.randrange(1, 101)
        peers = [
            _mk_peer(format(rng.getrandbits(256), "064x"), user_cert)
            for _ in range(n)
        ]
        target = format(rng.getrandbits(256), "064x")
        for k in (1, 5, 20):
            assert k_closest(peers, target, k) == brute_force_k_closest(
                peers, target, k
            )


def test_order_is_invariant_under_input_permutation(user_cert):
    # Distinct ids can never tie on XOR distance (a^t = b^t implies a = b),
    # so the (distance, peer_id) key must yield one total order regardless
    # of table iteration order.
    rng = random.Random(7)
    peers = [
        _mk_peer(format(rng.getrandbits(256), "064x"), user_cert) for _ in range(30)
    ]
    target = format(rng.getrandbits(256), "064x")
    reference = k_closest(peers, target, 10)
    for _ in range(5):
        rng.shuffle(peers)
        assert k_closest(peers, target, 10) == reference


def test_table_rejects_uncertified(server_keys, keypool):
    table = PeerTable(server_keys.public_key)
    kp = keypool[5]
    self_cert = certify_key(kp.private_key, kp.public_key)
    info = PeerInfo(
        peer_id=peer_id_from_cert(self_cert),
        address="127.0.0.1:9",
        cert=self_cert,
        last_seen=0,
    )
    assert table.add(info) is False
    assert len(table) == 0
    with pytest.raises(BadCertificateError):
        table.add_certified(self_cert, "127.0.0.1:9")


def test_table_rejects_mislabeled_peer_id(server_keys, user_cert, keypool):
    table = PeerTable(server_keys.public_key)
    other_cert = certify_key(server_keys.private_key, keypool[4].public_key)
    info = PeerInfo(
        peer_id=peer_id_from_cert(other_cert),  # wrong id for this cert
        address="127.0.0.1:9",
        cert=user_cert,
        last_seen=0,
    )
    assert table.add(info) is False


def test_table_capacity_evicts_oldest(server_keys, keypool):
    table = PeerTable(server_keys.public_key, capacity=2)
    infos = []
    for i, kp in enumerate(keypool[2:5]):
        cert = certify_key(server_keys.private_key, kp.public_key)
        infos.append(
            PeerInfo(peer_id_from_cert(cert), f"127.0.0.1:{i}", cert, last_seen=i)
        )
    assert table.add(infos[0]) and table.add(infos[1])
    assert table.add(infos[2])
    assert len(table) == 2
    assert infos[0].peer_id not in table  # oldest evicted


def test_peer_info_dict_roundtrip(server_keys, user_cert):
    info = PeerInfo(
        peer_id=peer_id_from_cert(user_cert),
        address="10.0.0.1:4000",
        cert=user_cert,
        last_seen=123,
    )
    restored = PeerInfo.from_dict(info.to_dict())
    assert restored == info
