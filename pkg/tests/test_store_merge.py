import itertools
import random

import pytest

from marketpalace.crypto import certify_key
from marketpalace.market import (
    ListingStore,
    Tombstone,
    create_signed_listing,
    make_tombstone,
    verify_tombstone,
)
from marketpalace.errors import AuthorizationError, NotFoundError


class FakeClock:
    def __init__(self, start=1_700_000_000.0):
        self.now = start

    def __call__(self):
        return self.now

    def advance(self, dt):
        self.now += dt


@pytest.fixture()
def clock():
    return FakeClock()


@pytest.fixture(scope="module")
def owners(keypool, server_keys):
    pairs = []
    for kp in keypool[3:6]:
        pairs.append((kp, certify_key(server_keys.private_key, kp.public_key)))
    return pairs


def _listing(owner, clock, title="bike", ttl_s=604800, **kw):
    kp, cert = owner
    return create_signed_listing(
        kp, cert, title, "desc", 100, "EUR", ttl_s, clock, **kw
    )


def _store(server_keys, clock, directory=None):
    return ListingStore(server_keys.public_key, directory=directory, clock=clock)


def test_merge_new_listings(server_keys, owners, clock):
    store = _store(server_keys, clock)
    batch = [_listing(owners[0], clock, title=f"item {i}") for i in range(3)]
    report = store.merge(batch=batch)
    assert (report.accepted, report.rejected, report.duplicates) == (3, 0, 0)
    assert len(store) == 3


def test_merge_is_idempotent(server_keys, owners, clock):
    store = _store(server_keys, clock)
    batch = [_listing(owners[0], clock, title=f"item {i}") for i in range(3)]
    store.merge(batch=batch)
    before = store.state_fingerprint()
    report = store.merge(batch=batch)
    assert report.duplicates == 3 and report.accepted == 0
    assert store.state_fingerprint() == before


def test_invalid_listing_rejected(server_keys, owners, clock, keypool):
    store = _store(server_keys, clock)
    kp = keypool[6]
    self_cert = certify_key(kp.private_key, kp.public_key)
    forged = create_signed_listing(
        kp, self_cert, "fake", "d", 1, "EUR", 100, clock
    )
    report = store.merge(batch=[forged])
    assert report.rejected == 1 and len(store) == 0


def test_expired_listing_not_admitted(server_keys, owners, clock):
    store = _store(server_keys, clock)
    sl = _listing(owners[0], clock, ttl_s=5)
    clock.advance(10)
    report = store.merge(batch=[sl])
    assert report.rejected == 1 and len(store) == 0


def test_owner_remove_and_tombstone_propagation(server_keys, owners, clock):
    store = _store(server_keys, clock)
    kp, cert = owners[0]
    sl = _listing(owners[0], clock)
    store.merge(batch=[sl])
    tomb = store.remove_listing(kp, cert, sl.content_id)
    assert store.get(sl.content_id) is None
    assert verify_tombstone(cert, tomb)
    # Tombstone wins on re-merge.
    report = store.merge(batch=[sl])
    assert report.rejected == 1
    assert store.get(sl.content_id) is None


def test_non_owner_cannot_remove(server_keys, owners, clock):
    store = _store(server_keys, clock)
    sl = _listing(owners[0], clock)
    store.merge(batch=[sl])
    other_kp, other_cert = owners[1]
    with pytest.raises(AuthorizationError):
        store.remove_listing(other_kp, other_cert, sl.content_id)
    with pytest.raises(NotFoundError):
        store.remove_listing(owners[0][0], owners[0][1], "0" * 64)


def test_tombstone_verifies_under_owner_cert_only(server_keys, owners, clock):
    kp, cert = owners[0]
    sl = _listing(owners[0], clock)
    tomb = make_tombstone(kp, sl.content_id, clock)
    assert verify_tombstone(cert, tomb)
    for _, other_cert in owners[1:]:
        assert not verify_tombstone(other_cert, tomb)


def test_forged_tombstone_rejected(server_keys, owners, clock):
    store = _store(server_keys, clock)
    sl = _listing(owners[0], clock)
    store.merge(batch=[sl])
    forged = make_tombstone(owners[1][0], sl.content_id, clock)
    report = store.merge(tombs=[forged])
    assert report.rejected == 1
    assert store.get(sl.content_id) is not None


def test_tombstone_wins_over_all_two_op_orderings(server_keys, owners, clock):
    kp, cert = owners[0]
    sl = _listing(owners[0], clock)
    tomb = make_tombstone(kp, sl.content_id, clock)

    final_states = []
    for order in itertools.permutations(["listing", "tombstone"]):
        store = _store(server_keys, clock)
        for op in order:
            if op == "listing":
                store.merge(batch=[sl])
            else:
                store.merge(tombs=[tomb])
        assert store.get(sl.content_id) is None
        final_states.append(store.state_fingerprint())
    # Same-call batch as well.
    store = _store(server_keys, clock)
    store.merge(batch=[sl], tombs=[tomb])
    assert store.get(sl.content_id) is None
    final_states.append(store.state_fingerprint())
    assert len(set(final_states)) == 1


def test_pending_forged_tombstone_does_not_block_listing(server_keys, owners, clock):
    store = _store(server_keys, clock)
    sl = _listing(owners[0], clock)
    forged = make_tombstone(owners[1][0], sl.content_id, clock)
    store.merge(tombs=[forged])  # parked: owner cert unknown yet
    report = store.merge(batch=[sl])
    assert report.accepted == 1
    assert store.get(sl.content_id) is not None


def test_expire_removes_due_listings(server_keys, owners, clock):
    store = _store(server_keys, clock)
    keep = _listing(owners[0], clock, title="keep", ttl_s=1000)
    drop = _listing(owners[0], clock, title="drop", ttl_s=1)
    store.merge(batch=[keep, drop])
    clock.advance(2)
    assert store.expire() == 1
    assert store.get(keep.content_id) is not None
    assert store.get(drop.content_id) is None
    # Monotone: still expired later.
    clock.advance(10_000)
    store.merge(batch=[drop])
    assert store.get(drop.content_id) is None


def test_merge_commutative_and_idempotent_randomized(server_keys, owners, clock):
    rng = random.Random(42)
    listings = [
        _listing(owners[rng.randrange(len(owners))], clock, title=f"l{i}")
        for i in range(8)
    ]
    tombs = []
    for sl in rng.sample(listings, 4):
        owner = next(
            o for o in owners if o[1].fingerprint == sl.listing.owner_fingerprint
        )
        tombs.append(make_tombstone(owner[0], sl.content_id, clock))

    def random_batches():
        items = [("l", sl) for sl in listings] + [("t", t) for t in tombs]
        rng.shuffle(items)
        cut = rng.randrange(len(items) + 1)
        return items[:cut], items[cut:]

    for _ in range(30):
        (a, b) = random_batches()

        def apply(store, chunk):
            store.merge(
                batch=[x for kind, x in chunk if kind == "l"],
                tombs=[x for kind, x in chunk if kind == "t"],
            )

        s1 = _store(server_keys, clock)
        apply(s1, a)
        apply(s1, b)
        s2 = _store(server_keys, clock)
        apply(s2, b)
        apply(s2, a)
        assert s1.state_fingerprint() == s2.state_fingerprint()
        # Replaying everything changes nothing.
        before = s1.state_fingerprint()
        apply(s1, a)
        apply(s1, b)
        assert s1.state_fingerprint() == before


def test_persistence_roundtrip(server_keys, owners, clock, tmp_path):
    directory = tmp_path / "store"
    store = _store(server_keys, clock, directory)
    kp, cert = owners[0]
    keep = _listing(owners[0], clock, title="keep")
    gone = _listing(owners[0], clock, title="gone")
    store.merge(batch=[keep, gone])
    store.remove_listing(kp, cert, gone.content_id)

    reloaded = _store(server_keys, clock, directory)
    assert reloaded.get(keep.content_id) is not None
    assert reloaded.get(gone.content_id) is None
    # Tombstone survived the restart.
    report = reloaded.merge(batch=[gone])
    assert report.rejected == 1
    assert (directory / f"{keep.content_id}.json").exists()
    assert not (directory / f"{gone.content_id}.json").exists()


def test_no_stored_listing_is_expired_or_tombstoned(server_keys, owners, clock):
    rng = random.Random(3)
    store = _store(server_keys, clock)
    for i in range(20):
        sl = _listing(owners[0], clock, title=f"x{i}", ttl_s=rng.randrange(1, 50))
        store.merge(batch=[sl])
        clock.advance(rng.randrange(0, 30))
        store.expire()
        now = clock()
        for held in store.listings():
            assert held.listing.expires_at > now
