import struct

import pytest
from hypothesis import given, strategies as st

from marketpalace.p2p.wire import (
    MAX_FRAME_BYTES,
    FrameError,
    FrameTooLarge,
    IncompleteFrame,
    MalformedFrame,
    MessageType,
    WireMessage,
    frame_decode,
    frame_encode,
)


@pytest.mark.parametrize("mtype", list(MessageType))
def test_roundtrip_every_type(mtype):
    msg = WireMessage(mtype, {"a": 1, "b": "text", "nested": {"x": [1, 2]}})
    encoded = frame_encode(msg)
    decoded, consumed = frame_decode(encoded)
    assert decoded == msg
    assert consumed == len(encoded)


def test_two_frames_back_to_back():
    a = frame_encode(WireMessage(MessageType.HELLO, {"n": 1}))
    b = frame_encode(WireMessage(MessageType.PUSH, {"n": 2}))
    decoded, consumed = frame_decode(a + b)
    assert decoded.payload == {"n": 1}
    decoded2, _ = frame_decode((a + b)[consumed:])
    assert decoded2.payload == {"n": 2}


def test_declared_oversize_rejected_before_body():
    header = struct.pack(">I", MAX_FRAME_BYTES + 1)
    with pytest.raises(FrameTooLarge):
        frame_decode(header)  # no body bytes supplied at all


def test_truncated_frame_is_incomplete():
    encoded = frame_encode(WireMessage(MessageType.HELLO, {"k": "v"}))
    for cut in (0, 3, 5, len(encoded) - 1):
        with pytest.raises(IncompleteFrame):
            frame_decode(encoded[:cut])


def test_unknown_type_byte_rejected():
    body = b'{"x":1}'
    frame = struct.pack(">I", 1 + len(body)) + bytes([99]) + body
    with pytest.raises(MalformedFrame):
        frame_decode(frame)


def test_zero_length_rejected():
    with pytest.raises(MalformedFrame):
        frame_decode(struct.pack(">I", 0))


def test_non_object_payload_rejected():
    body = b"[1,2]"
    frame = struct.pack(">I", 1 + len(body)) + bytes([1]) + body
    with pytest.raises(MalformedFrame):
        frame_decode(frame)


def test_type_byte_values_match_wire_spec():
    assert MessageType.HELLO == 1
    assert MessageType.HELLO_ACK == 2
    assert MessageType.PUSH == 3
    assert MessageType.PUSH_ACK == 4
    assert MessageType.ENVELOPE == 5
    assert MessageType.PEERS_REQUEST == 6
    assert MessageType.PEERS_RESPONSE == 7


@given(st.binary(max_size=64))
def test_random_prefixes_never_crash_decoder(junk):
    try:
        frame_decode(junk)
    except FrameError:
        pass  # controlled rejection is the contract


@given(st.binary(max_size=200))
def test_junk_after_real_header_never_crashes(junk):
    header = struct.pack(">I", 1 + len(junk)) + bytes([3])
    try:
        frame_decode(header + junk)
    except FrameError:
        pass
