import pytest

from frontseal.errors import DecodeError
from frontseal.wire import Kind, Record, iter_records, pack_list, unpack_list


def test_record_roundtrip():
    rec = Record(Kind.SHARE_RELEASE, 3, 0, b"abc")
    raw = rec.to_bytes()
    assert len(raw) == 14 + 3
    assert Record.from_bytes(raw) == rec


def test_stream_of_records():
    recs = [Record(Kind.DKG_COMMIT, i, 0, bytes([i]) * i) for i in range(1, 4)]
    assert list(iter_records(b"".join(r.to_bytes() for r in recs))) == recs


@pytest.mark.parametrize(
    "raw",
    [
        b"\x01\x0a",
        b"\x02" + Record(Kind.DKG_SHARE, 1, 2, b"").to_bytes()[1:],
        b"\x01\x63" + Record(Kind.DKG_SHARE, 1, 2, b"").to_bytes()[2:],
        Record(Kind.DKG_SHARE, 1, 2, b"xyz").to_bytes()[:-1],
    ],
)
def test_malformed_records(raw):
    with pytest.raises(DecodeError):
        Record.from_bytes(raw)


def test_list_packing():
    items = [b"", b"a", b"bc" * 40]
    assert unpack_list(pack_list(items)) == items
    with pytest.raises(DecodeError):
        unpack_list(pack_list(items)[:-1])
