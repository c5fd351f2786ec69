import json

import pytest
from hypothesis import given, settings, strategies as st

from gatewatch.store import (
    InsertResult,
    MessageStore,
    RECORD_FIELDS,
    decode_record,
    encode_record,
)
from tests.conftest import make_message, read_jsonl


class TestRecordCodec:
    def test_field_order_is_fixed(self):
        line = encode_record(make_message())
        assert tuple(json.loads(line).keys()) == RECORD_FIELDS

    def test_round_trip(self):
        msg = make_message(text="códe 12345 ünïcode")
        assert decode_record(encode_record(msg)) == msg


class TestInsert:
    def test_insert_then_duplicate(self, store):
        msg = make_message()
        assert store.insert(msg) is InsertResult.INSERTED
        assert store.insert(msg) is InsertResult.DUPLICATE
        assert len(store) == 1

    def test_cross_gateway_duplicate_records_sighting(self, store):
        a = make_message(gateway="gw-a")
        b = make_message(gateway="gw-b")
        assert store.insert(a) is InsertResult.INSERTED
        assert store.insert(b) is InsertResult.DUPLICATE
        from gatewatch.messages import message_key

        assert store.sightings(message_key(a)) == {"gw-a", "gw-b"}
        assert len(store) == 1

    def test_reopen_preserves_dedup(self, tmp_path):
        root = tmp_path / "s"
        s1 = MessageStore(root)
        s1.insert(make_message())
        s1.close()
        s2 = MessageStore(root)
        assert s2.insert(make_message()) is InsertResult.DUPLICATE
        s2.close()

    def test_read_only_store_rejects_writes(self, tmp_path):
        from gatewatch.store import StoreError

        MessageStore(tmp_path / "s").close()
        ro = MessageStore(tmp_path / "s", writable=False)
        with pytest.raises(StoreError):
            ro.insert(make_message())

    def test_segment_rollover(self, tmp_path, monkeypatch):
        import gatewatch.store as store_mod

        monkeypatch.setattr(store_mod, "SEGMENT_RECORDS", 5)
        s = MessageStore(tmp_path / "s")
        for i in range(12):
            s.insert(make_message(minutes=i))
        s.close()
        segments = sorted((tmp_path / "s" / "segments").glob("*.jsonl"))
        assert len(segments) == 3
        assert sum(len(read_jsonl(p)) for p in segments) == 12

    def test_failed_write_leaves_no_partial_record(self, tmp_path, monkeypatch):
        from gatewatch.store import StoreError

        s = MessageStore(tmp_path / "s")
        s.insert(make_message(minutes=0))
        fh = s._open_segment_for_append()

        real_write = fh.write

        def boom(_data):
            raise OSError("disk full")

        monkeypatch.setattr(fh, "write", boom)
        with pytest.raises(StoreError):
            s.insert(make_message(minutes=1))
        monkeypatch.setattr(fh, "write", real_write)
        s.close()
        reopened = MessageStore(tmp_path / "s")
        assert len(reopened) == 1
        assert reopened.insert(make_message(minutes=1)) is InsertResult.INSERTED
        reopened.close()


class TestExport:
    def test_jsonl_round_trip(self, tmp_path):
        s = MessageStore(tmp_path / "a")
        for i in range(5):
            s.insert(make_message(minutes=i))
        out = tmp_path / "dump.jsonl"
        s.export_jsonl(out)
        s.close()
        s2 = MessageStore.import_jsonl(out, tmp_path / "b")
        assert len(s2) == 5
        s2.close()

    def test_csv_header(self, tmp_path):
        s = MessageStore(tmp_path / "a")
        s.insert(make_message())
        out = tmp_path / "dump.csv"
        s.export_csv(out)
        s.close()
        header = out.read_text().splitlines()[0]
        assert header == ",".join(RECORD_FIELDS)


_seq = st.lists(
    st.tuples(
        st.integers(0, 30),  # minute offset
        st.sampled_from(["alpha text", "beta text", "gamma text"]),
        st.sampled_from(["gw-a", "gw-b"]),
    ),
    max_size=12,
)


@settings(max_examples=60, deadline=None)
@given(_seq)
def test_double_insert_is_idempotent(tmp_path_factory, seq):
    root = tmp_path_factory.mktemp("prop") / "s"
    s = MessageStore(root)
    msgs = [make_message(text=t, minutes=m, gateway=g) for m, t, g in seq]
    for msg in msgs:
        s.insert(msg)
    state1 = (sorted(k.hex() for k in s.keys()), s.all_sightings())
    for msg in msgs:
        assert s.insert(msg) is InsertResult.DUPLICATE
    state2 = (sorted(k.hex() for k in s.keys()), s.all_sightings())
    s.close()
    assert state1 == state2
