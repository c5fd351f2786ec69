"""Append-only JSONL message store with composite-key dedup.

Layout under the store directory:

    segments/000001.jsonl   message records, one per unique MessageKey
    sightings.jsonl         one record per (key, gateway) first sighting
    index.json              convenience snapshot of keys + sightings

Segments and the sightings log are append-only; ``index.json`` is a cache
rewritten on flush and always rebuildable by scanning the segments.
Single-writer / multi-reader: readers iterate a consistent snapshot of the
segment files.
"""

from __future__ import annotations

import csv
import json
import os
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterator

from gatewatch.messages import (
    Dpn,
    Message,
    MessageKey,
    Resolution,
    SenderKind,
    SenderRef,
    message_key,
)

SEGMENT_RECORDS = 10_000

RECORD_FIELDS = (
    "receiver",
    "sender_kind",
    "sender",
    "received",
    "resolution",
    "content",
    "gateway",
    "fetched_at",
)


class InsertResult(str, Enum):
    INSERTED = "inserted"
    DUPLICATE = "duplicate"


class StoreError(RuntimeError):
    """Recoverable storage failure; the store is left without partial records."""


def encode_record(msg: Message) -> str:
    rec = {
        "receiver": msg.receiver.e164,
        "sender_kind": msg.sender.kind.value,
        "sender": msg.sender.value,
        "received": msg.received.instant.isoformat(),
        "resolution": msg.received.resolution.value,
        "content": msg.content,
        "gateway": msg.gateway_id,
        "fetched_at": msg.fetched_at.isoformat(),
    }
    return json.dumps(rec, ensure_ascii=False)


def decode_record(line: str) -> Message:
    rec = json.loads(line)
    from gatewatch.messages import RxTimestamp

    return Message(
        receiver=Dpn.from_e164(rec["receiver"]),
        sender=SenderRef(SenderKind(rec["sender_kind"]), rec["sender"]),
        received=RxTimestamp(
            instant=datetime.fromisoformat(rec["received"]),
            resolution=Resolution(rec["resolution"]),
        ),
        content=rec["content"],
        gateway_id=rec["gateway"],
        fetched_at=datetime.fromisoformat(rec["fetched_at"]),
    )


class MessageStore:
    def __init__(self, root: str | Path, writable: bool = True):
        self.root = Path(root)
        self.segments_dir = self.root / "segments"
        self.segments_dir.mkdir(parents=True, exist_ok=True)
        self.writable = writable
        self._keys: dict[MessageKey, None] = {}
        self._sightings: dict[str, set[str]] = {}
        self._fh = None
        self._records_in_segment = 0
        self._load()

    # -- loading ----------------------------------------------------------

    def _segment_paths(self) -> list[Path]:
        return sorted(self.segments_dir.glob("*.jsonl"))

    def _load(self) -> None:
        for path in self._segment_paths():
            with path.open(encoding="utf-8") as fh:
                n = 0
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    msg = decode_record(line)
                    self._keys[message_key(msg)] = None
                    n += 1
            self._records_in_segment = n
        sightings = self.root / "sightings.jsonl"
        if sightings.exists():
            with sightings.open(encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    self._sightings.setdefault(rec["key"], set()).add(rec["gateway"])

    # -- writing ----------------------------------------------------------

    def _open_segment_for_append(self):
        paths = self._segment_paths()
        if not paths or self._records_in_segment >= SEGMENT_RECORDS:
            seq = len(paths) + 1
            path = self.segments_dir / f"{seq:06d}.jsonl"
            self._records_in_segment = 0
        else:
            path = paths[-1]
        if self._fh is None or Path(self._fh.name) != path:
            if self._fh:
                self._fh.close()
            self._fh = path.open("a", encoding="utf-8")
        return self._fh

    def _append_line(self, fh, line: str) -> None:
        pos = fh.tell()
        try:
            fh.write(line + "\n")
            fh.flush()
        except OSError as exc:
            fh.seek(pos)
            fh.truncate(pos)
            raise StoreError(str(exc)) from exc

    def insert(self, msg: Message) -> InsertResult:
        if not self.writable:
            raise StoreError("store opened read-only")
        key = message_key(msg)
        khex = key.hex()
        result = InsertResult.DUPLICATE
        if key not in self._keys:
            fh = self._open_segment_for_append()
            self._append_line(fh, encode_record(msg))
            self._keys[key] = None
            self._records_in_segment += 1
            result = InsertResult.INSERTED
        seen = self._sightings.setdefault(khex, set())
        if msg.gateway_id not in seen:
            with (self.root / "sightings.jsonl").open("a", encoding="utf-8") as fh:
                self._append_line(
                    fh, json.dumps({"key": khex, "gateway": msg.gateway_id})
                )
            seen.add(msg.gateway_id)
        return result

    def flush(self) -> None:
        if self._fh:
            self._fh.flush()
        index = {
            "count": len(self._keys),
            "sightings": {k: sorted(v) for k, v in sorted(self._sightings.items())},
        }
        tmp = self.root / "index.json.tmp"
        tmp.write_text(json.dumps(index, indent=1, sort_keys=True), encoding="utf-8")
        os.replace(tmp, self.root / "index.json")

    def close(self) -> None:
        self.flush()
        if self._fh:
            self._fh.close()
            self._fh = None

    # -- reading ----------------------------------------------------------

    def __len__(self) -> int:
        return len(self._keys)

    def __iter__(self) -> Iterator[Message]:
        for path in self._segment_paths():
            with path.open(encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        yield decode_record(line)

    def keys(self) -> list[MessageKey]:
        return list(self._keys)

    def sightings(self, key: MessageKey | str) -> set[str]:
        khex = key if isinstance(key, str) else key.hex()
        return set(self._sightings.get(khex, set()))

    def all_sightings(self) -> dict[str, set[str]]:
        return {k: set(v) for k, v in self._sightings.items()}

    # -- export / import --------------------------------------------------

    def export_jsonl(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as out:
            for msg in self:
                out.write(encode_record(msg) + "\n")

    def export_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as out:
            writer = csv.writer(out)
            writer.writerow(RECORD_FIELDS)
            for msg in self:
                writer.writerow(
                    [
                        msg.receiver.e164,
                        msg.sender.kind.value,
                        msg.sender.value,
                        msg.received.instant.isoformat(),
                        msg.received.resolution.value,
                        msg.content,
                        msg.gateway_id,
                        msg.fetched_at.isoformat(),
                    ]
                )

    @classmethod
    def import_jsonl(cls, path: str | Path, root: str | Path) -> "MessageStore":
        store = cls(root)
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    store.insert(decode_record(line))
        store.flush()
        return store
