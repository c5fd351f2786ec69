import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from gatewatch.messages import (
    Dpn,
    Message,
    Resolution,
    RxTimestamp,
    SenderKind,
    SenderRef,
)

DATA = Path(__file__).parent / "data"

BASE_TIME = datetime(2025, 6, 1, 12, 0, tzinfo=timezone.utc)


def make_message(
    text: str = "Your code is 12345.",
    e164: str = "+15551230001",
    gateway: str = "gw-test",
    minutes: int = 0,
    sender: str = "32665",
    fetched_offset_h: int = 24,
) -> Message:
    when = BASE_TIME + timedelta(minutes=minutes)
    return Message(
        receiver=Dpn.from_e164(e164),
        sender=SenderRef(SenderKind.SHORT_CODE, sender),
        received=RxTimestamp(when, Resolution.MINUTE),
        content=text,
        gateway_id=gateway,
        fetched_at=when + timedelta(hours=fetched_offset_h),
    )


def read_jsonl(path: Path) -> list[dict]:
    return [
        json.loads(line)
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


@pytest.fixture
def store(tmp_path):
    from gatewatch.store import MessageStore

    s = MessageStore(tmp_path / "store")
    yield s
    s.close()
