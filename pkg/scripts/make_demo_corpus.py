"""Generate the committed 10,000-message demo corpus.

Three gateways, 120 DPNs, multilingual template traffic with OTPs and
links, plus a slice of cross-gateway duplicates (the same message visible
on two gateways) to exercise dedup and the overlap report. Seeded, so the
output is reproducible byte for byte.

Run from the repository root:

    python3 scripts/make_demo_corpus.py
"""

from __future__ import annotations

import random
import sys
from collections import defaultdict
from datetime import datetime, timedelta, timezone
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from gatewatch.messages import (  # noqa: E402
    Dpn,
    Message,
    Resolution,
    RxTimestamp,
    SenderKind,
    SenderRef,
)
from gatewatch.store import encode_record  # noqa: E402

OUT = ROOT / "tests" / "data" / "demo_fixtures"
SEED = 424242
TOTAL = 10_000
DUPLICATE_SHARE = 0.08  # of messages also visible on a second gateway

GATEWAYS = ["gw-alpha", "gw-beta", "gw-gamma"]

SERVICES = [
    ("Uber", "Uber"), ("Telegram", "Telegram"), ("WhatsApp", "WhatsApp"),
    ("PayPal", "PayPal"), ("Amazon", "Amazon"), ("Netflix", "Netflix"),
    ("Google", "Google"), ("Facebook", "Facebook"), ("Instagram", "Instagram"),
    ("TikTok", "TikTok"), ("Tinder", "Tinder"), ("Paytm", "Paytm"),
]

TEMPLATES = [
    "Your {svc} verification code is {code}.",
    "{code} is your {svc} code. Do not share it.",
    "{svc} security code: {code}. It expires in {mins} minutes.",
    "Welcome to {svc}! Your account is ready.",
    "New login to your {svc} account from a new device.",
    "Your {svc} password was changed successfully.",
    "Reset your {svc} password with code {code}.",
    "Tu codigo de verificacion de {svc} es {code}.",
    "Seu codigo de verificacao do {svc} e {code}.",
    "Votre code {svc} est {code}. Ne le partagez pas.",
    "Kode verifikasi {svc} Anda adalah {code}.",
    "Click to verify your {svc} account: https://sgn.example/v/{token}",
]

COUNTRY_PREFIXES = ["+1555", "+44770", "+4917", "+3361", "+6281", "+9198"]


def main() -> None:
    rng = random.Random(SEED)
    dpns = []
    for i in range(120):
        prefix = COUNTRY_PREFIXES[i % len(COUNTRY_PREFIXES)]
        dpns.append(f"{prefix}{2000000 + i:07d}")

    base = datetime(2025, 9, 1, tzinfo=timezone.utc)
    fetched = base + timedelta(days=60)
    per_file: dict[tuple[str, str], list[str]] = defaultdict(list)

    for i in range(TOTAL):
        e164 = rng.choice(dpns)
        svc, gram = rng.choice(SERVICES)
        template = rng.choice(TEMPLATES)
        token = "".join(
            rng.choice("abcdefghjkmnpqrstuvwxyz0123456789") for _ in range(10)
        )
        text = template.format(
            svc=gram, code=rng.randint(1000, 999999),
            mins=rng.randint(5, 30), token=token,
        )
        when = base + timedelta(
            days=rng.randint(0, 44), seconds=rng.randint(0, 86399)
        )
        gateway = rng.choice(GATEWAYS)
        msg = Message(
            receiver=Dpn.from_e164(e164),
            sender=rng.choice(
                [
                    SenderRef(SenderKind.SHORT_CODE, "32665"),
                    SenderRef(SenderKind.SHORT_CODE, "77777"),
                    SenderRef(SenderKind.SENDER_ID, "VERIFY"),
                    SenderRef(SenderKind.SENDER_ID, "INFOSMS"),
                ]
            ),
            received=RxTimestamp(when, Resolution.MINUTE),
            content=text,
            gateway_id=gateway,
            fetched_at=fetched,
        )
        per_file[(gateway, e164)].append(encode_record(msg))
        if rng.random() < DUPLICATE_SHARE:
            other = rng.choice([g for g in GATEWAYS if g != gateway])
            dup = Message(
                receiver=msg.receiver, sender=msg.sender, received=msg.received,
                content=msg.content, gateway_id=other,
                fetched_at=fetched + timedelta(hours=1),
            )
            per_file[(other, e164)].append(encode_record(dup))

    n = 0
    for (gateway, e164), lines in sorted(per_file.items()):
        path = OUT / gateway / f"{e164}.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        n += len(lines)
    print(f"wrote {n} records ({TOTAL} unique) to {OUT}")


if __name__ == "__main__":
    main()
