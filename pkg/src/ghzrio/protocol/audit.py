"""Classical bit-count audit of a transcript against a family's declared schedule."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from ..restricted import SetIndex, set_width
from .config import COMBINED_1Q, COMBINED_NQ, CONTROLLED_1Q, ProtocolConfig
from .engine import ClassicalMessage
from .families import COMBINED_ROLES, CONTROLLED_ROLES


@dataclass(frozen=True)
class ExpectedMessage:
    sender: str
    receiver: str
    tag: str
    width: int
    index_bits: Optional[int] = None  # trailing bits that encode a set index
    index_value: Optional[int] = None

    def describe(self) -> str:
        return f"{self.sender}->{self.receiver} {self.tag} ({self.width} bits)"


def expected_schedule(cfg: ProtocolConfig) -> list[ExpectedMessage]:
    """Nominal schedule; negative-control flags are ignored on purpose."""
    N, n = cfg.N, cfg.n
    if cfg.family == CONTROLLED_1Q:
        ctrl, snd, rcv = cfg.roles or CONTROLLED_ROLES
        holder = snd if cfg.variant == 1 else rcv
        return [
            ExpectedMessage(ctrl, holder, "password", 1),
            ExpectedMessage(rcv, snd, "beta", 1),
            ExpectedMessage(snd, rcv, "alpha+d", 2),
        ]
    if cfg.family == COMBINED_1Q:
        s1, s2, rcv = cfg.roles or COMBINED_ROLES
        return [
            ExpectedMessage(rcv, s1, "c", 1),
            ExpectedMessage(rcv, s2, "c", 1),
            ExpectedMessage(s1, rcv, "a+d1", 2),
            ExpectedMessage(s1, s2, "d1", 1),
            ExpectedMessage(s2, rcv, "b+d2", 2),
        ]
    w = set_width(N)
    x = cfg.op.x
    if cfg.family == COMBINED_NQ:
        y = cfg.op2.x
        return [
            ExpectedMessage("Bob", "Alice", "b", N),
            ExpectedMessage("Bob", "Charlie", "b", N),
            ExpectedMessage("Alice", "Bob", "a+x", N + w, w, x),
            ExpectedMessage("Alice", "Charlie", "x", w, w, x),
            ExpectedMessage("Charlie", "Bob", "c+y", N + w, w, y),
        ]
    out = []
    if n:
        out.append(ExpectedMessage("Charlie", "Alice" if cfg.variant == 1 else "Bob", "password", n))
    out += [
        ExpectedMessage("Bob", "Alice", "b", N),
        ExpectedMessage("Alice", "Bob", "a+x", N + w, w, x),
    ]
    return out


@dataclass(frozen=True)
class AuditLine:
    step: int
    expected: Optional[ExpectedMessage]
    actual: Optional[dict]
    ok: bool
    reason: str = ""


@dataclass
class AuditReport:
    lines: list[AuditLine] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(line.ok for line in self.lines)

    @property
    def failures(self) -> list[str]:
        return [f"step {ln.step}: {ln.reason}" for ln in self.lines if not ln.ok]

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(ln.actual["width"] for ln in self.lines if ln.actual is not None)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "messages": [
                {
                    "step": ln.step,
                    "expected": ln.expected.describe() if ln.expected else None,
                    "actual": ln.actual,
                    "ok": ln.ok,
                    "reason": ln.reason,
                }
                for ln in self.lines
            ],
        }

    def table(self) -> str:
        rows = [f"{'#':>2}  {'from':<8}{'to':<8}{'tag':<10}{'bits':>5}  {'want':>5}  status"]
        for ln in self.lines:
            a, e = ln.actual or {}, ln.expected
            rows.append(
                f"{ln.step:>2}  {a.get('from', '-'):<8}{a.get('to', '-'):<8}{a.get('tag', '-'):<10}"
                f"{a.get('width', '-')!s:>5}  {(e.width if e else '-')!s:>5}  "
                + ("ok" if ln.ok else f"FAIL {ln.reason}")
            )
        rows.append("PASS" if self.passed else "FAIL")
        return "\n".join(rows)


def _normalize(item: Union[ClassicalMessage, dict]) -> dict:
    if isinstance(item, ClassicalMessage):
        return item.to_dict()
    bits = str(item["bits"])
    return {
        "from": item["from"],
        "to": item["to"],
        "tag": item["tag"],
        "bits": bits,
        "width": int(item.get("width", len(bits))),
    }


def audit_bits(transcript: Iterable, cfg: ProtocolConfig) -> AuditReport:
    """Compare messages (in order) with ``expected_schedule(cfg)``.

    ``transcript`` may hold engine events, ``ClassicalMessage`` objects or the
    message dicts of a serialized result; non-message events are skipped.
    """
    msgs = [
        _normalize(e)
        for e in transcript
        if isinstance(e, ClassicalMessage) or (isinstance(e, dict) and "bits" in e)
    ]
    want = expected_schedule(cfg)
    report = AuditReport()
    i = j = 0
    step = 1
    while i < len(want) or j < len(msgs):
        e = want[i] if i < len(want) else None
        a = msgs[j] if j < len(msgs) else None
        if e is not None and a is not None and (a["from"], a["to"], a["tag"]) == (e.sender, e.receiver, e.tag):
            report.lines.append(_check(step, e, a))
            i += 1
            j += 1
        elif e is not None and (a is None or _matches_later(a, want[i + 1:])):
            report.lines.append(AuditLine(step, e, None, False, f"missing {e.describe()}"))
            i += 1
        else:
            report.lines.append(
                AuditLine(step, None, a, False, f"unexpected {a['from']}->{a['to']} {a['tag']}")
            )
            j += 1
        step += 1
    return report


def _matches_later(a: dict, rest: list[ExpectedMessage]) -> bool:
    return any((a["from"], a["to"], a["tag"]) == (e.sender, e.receiver, e.tag) for e in rest)


def _check(step: int, e: ExpectedMessage, a: dict) -> AuditLine:
    bits = a["bits"]
    if set(bits) - {"0", "1"}:
        return AuditLine(step, e, a, False, f"{e.tag}: payload is not a bit string")
    if len(bits) != a["width"]:
        return AuditLine(step, e, a, False, f"{e.tag}: width {a['width']} != payload length {len(bits)}")
    if a["width"] != e.width:
        return AuditLine(step, e, a, False, f"{e.tag}: {a['width']} bits, expected {e.width}")
    if e.index_bits:
        tail = [int(b) for b in bits[-e.index_bits:]]
        N = a["width"] - e.index_bits if e.tag != "x" else None
        try:
            got = _decode(tail, e.index_bits, N)
        except ValueError as exc:
            return AuditLine(step, e, a, False, f"{e.tag}: {exc}")
        if got != e.index_value:
            return AuditLine(step, e, a, False, f"{e.tag}: encodes index {got}, expected {e.index_value}")
    return AuditLine(step, e, a, True)


def _decode(bits: list[int], width: int, N: Optional[int]) -> int:
    if N is None:
        N = next(k for k in range(1, 9) if set_width(k) == width)
    return SetIndex.from_bits(bits, N).x


def load_messages(path) -> tuple[list[dict], dict]:
    """Read a stored run report and return (messages of its first branch, config echo)."""
    with open(path) as fh:
        doc = json.load(fh)
    branches = doc.get("branches") or [doc]
    return branches[0].get("messages", []), doc.get("config", {})
