"""E-mail traces: loading, writing and synthetic generation.

File format: one message per line, ``timestamp,sender,rcpt1;rcpt2``, where
the timestamp is ISO-8601. Lines starting with ``#`` and blank lines are
ignored.
"""

from __future__ import annotations

import csv
import io
import os
import random
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

TRACE_FORMAT = "claimchain-trace/1"


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    timestamp: datetime
    sender: str
    recipients: tuple[str, ...]

    def to_line(self) -> str:
        return f"{self.timestamp.isoformat()},{self.sender},{';'.join(self.recipients)}"


def _parse_line(lineno: int, row: list[str]) -> tuple[datetime, str, tuple[str, ...]]:
    if len(row) != 3:
        raise TraceError(f"line {lineno}: expected 3 fields, got {len(row)}")
    ts, sender, rcpts = (x.strip() for x in row)
    try:
        when = datetime.fromisoformat(ts)
    except ValueError:
        raise TraceError(f"line {lineno}: bad timestamp {ts!r}") from None
    recipients = tuple(r.strip() for r in rcpts.split(";") if r.strip())
    if not sender or not recipients:
        raise TraceError(f"line {lineno}: sender and at least one recipient required")
    return when, sender, recipients


def parse_trace(text: str) -> list[TraceEvent]:
    """Parse, sort chronologically (stable) and drop exact duplicates."""
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        rows.append(_parse_line(lineno, row))
    rows.sort(key=lambda r: r[0])
    seen = set()
    out = []
    for when, sender, recipients in rows:
        key = (when, sender, tuple(sorted(recipients)))
        if key in seen:
            continue
        seen.add(key)
        out.append(TraceEvent(len(out), when, sender, recipients))
    return out


def load_trace(path: str | os.PathLike, format: str = "csv") -> list[TraceEvent]:
    if format != "csv":
        raise TraceError(f"unknown trace format {format!r}")
    return parse_trace(Path(path).read_text(encoding="utf-8"))


def dump_trace(events: list[TraceEvent]) -> str:
    return f"# {TRACE_FORMAT}\n" + "".join(e.to_line() + "\n" for e in events)


def write_trace(events: list[TraceEvent], path: str | os.PathLike) -> None:
    Path(path).write_text(dump_trace(events), encoding="utf-8")


def mean_degree(events: list[TraceEvent]) -> float:
    """Mean number of distinct correspondents per user (undirected)."""
    contacts: dict[str, set[str]] = {}
    for e in events:
        for r in e.recipients:
            if r == e.sender:
                continue
            contacts.setdefault(e.sender, set()).add(r)
            contacts.setdefault(r, set()).add(e.sender)
    return sum(len(c) for c in contacts.values()) / len(contacts) if contacts else 0.0


_START = datetime(2001, 1, 1)
# recipient-count distribution, loosely shaped like corporate mail
_RCPT_COUNTS = (1, 2, 3, 4, 5)
_RCPT_WEIGHTS = (0.55, 0.2, 0.12, 0.08, 0.05)


def synth_trace(n_users: int, n_events: int, topology: str = "dense",
                seed: int = 0) -> list[TraceEvent]:
    """Generate a synthetic trace.

    ``dense``: a closed group where everyone keeps a sizeable contact list
    drawn from the whole group. ``sparse``: a large population with short
    contact lists grown by preferential attachment and many one-off
    strangers.
    """
    if topology not in ("dense", "sparse"):
        raise ValueError(f"unknown topology {topology!r}")
    if n_events and n_users < 2:
        raise ValueError("need at least two users")
    rng = random.Random(seed)
    users = [f"u{i:05d}" for i in range(n_users)]
    contacts: dict[str, list[str]] = {u: [] for u in users}

    def link(a: str, b: str) -> None:
        if a != b and b not in contacts[a]:
            contacts[a].append(b)
            contacts[b].append(a)

    if topology == "dense":
        # lands the mean contact degree in the mid-20s for 150 users
        lo, hi = max(1, n_users // 20), max(2, n_users // 10)
        for u in users:
            for v in rng.sample(users, min(n_users, rng.randint(lo, hi))):
                link(u, v)
        stranger_p = 0.02
    else:
        # each user appears once plus once per link
        pool = [users[0]]
        for u in users[1:]:
            for _ in range(rng.randint(1, 2)):
                v = rng.choice(pool)
                if v != u and v not in contacts[u]:
                    link(u, v)
                    pool += [u, v]
            pool.append(u)
        stranger_p = 0.3

    # heavy-tailed activity
    activity = [rng.paretovariate(1.5) for _ in users]
    when = _START
    events = []
    for seq in range(n_events):
        when += timedelta(seconds=rng.randint(1, 600))
        sender = rng.choices(users, weights=activity)[0]
        k = rng.choices(_RCPT_COUNTS, weights=_RCPT_WEIGHTS)[0]
        rcpts: list[str] = []
        for _ in range(k):
            known = [c for c in contacts[sender] if c not in rcpts]
            if known and rng.random() >= stranger_p:
                r = rng.choice(known)
            else:
                r = rng.choice(users)
            if r != sender and r not in rcpts:
                rcpts.append(r)
        if not rcpts:
            rcpts.append(users[(users.index(sender) + 1) % n_users])
        events.append(TraceEvent(seq, when, sender, tuple(rcpts)))
    return events


def window_offset(n_total: int, n_window: int, seed: int) -> int:
    """Uniform random start offset for a sub-run of ``n_window`` events."""
    return random.Random(seed).randint(0, max(0, n_total - n_window))
