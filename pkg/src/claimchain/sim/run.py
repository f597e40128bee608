"""Driving a simulation and summarizing its metrics."""

from __future__ import annotations

import json
import os
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path

from claimchain.crypto.rand import seeded
from claimchain.sim.trace import TraceEvent
from claimchain.sim.world import MetricsRecord, SimConfig, World

METRICS_FORMAT = "claimchain-metrics/1"
SUMMARY_FORMAT = "claimchain-summary/1"


@dataclass
class WindowStats:
    start: int
    n_events: int
    encrypted_rate: float
    diversity_mean: float
    diversity_hist: dict[int, int]
    bytes_mean: float
    bytes_max: int
    self_storage_max: int
    gossip_storage_max: int


@dataclass
class SimResult:
    config: SimConfig
    records: list[MetricsRecord]
    windows: list[WindowStats]
    world: World | None = field(default=None, repr=False)

    def summary(self) -> dict:
        n = len(self.records)
        return {
            "format": SUMMARY_FORMAT,
            "config": asdict(self.config),
            "n_events": n,
            "encrypted_rate": sum(r.encrypted for r in self.records) / n if n else 0.0,
            "final_window_encrypted_rate": self.windows[-1].encrypted_rate if self.windows else 0.0,
            "windows": [asdict(w) for w in self.windows],
            "counters": _counters(self.world),
        }


def _counters(world: World | None) -> dict:
    if world is None:
        return {}
    return {
        "quarantined": world.quarantined,
        "rejected": world.rejected,
        "conflicts": world.conflicts,
        "audits": world.audits,
        "audit_unresolved": world.audit_unresolved,
        "detections": len(world.detections),
    }


def windows_of(records: list[MetricsRecord], size: int) -> list[WindowStats]:
    out = []
    for start in range(0, len(records), size):
        chunk = records[start:start + size]
        div = [d for r in chunk for d in r.diversity.values()]
        hist: dict[int, int] = {}
        for d in div:
            hist[d] = hist.get(d, 0) + 1
        out.append(WindowStats(
            start=start,
            n_events=len(chunk),
            encrypted_rate=sum(r.encrypted for r in chunk) / len(chunk),
            diversity_mean=statistics.fmean(div) if div else 0.0,
            diversity_hist=dict(sorted(hist.items())),
            bytes_mean=statistics.fmean(r.bytes_attached for r in chunk),
            bytes_max=max(r.bytes_attached for r in chunk),
            self_storage_max=max(r.self_storage for r in chunk),
            gossip_storage_max=max(r.gossip_storage for r in chunk),
        ))
    return out


def run(trace: list[TraceEvent], config: SimConfig | None = None,
        world: World | None = None) -> SimResult:
    """Replay ``trace`` in order. All randomness is drawn from ``config.seed``."""
    config = config or (world.config if world is not None else SimConfig())
    world = world or World(config)
    records = []
    with seeded(config.seed):
        for event in trace:
            records.append(world.step(event))
    return SimResult(config, records, windows_of(records, config.window), world)


def write_metrics(result: SimResult, out_dir: str | os.PathLike) -> tuple[Path, Path]:
    """Write ``metrics.jsonl`` (one line per event) and ``summary.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics = out / "metrics.jsonl"
    with metrics.open("w", encoding="utf-8") as f:
        f.write(json.dumps({"format": METRICS_FORMAT}) + "\n")
        for r in result.records:
            f.write(json.dumps(r.to_json(), sort_keys=True) + "\n")
    summary = out / "summary.json"
    summary.write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return metrics, summary
