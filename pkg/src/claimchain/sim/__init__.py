"""In-band key distribution simulator."""

from claimchain.sim.run import SimResult, WindowStats, run, windows_of, write_metrics
from claimchain.sim.trace import (
    TraceError,
    TraceEvent,
    dump_trace,
    load_trace,
    mean_degree,
    parse_trace,
    synth_trace,
    window_offset,
    write_trace,
)
from claimchain.sim.world import (
    MetricsRecord,
    SimConfig,
    World,
    inject_equivocator,
)

__all__ = [
    "MetricsRecord", "SimConfig", "SimResult", "TraceError", "TraceEvent", "WindowStats",
    "World", "dump_trace", "inject_equivocator", "load_trace", "mean_degree", "parse_trace",
    "run", "synth_trace", "window_offset", "windows_of", "write_metrics", "write_trace",
]
