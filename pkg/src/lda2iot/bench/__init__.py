"""Bit accounting, primitive timing, round-trip delay and throughput."""
from .accounting import REFERENCE_BITS, CostReport, MessageCost, SizeModel, count_bits
from .network import (
    REFERENCE_RTD_S,
    REFERENCE_THROUGHPUT_BPS,
    RTDReport,
    ThroughputReport,
    measure_rtd,
    measure_throughput,
    throughput_formula,
)
from .report import render_bits, render_rtd, render_throughput, render_timing, to_json, to_record
from .timing import (
    REFERENCE_OPS,
    REFERENCE_TOTAL_MS,
    Stat,
    TimingReport,
    instrumented_op_counts,
    time_primitives,
)
