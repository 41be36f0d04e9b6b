"""Text tables and machine-readable records for bench results."""
from __future__ import annotations

import dataclasses
import json

from .accounting import ENTITIES, REFERENCE_BITS, CostReport
from .network import REFERENCE_RTD_S, REFERENCE_THROUGHPUT_BPS, RTDReport, ThroughputReport
from .timing import REFERENCE_DEVICE_SECONDS, REFERENCE_OPS, REFERENCE_TOTAL_MS, TimingReport


def _table(header: list[str], rows: list[list]) -> str:
    cells = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    line = lambda r: "  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths)))
    return "\n".join([line(cells[0]), "  ".join("-" * w for w in widths)] + [line(r) for r in cells[1:]])


def render_bits(rep: CostReport, baseline: bool = True) -> str:
    rows = [["measured (" + rep.policy + ")"] + [rep.per_entity[e] for e in ENTITIES] + [rep.total]]
    if baseline:
        rows.append(["reference"] + [REFERENCE_BITS[e] for e in ENTITIES] + [REFERENCE_BITS["total"]])
    out = [_table(["bits", *ENTITIES, "total"], rows), "",
           _table(["#", "message", "sender", "bits"], [[m.index, m.kind, m.sender, m.bits] for m in rep.messages])]
    out.append(f"\naccounting identity (total = entities = messages): {'holds' if rep.consistent() else 'BROKEN'}")
    return "\n".join(out)


def render_timing(rep: TimingReport, baseline: bool = True) -> str:
    ms = lambda s: f"{s * 1e3:.4f}"
    prim = _table(["primitive", "mean ms", "stdev ms", "trials"],
                  [[k, ms(v.mean), ms(v.stdev), v.trials] for k, v in rep.stats.items()])
    formula = rep.formula_totals()
    rows = []
    for who in ENTITIES:
        h, e = REFERENCE_OPS[who]
        c = rep.op_counts.get(who, {})
        rows.append([who, f"{h}*T_h + {e}*T_e", f"{c.get('hash', '-')}*T_h + {c.get('enc', 0) + c.get('dec', 0)}*T_e",
                     ms(formula[who])])
    parts = [f"profile: {rep.profile}", prim, "",
             _table(["party", "reference ops", "counted ops", "host ms (reference ops)"], rows)]
    total = sum(formula.values())
    parts.append(f"\nhost total under reference ops: {total * 1e3:.3f} ms")
    if rep.op_counts:
        parts.append(f"host total under counted ops:   {sum(rep.measured_totals().values()) * 1e3:.3f} ms")
    if baseline:
        parts.append(f"reference total: {REFERENCE_TOTAL_MS} ms")
        parts.append(_table(["reference device", "T_E/T_D s", "T_h s", "T_P s"],
                            [[d, v["T_E/T_D"], v["T_h"], v["T_P"]] for d, v in REFERENCE_DEVICE_SECONDS.items()]))
    return "\n".join(parts)


def render_rtd(rep: RTDReport, baseline: bool = True) -> str:
    rows = [["user", f"{rep.user_mean:.6f}"], ["sensor", f"{rep.sensor_mean:.6f}"]]
    if baseline:
        rows[0].append(REFERENCE_RTD_S["user"])
        rows[1].append(REFERENCE_RTD_S["sensor"])
    head = ["party", "mean RTD s"] + (["reference s"] if baseline else [])
    return "\n".join([
        f"runs: {rep.runs}",
        _table(head, rows),
        f"gateway verification, allowed: {rep.verify_allowed_mean / 1e3:.1f} us",
        f"gateway verification, denied:  {rep.verify_denied_mean / 1e3:.1f} us",
    ])


def render_throughput(rep: ThroughputReport, baseline: bool = True) -> str:
    keys = [*ENTITIES, "total"]
    rows = [[k, f"{rep.bits_per_s[k]:.2f}", f"{rep.packets_per_s[k]:.2f}"] for k in keys]
    out = [f"duration: {rep.duration_s:.6f} s", _table(["entity", "bits/s", "packets/s"], rows)]
    if baseline:
        out.append("reference bits/s: " + ", ".join(f"{k} {v}" for k, v in REFERENCE_THROUGHPUT_BPS.items()))
    return "\n".join(out)


def to_record(rep) -> dict:
    """Plain dict suitable for JSON output."""
    d = dataclasses.asdict(rep)
    if isinstance(rep, CostReport):
        d["total"] = rep.total
        d["consistent"] = rep.consistent()
    if isinstance(rep, TimingReport):
        d["formula_totals_s"] = rep.formula_totals()
        d["measured_totals_s"] = rep.measured_totals()
    if isinstance(rep, RTDReport):
        d.update(user_mean_s=rep.user_mean, sensor_mean_s=rep.sensor_mean,
                 verify_allowed_mean_ns=rep.verify_allowed_mean, verify_denied_mean_ns=rep.verify_denied_mean)
    return d


def to_json(rep) -> str:
    return json.dumps(to_record(rep), indent=2, sort_keys=True, default=str)
