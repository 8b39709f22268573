"""CSV and aligned-text emitters for simulation summaries."""
from __future__ import annotations

import csv
import io
import math

from .simlab import SimSummary


def _fmt(value, digits=3):
    if value is None:
        return "NA"
    if isinstance(value, float) and math.isnan(value):
        return "NA"
    return f"{value:.{digits}f}"


def _sd(value):
    return "<0.01" if value is not None and 0 <= value < 0.005 else _fmt(value, 2)


def summaries_to_csv(summaries, path_or_buffer=None) -> str:
    """Write one row per (scenario, estimator); returns the CSV text."""
    rows = [r for s in summaries for r in s.records()]
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in r.items()})
    text = buf.getvalue()
    if path_or_buffer is not None:
        if hasattr(path_or_buffer, "write"):
            path_or_buffer.write(text)
        else:
            with open(path_or_buffer, "w", newline="") as fh:
                fh.write(text)
    return text


def _align(header, rows):
    table = [header] + rows
    widths = [max(len(str(r[i])) for r in table) for i in range(len(header))]
    lines = []
    for j, r in enumerate(table):
        cells = [str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(r, widths))]
        lines.append("  ".join(cells).rstrip())
        if j == 0:
            lines.append("-" * len(lines[0]))
    return lines


def summaries_to_text(summaries) -> str:
    """Aligned table grouped by generation/analysis section.

    Columns: type, true value, percent bias (SD), bootstrap and influence
    coverage, and for additional estimators their percent bias (SD).
    """
    summaries = list(summaries)
    if not summaries:
        return ""
    extra = []
    for s in summaries:
        for name in s.spec.estimators[1:]:
            if name not in extra:
                extra.append(name)
    header = ["type", "n", "true value", "percent bias (SD)", "coverage boot", "coverage IF",
              "mean IF se", "mean EIF se"] + [f"{e}: percent bias (SD)" for e in extra] + ["failures"]
    out = []
    section = None
    rows = []

    def flush():
        if rows:
            out.extend(_align(header, rows))
            out.append("")

    for s in summaries:
        if s.spec.section != section:
            flush()
            rows = []
            section = s.spec.section
            out.append(section)
        p = s.primary
        row = [s.label, s.spec.n, _fmt(s.truth.value, 2), f"{_fmt(p.percent_bias, 1)} ({_sd(p.sd)})",
               _fmt(p.coverage_boot, 1), _fmt(p.coverage_if, 1), _fmt(p.mean_if_se, 3),
               _fmt(p.mean_eif_se, 3)]
        for name in extra:
            e = s.estimators.get(name)
            row.append("NA" if e is None else f"{_fmt(e.percent_bias, 1)} ({_fmt(e.sd, 3)})")
        row.append(s.failures)
        rows.append(row)
    flush()
    return "\n".join(out)


def efficiency_to_text(rows) -> str:
    header = ["dgp", "n", "type", "SD IPTW-GLM", "SD AIPW"]
    body = [[r.dgp, r.n, r.cell, _fmt(r.sd_iptw_glm), _fmt(r.sd_aipw)] for r in rows]
    return "\n".join(_align(header, body))


def se_comparison_to_text(rows) -> str:
    header = ["dgp", "type", "emp.se", "eif.se", "infl.se"]
    body = [[r.dgp, r.cell, _fmt(r.empirical_sd), _fmt(r.mean_eif_se), _fmt(r.mean_if_se)] for r in rows]
    return "\n".join(_align(header, body))


def summary_lines(s: SimSummary) -> str:
    return summaries_to_text([s])
