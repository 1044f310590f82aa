"""Trace file format.

UTF-8 text. ``#key=value`` header lines, then one CSV column-name line,
then one row per snapshot::

    iteration,elbo_mean,elbo_se,d,m0..m{d-1},C0_0..C{d-1}_{d-1}

Floats are written with ``repr`` so they round-trip exactly.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

from .locscale import Params
from .optimizer import TraceRecord


class TraceFormatError(ValueError):
    pass


def _column_names(d):
    return (
        ["iteration", "elbo_mean", "elbo_se", "d"]
        + [f"m{i}" for i in range(d)]
        + [f"C{i}_{j}" for i in range(d) for j in range(d)]
    )


def format_trace(header: dict, records: list[TraceRecord]) -> str:
    buf = io.StringIO()
    for key, value in header.items():
        if "\n" in str(value) or "=" in str(key):
            raise ValueError(f"header entry {key!r} cannot be serialized")
        buf.write(f"#{key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    d = records[0].w.d if records else 0
    writer.writerow(_column_names(d))
    for rec in records:
        flat = rec.w.flatten()
        writer.writerow(
            [str(rec.iteration), repr(float(rec.elbo_mean)), repr(float(rec.elbo_se)), str(int(flat[0]))]
            + [repr(v) for v in flat[1:]]
        )
    return buf.getvalue()


def write_trace(path, header: dict, records: list[TraceRecord]) -> None:
    Path(path).write_text(format_trace(header, records), encoding="utf-8")


def read_trace(path) -> tuple[dict, list[TraceRecord]]:
    header, records = {}, []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body_start = 0
    for body_start, line in enumerate(lines):
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].partition("=")
        if not sep:
            raise TraceFormatError(f"line {body_start + 1}: header line without '='")
        header[key] = value
    else:
        body_start = len(lines)
    body = lines[body_start:]
    if not body or not body[0].startswith("iteration,"):
        raise TraceFormatError(f"{path}: missing column header")
    last_it = None
    for offset, row in enumerate(csv.reader(body[1:]), start=body_start + 2):
        if not row:
            continue
        try:
            it = int(row[0])
            w = Params.unflatten(row[3:])
            rec = TraceRecord(it, w, float(row[1]), float(row[2]))
        except (ValueError, IndexError) as exc:
            raise TraceFormatError(f"line {offset}: {exc}") from None
        if last_it is not None and it <= last_it:
            raise TraceFormatError(f"line {offset}: iterations must increase")
        last_it = it
        records.append(rec)
    if not records:
        raise TraceFormatError(f"{path}: no snapshots")
    return header, records
