"""Empirical ESN versus certified bounds along an optimization trace."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import bounds
from .base_dist import StandardizedBase
from .estimators import empirical_esn
from .optimizer import TraceRecord
from .smoothness import SmoothnessSpec, derive
from .targets import component_stationary_points, find_map

DIAG_SAMPLERS = ("batch",) + bounds.SAMPLER_LABELS
DIAG_COLUMNS = (
    "iteration",
    "sampler",
    "esn_empirical",
    "esn_se",
    "bound_scalar",
    "bound_matrix",
    "bound_friendly",
    "var_lower_bound",
)
COMPARE_COLUMNS = ("sampler", "esn_empirical", "esn_se", "bound_scalar", "bound_matrix")
DIAG_STREAM = 3


@dataclass
class DiagnosticContext:
    """Per-target quantities shared by every snapshot."""

    target: object
    base: StandardizedBase
    spec: SmoothnessSpec
    zbar: np.ndarray
    zbars: np.ndarray | None

    @classmethod
    def build(cls, target, base, samplers):
        for s in samplers:
            if s not in DIAG_SAMPLERS:
                raise ValueError(f"unknown sampler {s!r}; expected one of {DIAG_SAMPLERS}")
        needs_components = any(s != "batch" for s in samplers)
        zbars = component_stationary_points(target) if needs_components else None
        return cls(target, base, derive(target), find_map(target), zbars)

    def sampler(self, label, w):
        if label == "batch":
            return None
        return bounds.make_sampler(label, self.spec, self.zbars, w, self.base.kurtosis)

    def bound_row(self, label, w, pi):
        kappa = self.base.kurtosis
        spec = self.spec
        if pi is None:
            return {
                "bound_scalar": bounds.esn_bound_scalar(spec.full_scalar, w, self.zbar, kappa),
                "bound_matrix": bounds.esn_bound_matrix(spec.full_matrix, w, self.zbar, kappa),
                "bound_friendly": bounds.esn_bound_friendly(spec.full_scalar, w, self.zbar, kappa),
                "var_lower_bound": bounds.variance_lower_bound_matrix(spec.full_matrix, w, self.zbar, kappa),
            }
        return {
            "bound_scalar": bounds.esn_bound_subsampled(spec, self.zbars, pi, w, kappa, "scalar"),
            "bound_matrix": bounds.esn_bound_subsampled(spec, self.zbars, pi, w, kappa, "matrix"),
            "bound_friendly": bounds.esn_bound_subsampled_friendly(spec, self.zbars, pi, w, kappa),
            "var_lower_bound": bounds.variance_lower_bound(spec, self.zbars, pi, w, kappa),
        }


def diagnose(
    target,
    base: StandardizedBase,
    records: list[TraceRecord],
    samplers=("batch", "uniform"),
    mc_samples: int = 10_000,
    seed: int = 0,
    workers: int = 1,
    ctx: DiagnosticContext | None = None,
) -> list[dict]:
    """One row per (snapshot, sampler) with empirical ESN and all bounds."""
    ctx = DiagnosticContext.build(target, base, samplers) if ctx is None else ctx
    rows = []
    for rec in records:
        for label in samplers:
            pi = ctx.sampler(label, rec.w)
            # common random numbers across samplers at a snapshot
            key = (DIAG_STREAM, rec.iteration)
            est = empirical_esn(target, rec.w, base, pi, mc_samples, seed, key=key, workers=workers)
            row = {
                "iteration": rec.iteration,
                "sampler": label,
                "esn_empirical": est.esn_mean,
                "esn_se": est.esn_se,
            }
            row.update(ctx.bound_row(label, rec.w, pi))
            rows.append(row)
    return rows


def compare_samplers(target, base, records, samplers=DIAG_SAMPLERS, mc_samples=10_000, seed=0, workers=1):
    """Final-snapshot table of empirical ESN and bounds per sampler."""
    rows = diagnose(target, base, records[-1:], samplers, mc_samples, seed, workers)
    return [{k: row[k] for k in COMPARE_COLUMNS} for row in rows]


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_rows(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
