"""Seeded count-data generation for phase scans.

Every (scan, chi point, repetition) triple draws from its own counter-based
substream: a Philox generator keyed on (master seed, stream kind, scan index,
point index, repetition). Records therefore do not depend on generation
order, so scans could be produced in parallel without changing a single
count, and any record can be regenerated in isolation.

The Poisson sampler itself is pinned rather than delegated to the library:
inverse-CDF search below mean 30 and Hormann's transformed rejection with
squeeze (PTRS, 1993) above. Identical seeds give identical counts regardless
of platform or numpy release.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .apparatus import ApparatusModel, ScanPlan, predicted_rate
from .errors import CsvFormatError, DomainError
from .states import Setting

_U64_MAX = 2**64 - 1

# Stream kinds keep count draws and drift draws from ever sharing a substream.
_STREAM_COUNTS = 0
_STREAM_DRIFT = 1
_STREAM_AUX = 2

CSV_HEADER = "alpha_rad,chi_rad,repetition,counts"

DEFAULT_ALPHAS = (0.0, math.pi / 2.0, math.pi, 3.0 * math.pi / 2.0)
DEFAULT_CHI_POINTS = 32
DEFAULT_REPETITIONS = 16


def check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise DomainError(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) <= _U64_MAX:
        raise DomainError(f"seed must fit in an unsigned 64-bit value, got {seed!r}")
    return int(seed)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one (kind, scan, point, repetition) key."""
    entropy = [check_seed(seed), *[int(k) for k in key]]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def poisson(rng: np.random.Generator, mean: float, size: int | None = None):
    """Poisson draw(s) with a fixed, documented algorithm.

    Returns a plain int when ``size`` is None, else an int64 array. Uniforms
    are consumed in a deterministic order, so equal streams and arguments
    give equal output.
    """
    mean = float(mean)
    if not math.isfinite(mean) or mean < 0.0:
        raise DomainError(f"Poisson mean must be finite and non-negative, got {mean!r}")
    n = 1 if size is None else int(size)
    if n < 0:
        raise DomainError(f"size must be non-negative, got {size!r}")
    if mean == 0.0:
        out = np.zeros(n, dtype=np.int64)
    elif mean < 30.0:
        out = _poisson_inverse(rng, mean, n)
    else:
        out = _poisson_ptrs(rng, mean, n)
    if size is None:
        return int(out[0])
    return out


def _poisson_inverse(rng: np.random.Generator, mean: float, n: int) -> np.ndarray:
    # Sequential CDF search, one uniform per draw.
    u = rng.random(n)
    k = np.zeros(n, dtype=np.int64)
    pmf = np.full(n, math.exp(-mean))
    cdf = pmf.copy()
    # The cap only guards against u falling in the float-rounding tail gap.
    cap = int(mean + 60.0 * math.sqrt(mean) + 60.0)
    while True:
        active = u >= cdf
        if not active.any() or k.max() >= cap:
            break
        k[active] += 1
        pmf[active] *= mean / k[active]
        cdf[active] += pmf[active]
    return k


def _poisson_ptrs(rng: np.random.Generator, mean: float, n: int) -> np.ndarray:
    # Transformed rejection with squeeze; valid for mean >= 10.
    log_mean = math.log(mean)
    b = 0.931 + 2.53 * math.sqrt(mean)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)

    out = np.empty(n, dtype=np.int64)
    pending = np.arange(n)
    while pending.size:
        m = pending.size
        u = rng.random(m) - 0.5
        v = rng.random(m)
        us = 0.5 - np.abs(u)
        k = np.floor((2.0 * a / us + b) * u + mean + 0.43).astype(np.int64)

        accept = (us >= 0.07) & (v <= v_r)
        reject = (k < 0) | ((us < 0.013) & (v > us))
        undecided = ~(accept | reject)
        if undecided.any():
            ku = k[undecided]
            lgam = np.array([math.lgamma(x + 1.0) for x in ku])
            lhs = np.log(v[undecided]) + math.log(inv_alpha) - np.log(a / (us[undecided] ** 2) + b)
            rhs = -mean + ku * log_mean - lgam
            slow = np.zeros(m, dtype=bool)
            slow[undecided] = lhs <= rhs
            accept |= slow
        out[pending[accept]] = k[accept]
        pending = pending[~accept]
    return out


def _standard_normal(rng: np.random.Generator) -> float:
    # Box-Muller, pinned for the same reproducibility reason as the Poisson path.
    u1 = rng.random()
    u2 = rng.random()
    return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class CountRecord:
    """One exposure at one scan point. ``counts`` is an integer for sampled
    data; noiseless reference scans carry the real-valued expected rate."""

    alpha: float
    chi: float
    repetition: int
    counts: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.chi)):
            raise DomainError("record angles must be finite")
        if not isinstance(self.repetition, int) or self.repetition < 0:
            raise DomainError(f"repetition index must be a non-negative integer, got {self.repetition!r}")
        if not math.isfinite(self.counts) or self.counts < 0:
            raise DomainError(f"counts must be non-negative, got {self.counts!r}")


@dataclass(frozen=True)
class ScanResult:
    """All records of one scan plan plus the seed that produced them (None
    for scans imported from CSV, whose seed is not part of the schema)."""

    plan: ScanPlan
    records: tuple[CountRecord, ...]
    seed: Optional[int] = None

    def __post_init__(self):
        expected = len(self.plan.chi_values) * self.plan.exposures
        if len(self.records) != expected:
            raise DomainError(
                f"scan holds {len(self.records)} records, plan requires {expected}"
            )

    def counts_array(self) -> np.ndarray:
        return np.array([r.counts for r in self.records], dtype=float)

    def chi_array(self) -> np.ndarray:
        return np.array([r.chi for r in self.records], dtype=float)


def sample_scan(model: ApparatusModel, plan: ScanPlan, seed: int, scan_index: int = 0) -> ScanResult:
    """Draw Poisson counts for every (chi, repetition) pair of one scan.

    ``scan_index`` distinguishes substreams when several scans share a master
    seed (see :func:`sample_full_experiment`). With ``model.drift_sigma`` > 0
    each repetition gets its own Gaussian fringe phase offset, drawn from a
    dedicated substream so count streams are unaffected.
    """
    check_seed(seed)
    records = []
    for rep in range(plan.exposures):
        drift = 0.0
        if model.drift_sigma > 0.0:
            drift_rng = substream(seed, _STREAM_DRIFT, scan_index, rep)
            drift = model.drift_sigma * _standard_normal(drift_rng)
        for ci, chi in enumerate(plan.chi_values):
            lam = predicted_rate(model, Setting(plan.alpha, chi + drift))
            rng = substream(seed, _STREAM_COUNTS, scan_index, ci, rep)
            counts = poisson(rng, lam)
            records.append(CountRecord(plan.alpha, chi, rep, counts))
    return ScanResult(plan=plan, records=tuple(records), seed=seed)


def sample_full_experiment(
    model: ApparatusModel,
    alphas: Sequence[float],
    chi_values: Sequence[float],
    exposures: int,
    seed: int,
) -> list[ScanResult]:
    """One sampled scan per spin-analyzer angle, all from one master seed."""
    if len(alphas) == 0:
        raise DomainError("need at least one alpha")
    plans = [ScanPlan(alpha=a, chi_values=tuple(chi_values), exposures=exposures) for a in alphas]
    return [sample_scan(model, plan, seed, scan_index=i) for i, plan in enumerate(plans)]


def noiseless_scan(model: ApparatusModel, plan: ScanPlan) -> ScanResult:
    """Scan whose counts are the exact expected rates (no sampling)."""
    records = []
    for rep in range(plan.exposures):
        for chi in plan.chi_values:
            lam = predicted_rate(model, Setting(plan.alpha, chi))
            records.append(CountRecord(plan.alpha, chi, rep, lam))
    return ScanResult(plan=plan, records=tuple(records), seed=None)


def split_repetitions(scan: ScanResult) -> list[ScanResult]:
    """Break a multi-exposure scan into single-exposure scans, one per
    repetition, preserving the original repetition indices."""
    by_rep: dict[int, list[CountRecord]] = {}
    for rec in scan.records:
        by_rep.setdefault(rec.repetition, []).append(rec)
    plan = ScanPlan(alpha=scan.plan.alpha, chi_values=scan.plan.chi_values, exposures=1)
    return [
        ScanResult(plan=plan, records=tuple(by_rep[rep]), seed=scan.seed)
        for rep in sorted(by_rep)
    ]


def _format_count(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return format(float(value), ".17g")


def write_scan_csv(scan: ScanResult, path) -> None:
    """Serialize a scan with the fixed four-column schema. Floats carry 17
    significant digits so re-imports are bit-exact."""
    lines = [CSV_HEADER]
    for rec in scan.records:
        lines.append(
            f"{format(rec.alpha, '.17g')},{format(rec.chi, '.17g')},{rec.repetition},{_format_count(rec.counts)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_scan_csv(path) -> ScanResult:
    """Parse a scan CSV, validating the header, field values, and that the
    records form a complete single-alpha scan grid."""
    text = Path(path).read_text(encoding="ascii")
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise CsvFormatError(f"expected header {CSV_HEADER!r}", line_number=1)
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise CsvFormatError(f"expected 4 fields, got {len(parts)}", line_number=lineno)
        try:
            alpha = float(parts[0])
            chi = float(parts[1])
            rep = int(parts[2])
            counts = float(parts[3])
        except ValueError as exc:
            raise CsvFormatError(str(exc), line_number=lineno) from None
        if counts < 0:
            raise CsvFormatError(f"negative counts {parts[3]}", line_number=lineno)
        if rep < 0:
            raise CsvFormatError(f"negative repetition index {parts[2]}", line_number=lineno)
        if counts.is_integer():
            counts = int(counts)
        try:
            records.append(CountRecord(alpha, chi, rep, counts))
        except DomainError as exc:
            raise CsvFormatError(str(exc), line_number=lineno) from None
    if not records:
        raise CsvFormatError("no data rows")

    alphas = {format(r.alpha, ".17g") for r in records}
    if len(alphas) != 1:
        raise CsvFormatError(f"scan file must hold a single alpha, found {sorted(alphas)}")
    chi_order: list[float] = []
    seen = set()
    for r in records:
        key = format(r.chi, ".17g")
        if key not in seen:
            seen.add(key)
            chi_order.append(r.chi)
    reps = sorted({r.repetition for r in records})
    if len(records) != len(chi_order) * len(reps):
        raise CsvFormatError(
            f"incomplete grid: {len(records)} rows for {len(chi_order)} chi values x {len(reps)} repetitions"
        )
    plan = ScanPlan(alpha=records[0].alpha, chi_values=tuple(chi_order), exposures=len(reps))
    return ScanResult(plan=plan, records=tuple(records), seed=None)
