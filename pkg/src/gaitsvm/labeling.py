"""Knee-angle peak detection and per-cycle phase segmentation.

A gait cycle runs from one knee-flexion peak to the next.  Each cycle is cut
into the seven phases according to a table of phase durations (percent of
the cycle).  Samples before the first peak and from the last peak onward
cannot be assigned to a complete cycle and are left unlabeled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateSignal, EmptyCycle, InvalidPhaseDistribution, TooFewPeaks
from .types import N_PHASES, PHASES, GaitPhase, LabeledDataset, Trial

RANGE_EPS = 1.0  # degrees; smaller knee excursions are treated as flat
UNLABELED = -1


@dataclass(frozen=True)
class PeakDetectorConfig:
    height_fraction: float = 0.7
    min_distance: int = 100

    def __post_init__(self):
        if not 0 < self.height_fraction <= 1:
            raise ValueError("height_fraction must lie in (0, 1]")
        if int(self.min_distance) != self.min_distance or self.min_distance < 1:
            raise ValueError("min_distance must be a positive integer")

    @classmethod
    def for_rate(cls, sample_rate, height_fraction=0.7, min_distance_s=0.5):
        """Config whose minimum peak spacing is ``min_distance_s`` seconds."""
        return cls(height_fraction, max(1, int(round(min_distance_s * sample_rate))))


@dataclass(frozen=True)
class PhaseDistribution:
    """Duration of each phase as a percentage of the cycle, canonical order."""

    percents: tuple

    def __post_init__(self):
        p = tuple(float(x) for x in self.percents)
        if len(p) != N_PHASES:
            raise InvalidPhaseDistribution(f"expected {N_PHASES} percentages, got {len(p)}")
        if not all(math.isfinite(x) and x > 0 for x in p):
            raise InvalidPhaseDistribution("percentages must be positive and finite")
        if abs(math.fsum(p) - 100.0) > 1e-9:
            raise InvalidPhaseDistribution(f"percentages sum to {math.fsum(p)!r}, not 100")
        object.__setattr__(self, "percents", p)

    def items(self):
        return list(zip(PHASES, self.percents))

    def cumulative(self) -> list[float]:
        """Cumulative percentage at the end of each phase; the last entry is 100."""
        return [math.fsum(self.percents[: k + 1]) for k in range(N_PHASES)]

    @classmethod
    def parse(cls, text: str) -> "PhaseDistribution":
        """Parse seven comma-separated percents (``m,t,l,s,e,p,i``)."""
        try:
            values = [float(x) for x in text.split(",")]
        except ValueError:
            raise InvalidPhaseDistribution(f"cannot parse phase distribution {text!r}") from None
        return cls(tuple(values))

    @classmethod
    def from_file(cls, path) -> "PhaseDistribution":
        """Read ``phase=percent`` lines; blank lines and ``#`` comments are skipped."""
        found = {}
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            name, sep, value = line.partition("=")
            if not sep:
                raise InvalidPhaseDistribution(f"bad line {raw!r}")
            try:
                phase = GaitPhase.from_name(name)
                found[phase] = float(value)
            except ValueError as exc:
                raise InvalidPhaseDistribution(str(exc)) from None
        missing = [p.name for p in PHASES if p not in found]
        if missing:
            raise InvalidPhaseDistribution(f"missing phases: {', '.join(missing)}")
        return cls(tuple(found[p] for p in PHASES))


# Standard heel-strike phase table rotated to start at peak knee flexion.
DEFAULT_DISTRIBUTION = PhaseDistribution((14.0, 13.0, 10.0, 20.0, 20.0, 10.0, 13.0))


@dataclass(frozen=True)
class CycleSegmentation:
    peak_indices: np.ndarray
    labels: np.ndarray  # per-sample phase index, UNLABELED outside [first, last)

    @property
    def labeled_range(self):
        return int(self.peak_indices[0]), int(self.peak_indices[-1])


def subject_threshold(knee, cfg: PeakDetectorConfig, range_eps: float = RANGE_EPS) -> float:
    """Peak height threshold derived from this subject's knee range."""
    knee = np.asarray(knee.knee if isinstance(knee, Trial) else knee, dtype=float)
    if knee.size == 0:
        raise DegenerateSignal("empty knee signal")
    lo, hi = float(knee.min()), float(knee.max())
    if hi - lo < range_eps:
        raise DegenerateSignal(f"knee angle range {hi - lo:.6g} deg is below {range_eps} deg")
    return lo + cfg.height_fraction * (hi - lo)


def local_maxima(knee, threshold) -> np.ndarray:
    """Indices i with knee[i-1] < knee[i] >= knee[i+1] and knee[i] >= threshold."""
    x = np.asarray(knee, dtype=float)
    if x.size < 3:
        return np.empty(0, dtype=np.int64)
    mid = x[1:-1]
    ok = (mid > x[:-2]) & (mid >= x[2:]) & (mid >= threshold)
    return np.flatnonzero(ok) + 1


def detect_peaks(knee, threshold, min_distance) -> np.ndarray:
    """Thresholded local maxima at least ``min_distance`` samples apart.

    Candidates are accepted greedily from the tallest down (earlier index
    first among equal heights); a candidate is discarded when an accepted
    peak lies fewer than ``min_distance`` samples away.
    """
    x = np.asarray(knee, dtype=float)
    cand = local_maxima(x, threshold)
    if cand.size < 2 or min_distance <= 1:
        return cand
    order = np.lexsort((cand, -x[cand]))
    keep = np.zeros(cand.size, dtype=bool)
    blocked = np.zeros(cand.size, dtype=bool)
    for k in order:
        if blocked[k]:
            continue
        keep[k] = True
        lo = np.searchsorted(cand, cand[k] - min_distance, side="right")
        hi = np.searchsorted(cand, cand[k] + min_distance, side="left")
        blocked[lo:hi] = True
    return cand[keep]


def cycle_boundaries(p: int, q: int, dist: PhaseDistribution) -> list[int]:
    """Phase start indices for the cycle [p, q), plus q as the final entry.

    Each boundary is rounded half-up from the exact cumulative fraction of
    the cycle measured from ``p``, so rounding error never accumulates.
    """
    length = q - p
    bounds = [p]
    for c in dist.cumulative()[:-1]:
        # 1e-9 absorbs float noise in length * c / 100 at exact .5 ties
        bounds.append(p + math.floor(length * c / 100.0 + 0.5 + 1e-9))
    bounds.append(q)
    return bounds


def segment_cycles(peak_indices, dist: PhaseDistribution, n_samples: int) -> CycleSegmentation:
    peaks = np.asarray(peak_indices, dtype=np.int64)
    if peaks.size < 2:
        raise TooFewPeaks(f"need at least 2 peaks to form a cycle, got {peaks.size}")
    if np.any(np.diff(peaks) <= 0) or peaks[0] < 0 or peaks[-1] > n_samples:
        raise ValueError("peak indices must be strictly increasing and inside the signal")
    labels = np.full(n_samples, UNLABELED, dtype=np.int64)
    for p, q in zip(peaks[:-1], peaks[1:]):
        if q - p < N_PHASES:
            raise EmptyCycle(f"cycle [{p}, {q}) has fewer samples than phases")
        b = cycle_boundaries(int(p), int(q), dist)
        for k in range(N_PHASES):
            labels[b[k]:b[k + 1]] = k
    return CycleSegmentation(peaks, labels)


def label_trial(trial: Trial, cfg: PeakDetectorConfig | None = None,
                dist: PhaseDistribution = DEFAULT_DISTRIBUTION) -> LabeledDataset:
    """Label every sample between the first and last knee peak of ``trial``."""
    seg = segment_trial(trial, cfg, dist)
    first, last = seg.labeled_range
    sl = slice(first, last)
    n = last - first
    return LabeledDataset(trial.features[sl], seg.labels[sl], groups=(trial.subject_id,) * n,
                          provenance=(trial.subject_id,), time=trial.time[sl])


def segment_trial(trial: Trial, cfg: PeakDetectorConfig | None = None,
                  dist: PhaseDistribution = DEFAULT_DISTRIBUTION) -> CycleSegmentation:
    if cfg is None:
        cfg = PeakDetectorConfig.for_rate(trial.sample_rate)
    threshold = subject_threshold(trial.knee, cfg)
    peaks = detect_peaks(trial.knee, threshold, cfg.min_distance)
    if peaks.size < 2:
        raise TooFewPeaks(f"trial {trial.subject_id!r}: found {peaks.size} knee peak(s), need 2")
    return segment_cycles(peaks, dist, len(trial))
