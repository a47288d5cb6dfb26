"""Synthetic gait trials with known peaks and phase labels.

The knee angle is a raised-cosine bump per cycle with a flat trough, so each
cycle has exactly one strict local maximum (the crest).  The four IMU
channels hold a constant per-phase signature plus Gaussian noise.

Noise comes from ``numpy.random.default_rng(seed).standard_normal((n, 5))``
(PCG64); the value for sample ``i``, channel ``c`` is draw number ``5*i + c``
of that stream, so it depends only on (seed, i, c).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .labeling import DEFAULT_DISTRIBUTION, UNLABELED, PhaseDistribution, cycle_boundaries
from .types import N_FEATURES, N_PHASES, LabeledDataset, Trial


def default_signatures(radius: float = 1.0) -> np.ndarray:
    """Seven IMU signatures on a closed 4-D curve; nearest pair is ~1.79*radius apart."""
    k = np.arange(N_PHASES)
    th = 2 * np.pi * k / N_PHASES
    return radius * np.column_stack([np.cos(th), np.sin(th), np.cos(2 * th), np.sin(2 * th)])


@dataclass(frozen=True)
class SynthConfig:
    n_cycles: int = 10
    cycle_period: float = 1.0
    sample_rate: float = 100.0
    knee_amplitude: float = 60.0
    knee_baseline: float = 5.0
    noise_std: tuple = (0.2, 0.2, 0.2, 0.2, 0.0)
    phase_signatures: np.ndarray = field(default_factory=default_signatures)
    distribution: PhaseDistribution = DEFAULT_DISTRIBUTION
    bump_width: float = 0.6  # fraction of the cycle occupied by the knee bump
    first_crest: float = 0.25  # first crest position, fraction of a cycle
    seed: int = 0
    subject_id: str = "synthetic"

    def __post_init__(self):
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be >= 1")
        if not self.cycle_period > 0 or not self.sample_rate > 0:
            raise ValueError("cycle_period and sample_rate must be positive")
        if self.sample_rate * self.cycle_period < 2 * N_PHASES:
            raise ValueError("need at least 2 samples per phase (sample_rate * cycle_period >= 14)")
        noise = tuple(float(s) for s in self.noise_std)
        if len(noise) == 4:
            noise = noise + (0.0,)
        if len(noise) != N_FEATURES or min(noise) < 0:
            raise ValueError("noise_std needs 4 or 5 non-negative entries")
        object.__setattr__(self, "noise_std", noise)
        sig = np.array(self.phase_signatures, dtype=float)
        if sig.shape != (N_PHASES, 4):
            raise ValueError("phase_signatures must be a 7x4 array")
        object.__setattr__(self, "phase_signatures", sig)
        if not 0 < self.bump_width <= 1:
            raise ValueError("bump_width must lie in (0, 1]")
        if not self.knee_amplitude > 0:
            raise ValueError("knee_amplitude must be positive")

    @property
    def samples_per_cycle(self) -> int:
        return int(round(self.cycle_period * self.sample_rate))


@dataclass(frozen=True)
class SynthTrial:
    trial: Trial
    labels: np.ndarray  # per sample; UNLABELED outside [crests[0], crests[-1])
    crests: np.ndarray

    def ground_truth(self) -> LabeledDataset:
        lo, hi = int(self.crests[0]), int(self.crests[-1])
        t = self.trial
        return LabeledDataset(t.features[lo:hi], self.labels[lo:hi], groups=(t.subject_id,) * (hi - lo),
                              provenance=(t.subject_id,), time=t.time[lo:hi])


def knee_waveform(n_samples, period, first, amplitude, baseline, width):
    """Raised-cosine bump of ``width`` cycles centred on every crest."""
    u = (np.arange(n_samples) - first) % period
    d = np.minimum(u, period - u) / period
    bump = np.where(d < width / 2, 0.5 * (1 + np.cos(2 * np.pi * d / width)), 0.0)
    return baseline + amplitude * bump


def phase_pattern(period: int, dist: PhaseDistribution) -> np.ndarray:
    """Phase index of each offset 0..period-1 within one cycle."""
    b = cycle_boundaries(0, period, dist)
    pattern = np.empty(period, dtype=np.int64)
    for k in range(N_PHASES):
        pattern[b[k]:b[k + 1]] = k
    return pattern


def generate(cfg: SynthConfig = SynthConfig()) -> SynthTrial:
    period = cfg.samples_per_cycle
    first = int(math.floor(cfg.first_crest * period))
    n = cfg.n_cycles * period
    crests = first + period * np.arange(cfg.n_cycles)
    knee = knee_waveform(n, period, first, cfg.knee_amplitude, cfg.knee_baseline, cfg.bump_width)
    phase = phase_pattern(period, cfg.distribution)[(np.arange(n) - first) % period]

    rng = np.random.default_rng(cfg.seed)
    noise = rng.standard_normal((n, N_FEATURES)) * np.array(cfg.noise_std)
    feats = np.empty((n, N_FEATURES))
    feats[:, :4] = cfg.phase_signatures[phase]
    feats[:, 4] = knee
    feats += noise

    labels = np.full(n, UNLABELED, dtype=np.int64)
    labels[crests[0]:crests[-1]] = phase[crests[0]:crests[-1]]
    time = np.arange(n) / cfg.sample_rate
    trial = Trial(cfg.subject_id, cfg.sample_rate, time, feats)
    return SynthTrial(trial, labels, crests)
