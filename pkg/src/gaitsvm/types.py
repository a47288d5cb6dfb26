"""Domain types shared by every stage of the pipeline.

Feature vectors are plain numpy rows with the fixed column order of
``FEATURES``; a batch of samples is an ``(n, 5)`` float array.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

FEATURES = ("shank_acc_x", "shank_acc_y", "shank_acc_z", "shank_gyro_x", "knee_angle")
N_FEATURES = len(FEATURES)
KNEE = FEATURES.index("knee_angle")


class GaitPhase(enum.IntEnum):
    """The seven gait phases in cyclic order, starting at peak knee flexion."""

    MidSwing = 0
    TerminalSwing = 1
    LoadingResponse = 2
    MidStance = 3
    TerminalStance = 4
    PreSwing = 5
    InitialSwing = 6

    @classmethod
    def from_index(cls, index: int) -> "GaitPhase":
        if isinstance(index, bool) or int(index) != index or not 0 <= index < len(cls):
            raise ValueError(f"phase index must be an integer in 0..6, got {index!r}")
        return cls(int(index))

    @classmethod
    def from_name(cls, name: str) -> "GaitPhase":
        try:
            return cls[name.strip()]
        except KeyError:
            raise ValueError(f"unknown gait phase {name!r}") from None


PHASES = tuple(GaitPhase)
N_PHASES = len(PHASES)


def phase_index(phase: GaitPhase) -> int:
    return int(GaitPhase(phase))


def phase_from_index(index: int) -> GaitPhase:
    return GaitPhase.from_index(index)


def _frozen_array(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Trial:
    """A uniformly sampled recording from one subject.

    ``time`` holds ``t0 + k / sample_rate`` for k = 0..n-1 and ``features``
    is an ``(n, 5)`` array in ``FEATURES`` order.
    """

    subject_id: str
    sample_rate: float
    time: np.ndarray
    features: np.ndarray
    units: dict = field(default_factory=dict)

    def __post_init__(self):
        time = _frozen_array(self.time)
        feats = _frozen_array(self.features)
        if not (np.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise ValueError("sample_rate must be positive and finite")
        if time.ndim != 1 or time.size == 0:
            raise ValueError("trial must contain at least one sample")
        if feats.shape != (time.size, N_FEATURES):
            raise ValueError(f"features must have shape ({time.size}, {N_FEATURES}), got {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features contain non-finite values")
        if time.size > 1 and not np.all(np.diff(time) > 0):
            raise ValueError("time must be strictly increasing")
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "units", dict(self.units))

    def __len__(self):
        return self.time.size

    @property
    def knee(self) -> np.ndarray:
        return self.features[:, KNEE]


@dataclass(frozen=True)
class LabeledDataset:
    """Feature rows paired with phase labels.

    ``labels`` holds phase indices 0..6.  ``groups`` names the trial/subject
    each row came from (used for subject-wise splitting); ``provenance``
    lists the source trial ids.
    """

    features: np.ndarray
    labels: np.ndarray
    groups: tuple = ()
    provenance: tuple = ()
    time: np.ndarray | None = None

    def __post_init__(self):
        feats = _frozen_array(self.features).reshape(-1, N_FEATURES)
        labels = _frozen_array(self.labels, dtype=np.int64).reshape(-1)
        if feats.shape[0] != labels.size:
            raise ValueError("features and labels differ in length")
        if labels.size and (labels.min() < 0 or labels.max() >= N_PHASES):
            raise ValueError("labels must be phase indices 0..6")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features contain non-finite values")
        groups = tuple(self.groups) if self.groups else ("",) * labels.size
        if len(groups) != labels.size:
            raise ValueError("groups must have one entry per row")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "provenance", tuple(self.provenance))
        if self.time is not None:
            t = _frozen_array(self.time)
            if t.shape != labels.shape:
                raise ValueError("time must have one entry per row")
            object.__setattr__(self, "time", t)

    def __len__(self):
        return self.labels.size

    @property
    def phases(self) -> list[GaitPhase]:
        return [GaitPhase(i) for i in self.labels]

    def counts(self) -> np.ndarray:
        """Number of rows per phase, indexed by phase index."""
        return np.bincount(self.labels, minlength=N_PHASES)

    def subset(self, index) -> "LabeledDataset":
        index = np.asarray(index, dtype=np.int64)
        return LabeledDataset(
            self.features[index],
            self.labels[index],
            groups=tuple(self.groups[i] for i in index),
            provenance=self.provenance,
            time=None if self.time is None else self.time[index],
        )

    @classmethod
    def concatenate(cls, parts) -> "LabeledDataset":
        parts = list(parts)
        if not parts:
            return cls(np.empty((0, N_FEATURES)), np.empty(0, dtype=np.int64))
        has_time = all(p.time is not None for p in parts)
        provenance = []
        for p in parts:
            provenance.extend(x for x in p.provenance if x not in provenance)
        return cls(
            np.concatenate([p.features for p in parts]),
            np.concatenate([p.labels for p in parts]),
            groups=sum((p.groups for p in parts), ()),
            provenance=tuple(provenance),
            time=np.concatenate([p.time for p in parts]) if has_time else None,
        )
