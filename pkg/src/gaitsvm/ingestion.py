"""CSV readers/writers and channel alignment.

Four CSV layouts are understood:

* A (IMU):       ``time,shank_acc_x,shank_acc_y,shank_acc_z,shank_gyro_x``
* B (knee):      ``time,knee_angle``
* C (combined):  ``time`` followed by all five features
* D (labeled):   layout C plus a trailing ``phase`` column

Extra columns are ignored on input.  Reals are written with ``repr`` so a
write/read cycle is bit-exact.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GapExceeded, MissingColumn, NonFinite, NonMonotoneTimestamps, NoOverlap
from .types import FEATURES, GaitPhase, LabeledDataset, Trial

IMU_COLUMNS = FEATURES[:4]
KNEE_COLUMNS = ("knee_angle",)
DUPLICATE_TOL = 1e-9  # seconds
UNIFORM_RTOL = 1e-6


@dataclass(frozen=True)
class RawChannelFile:
    path: str
    columns: tuple
    time: np.ndarray
    values: np.ndarray  # (n, len(columns))

    def column(self, name):
        return self.values[:, self.columns.index(name)]


@dataclass(frozen=True)
class AlignmentConfig:
    target_rate: float = 200.0
    interpolation: str = "linear"
    max_gap: float = 0.05

    def __post_init__(self):
        if not self.target_rate > 0:
            raise ValueError("target_rate must be positive")
        if not self.max_gap > 0:
            raise ValueError("max_gap must be positive")
        if self.interpolation != "linear":
            raise ValueError("only linear interpolation is supported")


def fmt(x) -> str:
    return repr(float(x))


def _read_table(path, required):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingColumn(required[0]) from None
        for name in required:
            if name not in header:
                raise MissingColumn(name)
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    return header, rows


def load_channel(path, required_columns) -> RawChannelFile:
    """Read a time-stamped channel file keeping only ``required_columns``."""
    required = tuple(required_columns)
    header, rows = _read_table(path, ("time",) + required)
    cols = [header.index(c) for c in ("time",) + required]
    data = np.empty((len(rows), len(cols)))
    for i, row in enumerate(rows, start=1):
        for j, c in enumerate(cols):
            name = header[c]
            try:
                v = float(row[c])
            except (IndexError, ValueError):
                raise NonFinite(i, name) from None
            if not math.isfinite(v):
                raise NonFinite(i, name)
            data[i - 1, j] = v
        if i > 1 and data[i - 1, 0] < data[i - 2, 0]:
            raise NonMonotoneTimestamps(i)
    return RawChannelFile(str(path), required, data[:, 0].copy(), data[:, 1:].copy())


def _dedupe(time, values):
    # Keep the first of any run of timestamps closer than DUPLICATE_TOL.
    if time.size < 2:
        return time, values
    keep = np.ones(time.size, dtype=bool)
    keep[1:] = np.diff(time) > DUPLICATE_TOL
    return time[keep], values[keep]


def _check_gaps(src_time, grid, max_gap):
    pos = np.searchsorted(src_time, grid)
    left = np.abs(grid - src_time[np.clip(pos - 1, 0, src_time.size - 1)])
    right = np.abs(src_time[np.clip(pos, 0, src_time.size - 1)] - grid)
    nearest = np.minimum(left, right)
    bad = np.flatnonzero(nearest > max_gap + DUPLICATE_TOL)
    if bad.size:
        raise GapExceeded(float(grid[bad[0]]))


def align(imu: RawChannelFile, knee: RawChannelFile, cfg: AlignmentConfig = AlignmentConfig(),
          subject_id: str = "") -> Trial:
    """Resample IMU and knee channels onto a common uniform time grid.

    The grid covers the overlap of both recordings with timestamps
    ``start + k / target_rate``; each channel is linearly interpolated.
    """
    t_imu, v_imu = _dedupe(imu.time, np.column_stack([imu.column(c) for c in IMU_COLUMNS]))
    t_knee, v_knee = _dedupe(knee.time, knee.column("knee_angle")[:, None])
    if t_imu.size == 0 or t_knee.size == 0:
        raise NoOverlap("empty channel file")
    start = max(t_imu[0], t_knee[0])
    stop = min(t_imu[-1], t_knee[-1])
    dt = 1.0 / cfg.target_rate
    if stop - start < 2 * dt - DUPLICATE_TOL:
        raise NoOverlap(f"overlap [{start}, {stop}] shorter than two samples at {cfg.target_rate} Hz")
    n = int(math.floor((stop - start) * cfg.target_rate + 1e-9)) + 1
    grid = start + np.arange(n) * dt
    _check_gaps(t_imu, grid, cfg.max_gap)
    _check_gaps(t_knee, grid, cfg.max_gap)
    out = np.empty((n, len(FEATURES)))
    for j in range(4):
        out[:, j] = np.interp(grid, t_imu, v_imu[:, j])
    out[:, 4] = np.interp(grid, t_knee, v_knee[:, 0])
    return Trial(subject_id, cfg.target_rate, grid, out)


def _infer_rate(time):
    if time.size < 2:
        raise ValueError("cannot infer a sample rate from fewer than two samples")
    steps = np.diff(time)
    dt = float(np.median(steps))
    if dt <= 0 or np.max(np.abs(steps - dt)) > max(UNIFORM_RTOL * dt, 1e-9):
        raise ValueError("combined file is not uniformly sampled; use align() on separate channels")
    return 1.0 / dt


def load_combined(path, subject_id=None, sample_rate=None) -> Trial:
    """Read a layout-C file (already aligned) into a Trial."""
    raw = load_channel(path, FEATURES)
    rate = sample_rate or _infer_rate(raw.time)
    return Trial(subject_id if subject_id is not None else Path(path).stem, rate, raw.time, raw.values)


def write_combined(trial: Trial, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(("time",) + FEATURES) + "\n")
        for t, row in zip(trial.time, trial.features):
            fh.write(",".join([fmt(t)] + [fmt(v) for v in row]) + "\n")


def write_labeled(ds: LabeledDataset, path):
    time = ds.time if ds.time is not None else np.arange(len(ds), dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(("time",) + FEATURES + ("phase",)) + "\n")
        for t, row, lab in zip(time, ds.features, ds.labels):
            fh.write(",".join([fmt(t)] + [fmt(v) for v in row] + [GaitPhase(lab).name]) + "\n")


def load_labeled(path, group=None) -> LabeledDataset:
    """Read a layout-D file.  Rows are grouped under ``group`` (default: file stem)."""
    header, rows = _read_table(path, ("time",) + FEATURES + ("phase",))
    num_cols = [header.index(c) for c in ("time",) + FEATURES]
    phase_col = header.index("phase")
    data = np.empty((len(rows), len(num_cols)))
    labels = np.empty(len(rows), dtype=np.int64)
    for i, row in enumerate(rows):
        for j, c in enumerate(num_cols):
            try:
                v = float(row[c])
            except (IndexError, ValueError):
                raise NonFinite(i + 1, header[c]) from None
            if not math.isfinite(v):
                raise NonFinite(i + 1, header[c])
            data[i, j] = v
        try:
            labels[i] = GaitPhase.from_name(row[phase_col])
        except (IndexError, ValueError):
            raise ValueError(f"row {i + 1}: unknown phase {row[phase_col:phase_col + 1]}") from None
    group = Path(path).stem if group is None else group
    return LabeledDataset(data[:, 1:], labels, groups=(group,) * len(rows), provenance=(group,),
                          time=data[:, 0])


def write_ground_truth(time, labels, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("time,phase\n")
        for t, lab in zip(time, labels):
            fh.write(f"{fmt(t)},{GaitPhase(lab).name}\n")


def load_ground_truth(path):
    header, rows = _read_table(path, ("time", "phase"))
    ti, pi = header.index("time"), header.index("phase")
    time = np.array([float(r[ti]) for r in rows])
    labels = np.array([GaitPhase.from_name(r[pi]) for r in rows], dtype=np.int64)
    return time, labels


def csv_text(header, rows) -> str:
    """Render rows to CSV text with ``\\n`` line endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
