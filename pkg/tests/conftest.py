import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gaitsvm.labeling import PhaseDistribution, label_trial
from gaitsvm.synth import SynthConfig, generate
from gaitsvm.types import GaitPhase

# Published 7-class confusion matrix of the shank-IMU SVM.  Rows are true
# phases, columns predicted, both in the alphabetical order printed with
# the figure; blank cells are zeros.
REFERENCE_ORDER = [
    GaitPhase.InitialSwing, GaitPhase.LoadingResponse, GaitPhase.MidStance, GaitPhase.MidSwing,
    GaitPhase.PreSwing, GaitPhase.TerminalStance, GaitPhase.TerminalSwing,
]
REFERENCE_PRINTED = np.array([
    [4451, 1, 63, 63, 55, 0, 60],
    [2, 2281, 144, 0, 3, 6, 62],
    [68, 104, 6151, 0, 149, 377, 95],
    [72, 0, 5, 3013, 0, 0, 69],
    [109, 4, 63, 0, 2532, 444, 1],
    [2, 9, 433, 0, 312, 5508, 0],
    [65, 87, 72, 85, 0, 0, 4406],
])


def reference_counts():
    """The published matrix re-indexed to canonical phase order."""
    idx = [int(p) for p in REFERENCE_ORDER]
    out = np.zeros((7, 7), dtype=np.int64)
    for r, tr in enumerate(idx):
        for c, pr in enumerate(idx):
            out[tr, pr] = REFERENCE_PRINTED[r, c]
    return out


BALANCED = PhaseDistribution((100 / 7,) * 6 + (100 - 6 * (100 / 7),))


@pytest.fixture(scope="session")
def separable_dataset():
    s = generate(SynthConfig(n_cycles=12, noise_std=(0.0,) * 5, seed=3))
    return label_trial(s.trial)


@pytest.fixture(scope="session")
def noisy_dataset():
    s = generate(SynthConfig(n_cycles=12, noise_std=(0.2,) * 4, seed=5))
    return label_trial(s.trial)


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acc.RESULTS:
        terminalreporter.write_line(line)
