"""Exception types raised across the toolkit."""


class GaitSvmError(Exception):
    """Base class for every error raised by gaitsvm."""


# ingestion
class MissingColumn(GaitSvmError):
    def __init__(self, name):
        super().__init__(f"missing required column {name!r}")
        self.name = name


class NonFinite(GaitSvmError):
    def __init__(self, row, column):
        super().__init__(f"non-finite value at row {row}, column {column!r}")
        self.row = row
        self.column = column


class NonMonotoneTimestamps(GaitSvmError):
    def __init__(self, row):
        super().__init__(f"timestamp decreases at row {row}")
        self.row = row


class NoOverlap(GaitSvmError):
    pass


class GapExceeded(GaitSvmError):
    def __init__(self, t):
        super().__init__(f"no source sample within max_gap of t={t!r}")
        self.t = t


# labeling
class DegenerateSignal(GaitSvmError):
    pass


class EmptyCycle(GaitSvmError):
    pass


class TooFewPeaks(GaitSvmError):
    pass


class InvalidPhaseDistribution(GaitSvmError, ValueError):
    pass


# svm
class ZeroVariance(GaitSvmError):
    def __init__(self, feature_index):
        super().__init__(f"feature {feature_index} has zero variance")
        self.feature_index = feature_index


class SingleClass(GaitSvmError):
    pass


class NoConvergence(GaitSvmError):
    """Raised on request when SMO stops with KKT violations above tolerance."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class MissingPhase(GaitSvmError):
    def __init__(self, phase):
        super().__init__(f"no rows for phase {phase.name}")
        self.phase = phase


class PairTrainingError(GaitSvmError):
    def __init__(self, pair, cause):
        super().__init__(f"training pair {pair[0].name}/{pair[1].name} failed: {cause}")
        self.pair = pair
        self.cause = cause


class ModelFormatError(GaitSvmError):
    pass


class FormatVersionMismatch(ModelFormatError):
    pass


class CorruptSection(ModelFormatError):
    def __init__(self, name, detail=""):
        msg = f"corrupt model section {name!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.name = name


# evaluation
class LengthMismatch(GaitSvmError, ValueError):
    pass


class EmptyInput(GaitSvmError, ValueError):
    pass


class TooFewPerClass(GaitSvmError):
    def __init__(self, phase, count, k):
        super().__init__(f"phase {phase.name} has {count} rows, fewer than k={k}")
        self.phase = phase


class DegenerateClass(GaitSvmError):
    pass


class FoldError(GaitSvmError):
    def __init__(self, fold, cause):
        super().__init__(f"fold {fold}: {cause}")
        self.fold = fold
        self.cause = cause
