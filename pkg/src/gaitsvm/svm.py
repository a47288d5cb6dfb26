"""Gaussian-kernel SVM: SMO training, one-vs-one multiclass, model files.

Binary decision function::

    f(x) = sum_i coef_i * K(sv_i, x) + b,    coef_i = alpha_i * y_i
    K(u, v) = exp(-gamma * ||u - v||^2)

The dual is solved by sequential minimal optimization.  Each step picks the
pair with the largest KKT violation (smallest error among points that may
move up, largest among points that may move down, which is the pair
maximising |E1 - E2|), updates it analytically and refreshes the error
cache.  Selection ties go to the lowest row index, so training is fully
deterministic for a fixed row order.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import (
    CorruptSection,
    FormatVersionMismatch,
    MissingPhase,
    NoConvergence,
    PairTrainingError,
    SingleClass,
    ZeroVariance,
)
from .types import N_FEATURES, N_PHASES, PHASES, GaitPhase, LabeledDataset

FORMAT_HEADER = "GAITSVM v1"
FULL_GRAM_LIMIT = 8192
PRUNE_TOL = 1e-10
PAIRS = tuple(combinations(range(N_PHASES), 2))


def fine_gaussian_gamma(n_features: int) -> float:
    """Kernel width of the "fine" preset: scale sqrt(P)/4, so gamma = 8/P."""
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    # 1 / (2 * (sqrt(P)/4)^2) simplified so the common cases are exact
    return 8.0 / n_features


@dataclass(frozen=True)
class KernelParams:
    gamma: float = 1.6
    kind: str = "rbf"

    def __post_init__(self):
        if self.kind != "rbf":
            raise ValueError("only the rbf kernel is supported")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError("gamma must be positive and finite")


@dataclass(frozen=True)
class TrainConfig:
    c: float = 1.0
    kkt_tol: float = 1e-3
    eps_alpha: float = 1e-8
    max_passes: int = 200
    seed: int = 0
    cache_rows: int = 2048

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValueError("C must be positive and finite")
        if not self.kkt_tol > 0:
            raise ValueError("kkt_tol must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")


def rbf_kernel(x, y, params: KernelParams) -> float:
    return float(rbf_matrix(x, y, params.gamma)[0, 0])


def rbf_matrix(a, b, gamma: float, chunk_elems: int = 1 << 20) -> np.ndarray:
    """K[i, j] = exp(-gamma * ||a_i - b_j||^2) from explicit differences.

    Differences (not the |a|^2 + |b|^2 - 2ab expansion) keep the result
    exactly symmetric and identical to ``rbf_kernel`` entry by entry.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    out = np.empty((a.shape[0], b.shape[0]))
    step = max(1, chunk_elems // max(1, b.shape[0]))
    for s in range(0, a.shape[0], step):
        d = a[s:s + step, None, :] - b[None, :, :]
        out[s:s + step] = np.einsum("ijk,ijk->ij", d, d)
    np.multiply(out, -gamma, out=out)
    return np.exp(out, out=out)


class _KernelRows:
    """Row access to the training Gram matrix.

    Small problems precompute the whole matrix; larger ones keep an LRU
    cache of ``cache_rows`` rows.
    """

    def __init__(self, x, gamma, cache_rows, full_limit=None):
        self.x = x
        self.gamma = gamma
        limit = FULL_GRAM_LIMIT if full_limit is None else full_limit
        self.full = rbf_matrix(x, x, gamma) if len(x) <= limit else None
        self.cache = OrderedDict()
        self.cache_rows = max(2, cache_rows)

    def row(self, i):
        if self.full is not None:
            return self.full[i]
        r = self.cache.get(i)
        if r is not None:
            self.cache.move_to_end(i)
            return r
        r = rbf_matrix(self.x[i:i + 1], self.x, self.gamma)[0]
        self.cache[i] = r
        if len(self.cache) > self.cache_rows:
            self.cache.popitem(last=False)
        return r


@dataclass
class BinarySvmModel:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    kernel: KernelParams
    class_pair: tuple = (GaitPhase.MidSwing, GaitPhase.TerminalSwing)
    converged: bool = True
    kkt_residual: float = 0.0
    n_iter: int = 0

    @property
    def n_support(self):
        return len(self.dual_coefs)

    def decision_function(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return rbf_matrix(x, self.support_vectors, self.kernel.gamma) @ self.dual_coefs + self.bias

    def dual_objective(self) -> float:
        """Value of the dual at the stored coefficients."""
        k = rbf_matrix(self.support_vectors, self.support_vectors, self.kernel.gamma)
        return float(np.sum(np.abs(self.dual_coefs)) - 0.5 * self.dual_coefs @ k @ self.dual_coefs)


def decision_value(model: BinarySvmModel, x) -> float:
    return float(model.decision_function(np.asarray(x, dtype=float)[None, :])[0])


def _bias(alpha, y, err, c):
    # With E_t = sum_s alpha_s y_s K_ts - y_t, optimality asks for
    # y_t (E_t + b) >= 0 at alpha=0, <= 0 at alpha=C and = 0 when free.
    free = (alpha > 0) & (alpha < c)
    if np.any(free):
        return float(np.mean(-err[free]))
    lower = ((y > 0) & (alpha <= 0)) | ((y < 0) & (alpha >= c))
    upper = ((y < 0) & (alpha <= 0)) | ((y > 0) & (alpha >= c))
    lo = float(np.max(-err[lower])) if np.any(lower) else None
    hi = float(np.min(-err[upper])) if np.any(upper) else None
    if lo is None and hi is None:
        return 0.0
    if lo is None:
        return hi
    if hi is None:
        return lo
    return 0.5 * (lo + hi)


def _snap(a, c, tol):
    # a multiplier left a hair inside the box would stay "free" and keep
    # getting selected for steps too small to matter
    if a < tol:
        return 0.0
    if a > c - tol:
        return c
    return a


def _violation(alpha, y, err, c):
    """Return (i_up, i_low, gap) for the maximal violating pair."""
    up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
    e_up = np.where(up, err, np.inf)
    e_low = np.where(low, err, -np.inf)
    i = int(np.argmin(e_up))
    j = int(np.argmax(e_low))
    if not (up[i] and low[j]):
        return i, j, 0.0
    return i, j, float(e_low[j] - e_up[i])


def smo_train(x, y, kernel: KernelParams = KernelParams(), cfg: TrainConfig = TrainConfig(),
              class_pair=(GaitPhase.MidSwing, GaitPhase.TerminalSwing)) -> BinarySvmModel:
    """Train a soft-margin binary SVM on standardized rows ``x`` with labels ±1.

    Stops once the maximal KKT pair violation is at most ``cfg.kkt_tol``.
    Multipliers within ``cfg.eps_alpha * C`` of a box edge are placed on
    it.  If ``cfg.max_passes`` consecutive passes (n updates each) fail to
    improve the best violation seen, or the selected pair cannot move,
    training stops and the model is flagged ``converged=False``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ValueError("x must be (n, d) with one label per row")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +1 or -1")
    if np.all(y > 0) or np.all(y < 0):
        raise SingleClass("both labels +1 and -1 are required")
    n = y.size
    c = cfg.c
    snap = cfg.eps_alpha * c
    rows = _KernelRows(x, kernel.gamma, cfg.cache_rows)
    alpha = np.zeros(n)
    err = -y.copy()  # error cache at alpha = 0
    best = pass_best = math.inf
    stale = 0
    it = 0
    converged = False
    while True:
        i, j, gap = _violation(alpha, y, err, c)
        if gap <= cfg.kkt_tol:
            converged = True
            break
        best = min(best, gap)
        if it and it % n == 0:
            stale = 0 if best < pass_best else stale + 1
            pass_best = best
            if stale >= cfg.max_passes:
                break
        ki, kj = rows.row(i), rows.row(j)
        eta = max(ki[i] + kj[j] - 2.0 * ki[j], 1e-12)
        yi, yj = y[i], y[j]
        ai, aj = alpha[i], alpha[j]
        if yi != yj:
            lo, hi = max(0.0, aj - ai), min(c, c + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - c), min(c, ai + aj)
        aj_new = _snap(min(hi, max(lo, aj + yj * (err[i] - err[j]) / eta)), c, snap)
        if aj_new == aj:
            break
        ai_new = _snap(ai + yi * yj * (aj - aj_new), c, snap)
        di, dj = ai_new - ai, aj_new - aj
        alpha[i], alpha[j] = ai_new, aj_new
        err += (di * yi) * ki + (dj * yj) * kj
        it += 1

    _, _, gap = _violation(alpha, y, err, c)
    b = _bias(alpha, y, err, c)
    keep = alpha > PRUNE_TOL
    return BinarySvmModel(
        support_vectors=x[keep].copy(),
        dual_coefs=(alpha * y)[keep],
        bias=b,
        kernel=kernel,
        class_pair=tuple(GaitPhase(p) for p in class_pair),
        converged=converged,
        kkt_residual=gap,
        n_iter=it,
    )


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std


def fit_standardizer(x) -> Standardizer:
    """Per-feature z-score parameters (population standard deviation)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] < 2:
        raise ValueError("need at least 2 rows to fit a standardizer")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    for k, s in enumerate(std):
        if not s > 1e-12 * max(1.0, abs(mean[k])):
            raise ZeroVariance(k)
    return Standardizer(mean, std)


def apply_standardizer(s: Standardizer, x) -> np.ndarray:
    return s.apply(x)


@dataclass
class OvoModel:
    standardizer: Standardizer
    classifiers: list
    kernel: KernelParams = field(default_factory=KernelParams)

    def __post_init__(self):
        pairs = [tuple(int(p) for p in m.class_pair) for m in self.classifiers]
        if pairs != list(PAIRS):
            raise ValueError("classifiers must cover all 21 phase pairs in lexicographic order")

    @property
    def converged(self) -> bool:
        return all(m.converged for m in self.classifiers)

    def decision_values(self, x) -> np.ndarray:
        """(n, 21) raw decision values on unstandardized rows."""
        z = self.standardizer.apply(np.atleast_2d(x))
        if len(z) == 0:
            return np.empty((0, len(PAIRS)))
        return np.column_stack([m.decision_function(z) for m in self.classifiers])

    def predict(self, x):
        """Return (phase indices, votes (n, 7), scores (n, 7)) for rows ``x``."""
        return vote(self.decision_values(x))


def vote(decisions):
    """One-vs-one vote over a (n, 21) decision matrix.

    Non-negative values vote for the first phase of the pair.  Each vote
    adds |d| to the voted phase's score; ties in vote count go to the larger
    score and then to the lower phase index.
    """
    d = np.atleast_2d(np.asarray(decisions, dtype=float))
    n = d.shape[0]
    votes = np.zeros((n, N_PHASES), dtype=np.int64)
    scores = np.zeros((n, N_PHASES))
    for k, (a, b) in enumerate(PAIRS):
        pos = d[:, k] >= 0
        mag = np.abs(d[:, k])
        votes[:, a] += pos
        votes[:, b] += ~pos
        scores[:, a] += np.where(pos, mag, 0.0)
        scores[:, b] += np.where(pos, 0.0, mag)
    if n == 0:
        return np.empty(0, dtype=np.int64), votes, scores
    top = votes == votes.max(axis=1, keepdims=True)
    masked = np.where(top, scores, -np.inf)
    best = masked.max(axis=1, keepdims=True)
    winner = np.argmax(top & (masked == best), axis=1)
    return winner.astype(np.int64), votes, scores


def predict_ovo(model: OvoModel, x):
    """Classify one feature vector; returns (phase, votes, scores)."""
    w, v, s = model.predict(np.asarray(x, dtype=float)[None, :])
    return GaitPhase(int(w[0])), v[0], s[0]


def _train_pair(args):
    z, labels, a, b, kernel, cfg = args
    mask = (labels == a) | (labels == b)
    y = np.where(labels[mask] == a, 1.0, -1.0)
    pair = (GaitPhase(a), GaitPhase(b))
    try:
        return smo_train(z[mask], y, kernel, cfg, class_pair=pair)
    except Exception as exc:  # attach the pair for the caller
        raise PairTrainingError(pair, exc) from exc


def train_ovo(data: LabeledDataset, kernel: KernelParams | None = None,
              cfg: TrainConfig = TrainConfig(), n_jobs: int = 1,
              require_convergence: bool = False) -> OvoModel:
    """Fit the standardizer on all rows, then one binary SVM per phase pair.

    The lower phase index of each pair is the positive class.  Pairs are
    independent and run on ``n_jobs`` threads; results are gathered in pair
    order so the model does not depend on scheduling.
    """
    kernel = kernel or KernelParams(fine_gaussian_gamma(N_FEATURES))
    counts = data.counts()
    for p in PHASES:
        if counts[p] == 0:
            raise MissingPhase(p)
    std = fit_standardizer(data.features)
    z = std.apply(data.features)
    jobs = [(z, data.labels, a, b, kernel, cfg) for a, b in PAIRS]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            models = list(pool.map(_train_pair, jobs))
    else:
        models = [_train_pair(j) for j in jobs]
    if require_convergence:
        for m in models:
            if not m.converged:
                raise NoConvergence(
                    f"pair {m.class_pair[0].name}/{m.class_pair[1].name} stopped with KKT "
                    f"violation {m.kkt_residual:.3g} > {cfg.kkt_tol:g}", pair=m.class_pair)
    return OvoModel(std, models, kernel)


# -- model files -------------------------------------------------------------

def _g(x) -> str:
    return format(float(x), ".17g")


def dumps_model(model: OvoModel) -> str:
    lines = [
        FORMAT_HEADER,
        f"features {N_FEATURES}",
        f"kernel rbf gamma {_g(model.kernel.gamma)}",
        "standardizer means " + " ".join(_g(v) for v in model.standardizer.mean),
        "standardizer stds  " + " ".join(_g(v) for v in model.standardizer.std),
    ]
    for m in model.classifiers:
        a, b = m.class_pair
        lines.append(f"classifier {a.name} {b.name} nsv {m.n_support} bias {_g(m.bias)}")
        for coef, sv in zip(m.dual_coefs, m.support_vectors):
            lines.append("sv " + " ".join(_g(v) for v in (coef, *sv)))
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_model(model: OvoModel, path):
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def _floats(tokens, section, count):
    if len(tokens) != count:
        raise CorruptSection(section, f"expected {count} values, got {len(tokens)}")
    try:
        vals = [float(t) for t in tokens]
    except ValueError:
        raise CorruptSection(section, "unparseable number") from None
    if not all(math.isfinite(v) for v in vals):
        raise CorruptSection(section, "non-finite number")
    return vals


def loads_model(text: str) -> OvoModel:
    lines = text.splitlines()
    pos = 0

    def take(section):
        nonlocal pos
        if pos >= len(lines):
            raise CorruptSection(section, "unexpected end of file")
        line = lines[pos]
        pos += 1
        return line.split()

    head = lines[0].strip() if lines else ""
    if head != FORMAT_HEADER:
        if head.startswith("GAITSVM"):
            raise FormatVersionMismatch(f"unsupported model format {head!r}")
        raise CorruptSection("header", "missing GAITSVM signature")
    pos = 1
    t = take("features")
    if t[:1] != ["features"] or _floats(t[1:], "features", 1) != [N_FEATURES]:
        raise CorruptSection("features")
    t = take("kernel")
    if t[:3] != ["kernel", "rbf", "gamma"]:
        raise CorruptSection("kernel")
    try:
        kernel = KernelParams(_floats(t[3:], "kernel", 1)[0])
    except ValueError as exc:
        raise CorruptSection("kernel", str(exc)) from None
    t = take("standardizer")
    if t[:2] != ["standardizer", "means"]:
        raise CorruptSection("standardizer")
    means = _floats(t[2:], "standardizer", N_FEATURES)
    t = take("standardizer")
    if t[:2] != ["standardizer", "stds"]:
        raise CorruptSection("standardizer")
    stds = _floats(t[2:], "standardizer", N_FEATURES)
    if min(stds) <= 0:
        raise CorruptSection("standardizer", "non-positive std")
    classifiers = []
    for a, b in PAIRS:
        t = take("classifier")
        if (len(t) != 7 or t[0] != "classifier" or t[1] != PHASES[a].name or t[2] != PHASES[b].name
                or t[3] != "nsv" or t[5] != "bias"):
            raise CorruptSection("classifier", f"expected block for {PHASES[a].name}/{PHASES[b].name}")
        try:
            nsv = int(t[4])
        except ValueError:
            raise CorruptSection("classifier", "bad nsv") from None
        if nsv < 1:
            raise CorruptSection("classifier", "nsv must be positive")
        bias = _floats(t[6:], "classifier", 1)[0]
        block = np.empty((nsv, N_FEATURES + 1))
        for k in range(nsv):
            t = take("sv")
            if t[:1] != ["sv"]:
                raise CorruptSection("sv")
            block[k] = _floats(t[1:], "sv", N_FEATURES + 1)
        classifiers.append(BinarySvmModel(block[:, 1:].copy(), block[:, 0].copy(), bias, kernel,
                                          (PHASES[a], PHASES[b])))
    t = take("end")
    if t != ["end"]:
        raise CorruptSection("end")
    return OvoModel(Standardizer(np.array(means), np.array(stds)), classifiers, kernel)


def load_model(path) -> OvoModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise CorruptSection("header", "not UTF-8 text") from None
    return loads_model(text)
