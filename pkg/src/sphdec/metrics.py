"""Squared-distance bookkeeping and the stack-ordering path metrics.

Fully expanded paths are judged by their squared Euclidean distance (SED) to
the received vector.  Partial paths are ordered by one of four sort keys,
named by the tags the decoder and CLI use:

  m0  path length (the conventional longest-path-first order),
  m1  exact marginal-likelihood key: scaled correlation of the decided
      suffix minus a log-cosh correction for the undecided prefix,
  m2  high-SNR simplification of m1: sum of y_l * s_l - |y_l|,
  m3  low-SNR simplification of m1 (quadratic expansion of log cosh).

Larger is better for every kind.  Per-level contributions for both symbol
signs are precomputed once per received vector in a 2 x N table, so extending
a path by one level costs a single lookup.  The null path scores 0 under
every kind.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import log, sqrt

import numpy as np

LOG2 = log(2.0)


class MetricKind(str, Enum):
    M0 = "m0"
    M1 = "m1"
    M2 = "m2"
    M3 = "m3"


def log_cosh(z) -> np.ndarray:
    """log cosh z, stable for large |z|.

    Uses |z| - log 2 + log1p(exp(-2|z|)); the naive form overflows once
    |z| exceeds ~710.
    """
    a = np.abs(np.asarray(z, dtype=float))
    return a - LOG2 + np.log1p(np.exp(-2.0 * a))


def sed_extend(parent_sed: float, s: float, y_l: float, E: float) -> float:
    """SED of a path extended by one level: parent + (y_l - sqrt(E) s)**2.

    The null path has SED 0, so the increment is never negative and the SED
    never decreases along a path.
    """
    return parent_sed + (y_l - sqrt(E) * s) ** 2


def path_length_metric(i: int, N: int) -> float:
    """Sort key m0: the number of decided levels, N - i + 1 (null path -> 0)."""
    if not 1 <= i <= N + 1:
        raise ValueError(f"level must be in [1, {N + 1}], got {i}")
    return float(N - i + 1)


def log_cosh_correction(y_suffix, E: float, N0: float) -> float:
    """Correction subtracted in the m1 key for a path covering ``y_suffix``.

    Equals sum(log cosh(2 sqrt(E) y_l / N0)) + m log 2 over the m suffix
    samples; an empty suffix gives 0.
    """
    y = np.asarray(y_suffix, dtype=float)
    if y.size == 0:
        return 0.0
    c = 2.0 * sqrt(E) / N0
    return float(np.sum(log_cosh(c * y)) + y.size * LOG2)


def _suffix(y, m: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if m > y.size:
        raise ValueError(f"suffix of length {m} longer than received vector ({y.size})")
    return y[y.size - m:]


def ml_metric(s_suffix, y, E: float, N0: float) -> float:
    """Sort key m1 evaluated directly on a whole suffix.

    ``s_suffix`` holds the +-1 symbols of the decided levels and lines up
    with the tail of ``y``.  Value: sum(2 sqrt(E) y_l s_l / N0) minus
    log_cosh_correction of the same tail.  Ordering same-level paths by this
    key equals ordering them by their exact marginal likelihood.
    """
    s = np.asarray(s_suffix, dtype=float)
    if s.size == 0:
        return 0.0
    ys = _suffix(y, s.size)
    c = 2.0 * sqrt(E) / N0
    return float(np.sum(c * ys * s)) - log_cosh_correction(ys, E, N0)


def high_snr_metric(s_suffix, y) -> float:
    """Sort key m2: sum of y_l s_l - |y_l| over the decided suffix.

    Always <= 0, with equality iff every decided symbol matches the sign of
    the received sample (zero samples count as matches).  Independent of E
    and N0, which enter m1 only through a positive scale at high SNR.
    """
    s = np.asarray(s_suffix, dtype=float)
    if s.size == 0:
        return 0.0
    ys = _suffix(y, s.size)
    return float(np.sum(ys * s - np.abs(ys)))


def low_snr_metric(s_suffix, y, E: float, N0: float) -> float:
    """Sort key m3: m1 with log cosh z replaced by its small-z expansion z**2/2."""
    s = np.asarray(s_suffix, dtype=float)
    if s.size == 0:
        return 0.0
    ys = _suffix(y, s.size)
    c = 2.0 * sqrt(E) / N0
    return float(np.sum(c * ys * s) - np.sum(0.5 * (c * ys) ** 2) - s.size * LOG2)


@dataclass(eq=False)
class MetricTable:
    """Per-level additive metric contributions for both symbol signs.

    ``plus[l-1]`` (``minus[l-1]``) is the increment when the symbol emitted
    at level l is +1 (-1); the metric of a child path is the parent's metric
    plus one table entry.  ``correction_suffix`` (m1/m3 only) holds the
    running correction: entry l-1 is the correction for the suffix starting
    at level l, and the final entry is 0 for the null path.

    Immutable after construction; one table per decode, shareable read-only.
    """

    kind: MetricKind
    plus: np.ndarray
    minus: np.ndarray
    correction_suffix: np.ndarray | None = None

    def increment(self, s: int, level: int) -> float:
        """Table lookup by symbol sign (+1/-1) and 1-based level."""
        row = self.plus if s > 0 else self.minus
        return float(row[level - 1])


def build_metric_table(y, E: float, N0: float, kind: MetricKind) -> MetricTable:
    """Precompute the 2 x N table of per-level metric increments.

    For m0 the table is all ones (the key counts decided levels).  For the
    others, summing table entries along a path reproduces the direct formula
    to floating-point accuracy.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("received vector must be a nonempty 1-D array")
    kind = MetricKind(kind)
    if kind is MetricKind.M0:
        ones = np.ones(y.size)
        return MetricTable(kind=kind, plus=ones, minus=ones.copy())
    if kind is MetricKind.M2:
        a = np.abs(y)
        return MetricTable(kind=kind, plus=y - a, minus=-y - a)
    c = 2.0 * sqrt(E) / N0
    if kind is MetricKind.M1:
        per_level = log_cosh(c * y) + LOG2
    else:  # M3; the quadratic form may saturate to inf far outside its regime
        with np.errstate(over="ignore"):
            per_level = 0.5 * (c * y) ** 2 + LOG2
    base = -per_level
    suffix = np.concatenate((np.cumsum(per_level[::-1])[::-1], [0.0]))
    return MetricTable(
        kind=kind,
        plus=c * y + base,
        minus=-c * y + base,
        correction_suffix=suffix,
    )


def marginal_likelihood(s_suffix, y, E: float, N0: float) -> float:
    """Exact marginal likelihood of a partial path, by explicit enumeration.

    Sums the Gaussian likelihood P(y | s) over every +-1 completion of the
    undecided prefix, each weighted 2**-(prefix length).  Intended as a test
    oracle for the m1 ordering; refuses prefixes longer than 20 levels.
    """
    y = np.asarray(y, dtype=float)
    s = np.asarray(s_suffix, dtype=float)
    prefix = y.size - s.size
    if prefix < 0:
        raise ValueError("suffix longer than received vector")
    if prefix > 20:
        raise ValueError(f"completion space 2**{prefix} too large to enumerate")
    sq_e = sqrt(E)
    norm = 1.0 / sqrt(np.pi * N0)

    def density(r, mu):
        return norm * np.exp(-((r - mu) ** 2) / N0)

    suffix_lik = float(np.prod(density(y[prefix:], sq_e * s))) if s.size else 1.0
    if prefix == 0:
        return suffix_lik
    shifts = np.arange(prefix - 1, -1, -1)
    d = 1.0 - 2.0 * ((np.arange(1 << prefix)[:, None] >> shifts) & 1)
    completions = np.prod(density(y[:prefix][None, :], sq_e * d), axis=1)
    return suffix_lik * float(np.mean(completions))
