"""BPSK modulation and the AWGN channel, with Eb/N0 bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    """Signal energy E and one-sided noise density N0 (both linear, > 0)."""

    E: float
    N0: float

    def __post_init__(self):
        if self.E <= 0:
            raise ValueError(f"E must be positive, got {self.E}")
        if self.N0 <= 0:
            raise ValueError(f"N0 must be positive, got {self.N0}")

    @property
    def sigma_sq(self) -> float:
        """Noise variance per dimension, N0/2."""
        return self.N0 / 2.0


def bpsk_map(x) -> np.ndarray:
    """Antipodal mapping s = 1 - 2x: bit 0 -> +1, bit 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(x, dtype=float)


def transmit(s, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """y = sqrt(E) s + w with w i.i.d. zero-mean Gaussian of variance N0/2.

    Reproducible: the same generator state yields the same output.
    """
    s = np.asarray(s, dtype=float)
    return sqrt(params.E) * s + rng.normal(0.0, sqrt(params.sigma_sq), size=s.shape)


def ebn0_to_params(ebn0_db: float, N: int, K: int) -> ChannelParams:
    """Fix E = 1 and derive N0 from a rate-adjusted Eb/N0 in dB.

    N channel symbols carry K information bits, so Eb = E * N / K and
    N0 = Eb / 10**(ebn0_db / 10).
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    eb = float(N) / float(K)
    return ChannelParams(E=1.0, N0=eb / 10.0 ** (ebn0_db / 10.0))


def trial_rng(master_seed: int, point_index: int, trial_index: int) -> np.random.Generator:
    """Per-trial random source seeded with (master_seed, point_index, trial_index).

    The splitting rule makes every trial independent and reproducible, so
    trials may run concurrently without sharing generator state.
    """
    return np.random.default_rng(
        np.random.SeedSequence((master_seed, point_index, trial_index))
    )
