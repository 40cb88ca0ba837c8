"""Polar and Reed-Muller code construction, bit-reversal scrambling, encoding.

Vectors are stored 0-based; storage index l-1 holds position l of the 1-based
convention used in the docstrings.  The transform matrix is lower triangular,
so the codeword symbol at position l depends only on scrambled-vector bits at
positions >= l.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb
from typing import NamedTuple

import numpy as np

KERNEL = np.array([[1, 0], [1, 1]], dtype=np.uint8)

# Dense byte storage of the transform grows as 4**n.
MAX_LOG_LEN = 14

POLAR = "polar-bhattacharyya"
REED_MULLER = "reed-muller"


@dataclass(eq=False)
class GeneratorMatrix:
    """The n-th Kronecker power of the binary kernel [[1, 0], [1, 1]].

    Lower triangular, unit diagonal, and self-inverse over GF(2).  The array
    ``f`` is read-only and safe to share; ``entry`` uses the 1-based (row,
    column) convention.
    """

    n: int
    N: int
    f: np.ndarray

    def entry(self, j: int, i: int) -> int:
        """Element at 1-based (row j, column i)."""
        return int(self.f[j - 1, i - 1])

    @cached_property
    def row_masks(self) -> list[int]:
        """Each row as an int mask: bit i-1 of mask j-1 set iff entry (j, i) = 1."""
        masks = []
        for row in self.f:
            m = 0
            for i in np.flatnonzero(row):
                m |= 1 << int(i)
            masks.append(m)
        return masks


@lru_cache(maxsize=None)
def build_generator(n: int) -> GeneratorMatrix:
    """Construct the scrambled-vector-to-codeword transform for length 2**n."""
    if n < 0 or n > MAX_LOG_LEN:
        raise ValueError(f"n must be in [0, {MAX_LOG_LEN}], got {n}")
    f = np.array([[1]], dtype=np.uint8)
    for _ in range(n):
        f = np.kron(KERNEL, f)
    f.setflags(write=False)
    return GeneratorMatrix(n=n, N=1 << n, f=f)


@lru_cache(maxsize=None)
def _bit_reversed_indices(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    rev = np.zeros_like(idx)
    for _ in range(n):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    rev.setflags(write=False)
    return rev


def bit_reverse_permute(bits) -> np.ndarray:
    """Permute a length-2**n vector by reversing the binary digits of indices.

    The element at 1-based position p moves to the position whose (p-1) n-bit
    representation is reversed, plus one.  The permutation is an involution.
    """
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise ValueError("expected a 1-D vector")
    N = arr.size
    if N < 1 or N & (N - 1):
        raise ValueError(f"length must be a power of two, got {N}")
    return arr[_bit_reversed_indices(N.bit_length() - 1)]


def scramble(u) -> np.ndarray:
    """Source block -> scrambled vector (bit-reversal permutation)."""
    return bit_reverse_permute(u)


def unscramble(v_hat) -> np.ndarray:
    """Scrambled vector -> source block; same permutation, it is self-inverse."""
    return bit_reverse_permute(v_hat)


@dataclass(eq=False)
class CodeSpec:
    """Block code description: length, dimension, and frozen positions.

    ``frozen_mask[l-1] = 1`` marks scrambled-vector position l as frozen
    (held at zero).  Instances are not mutated after construction and are
    safe to share across concurrent decoders.
    """

    n: int
    N: int
    K: int
    frozen_mask: np.ndarray
    construction: str

    def __post_init__(self):
        mask = np.ascontiguousarray(self.frozen_mask, dtype=np.uint8)
        if self.N != 1 << self.n:
            raise ValueError(f"N={self.N} does not equal 2**n for n={self.n}")
        if not 1 <= self.K <= self.N:
            raise ValueError(f"K must be in [1, {self.N}], got {self.K}")
        if mask.shape != (self.N,):
            raise ValueError(f"frozen_mask must have length {self.N}")
        if np.any(mask > 1):
            raise ValueError("frozen_mask must be binary")
        if int(mask.sum()) != self.N - self.K:
            raise ValueError(
                f"frozen_mask marks {int(mask.sum())} positions, expected {self.N - self.K}"
            )
        self.frozen_mask = mask

    @property
    def info_positions(self) -> np.ndarray:
        """0-based information positions in the scrambled vector, ascending."""
        return np.flatnonzero(self.frozen_mask == 0)

    @property
    def frozen_positions(self) -> np.ndarray:
        return np.flatnonzero(self.frozen_mask != 0)

    def cache_key(self) -> tuple:
        return (self.n, self.K, self.construction, self.frozen_mask.tobytes())


def _check_nk(n: int, K: int) -> None:
    if n < 0 or n > MAX_LOG_LEN:
        raise ValueError(f"n must be in [0, {MAX_LOG_LEN}], got {n}")
    if not 1 <= K <= (1 << n):
        raise ValueError(f"K must be in [1, {1 << n}], got {K}")


def bhattacharyya_profile(n: int) -> np.ndarray:
    """Erasure-channel reliability recursion from Z = 0.5.

    Each level replaces Z with the degraded value 2Z - Z**2 followed by the
    upgraded value Z**2; the result is indexed over scrambled-vector
    positions.  Smaller Z means more reliable.
    """
    z = np.array([0.5])
    for _ in range(n):
        z = np.stack((2.0 * z - z * z, z * z), axis=1).ravel()
    return z


def construct_polar(n: int, K: int) -> CodeSpec:
    """(2**n, K) polar code: the K most reliable positions carry information.

    Reliability ties are broken by preferring the larger position index for
    information, so the construction is deterministic.
    """
    _check_nk(n, K)
    N = 1 << n
    z = bhattacharyya_profile(n)
    order = sorted(range(N), key=lambda j: (z[j], -j))
    mask = np.ones(N, dtype=np.uint8)
    mask[order[:K]] = 0
    return CodeSpec(n=n, N=N, K=K, frozen_mask=mask, construction=POLAR)


def rm_dimensions(n: int) -> list[int]:
    """Valid Reed-Muller dimensions for length 2**n (orders r = 0..n)."""
    dims, total = [], 0
    for r in range(n + 1):
        total += comb(n, r)
        dims.append(total)
    return dims


def construct_rm(n: int, K: int) -> CodeSpec:
    """(2**n, K) Reed-Muller code by selecting the K heaviest transform rows.

    Row j has Hamming weight 2**popcount(j-1); a valid dimension K picks
    exactly the rows with popcount(j-1) >= n - r for the matching order r.
    """
    _check_nk(n, K)
    N = 1 << n
    dims = rm_dimensions(n)
    if K not in dims:
        below = max((d for d in dims if d < K), default=None)
        above = min((d for d in dims if d > K), default=None)
        near = ", ".join(str(d) for d in (below, above) if d is not None)
        raise ValueError(
            f"K={K} is not a Reed-Muller dimension for n={n}; nearest valid K: {near}"
        )
    r = dims.index(K)
    mask = np.ones(N, dtype=np.uint8)
    for idx in range(N):
        if idx.bit_count() >= n - r:
            mask[idx] = 0
    return CodeSpec(n=n, N=N, K=K, frozen_mask=mask, construction=REED_MULLER)


def polar_transform(v) -> np.ndarray:
    """x = v F over GF(2) via in-place butterflies, O(N log N).

    Because F is self-inverse, applying this twice returns the input.
    """
    x = np.array(v, dtype=np.uint8)
    N = x.size
    if N < 1 or N & (N - 1):
        raise ValueError(f"length must be a power of two, got {N}")
    step = N
    while step > 1:
        half = step // 2
        blocks = x.reshape(-1, step)
        blocks[:, :half] ^= blocks[:, half:]
        step = half
    return x


class Encoded(NamedTuple):
    """Encoder output: the codeword and the intermediate scrambled vector."""

    x: np.ndarray
    v: np.ndarray


def encode(u, spec: CodeSpec) -> Encoded:
    """Encode a source block: v = scramble(u), x = v F.

    Raises ValueError on wrong length, non-binary entries, or a nonzero bit
    in a frozen position of v.
    """
    u = np.asarray(u, dtype=np.uint8)
    if u.shape != (spec.N,):
        raise ValueError(f"source block must have length {spec.N}")
    if np.any(u > 1):
        raise ValueError("source block must be binary")
    v = bit_reverse_permute(u)
    if np.any(v[spec.frozen_positions] != 0):
        raise ValueError("frozen positions of the scrambled vector must be zero")
    return Encoded(x=polar_transform(v), v=v)


def spec_to_json(spec: CodeSpec) -> dict:
    """JSON document for a code spec.

    ``frozen_mask`` is hex of the big-endian bit packing (position 1 is the
    most significant bit of the first byte); ``info_indices`` are 1-based.
    """
    return {
        "n": spec.n,
        "N": spec.N,
        "K": spec.K,
        "construction": spec.construction,
        "frozen_mask": np.packbits(spec.frozen_mask).tobytes().hex(),
        "info_indices": [int(p) + 1 for p in spec.info_positions],
    }


def spec_from_json(doc: dict) -> CodeSpec:
    """Inverse of spec_to_json; validates counts via the CodeSpec constructor."""
    N = int(doc["N"])
    raw = np.frombuffer(bytes.fromhex(doc["frozen_mask"]), dtype=np.uint8)
    mask = np.unpackbits(raw)[:N]
    return CodeSpec(
        n=int(doc["n"]),
        N=N,
        K=int(doc["K"]),
        frozen_mask=mask,
        construction=str(doc["construction"]),
    )
