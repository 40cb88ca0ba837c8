"""Best-first stack sphere decoding over the code tree, plus a brute-force
maximum-likelihood reference decoder.

The code tree has depth N; the branch at depth N - i + 1 fixes bit v_i, so a
partial path covers the suffix v_i..v_N and the root is the null path at
level N + 1.  Because the transform is lower triangular, each decided level
emits one channel symbol, and the symbol at level l is the running parity of
the already-decided bits at l plus the new bit.

Search state lives in a max-priority heap of tuples

    (-metric, level*2 + last_bit, sed, v_mask, parity_mask)

so pops come in descending metric order with ties broken deeper-path-first,
then bit 0 before bit 1 (the packed second field orders exactly that way).
``v_mask`` and ``parity_mask`` are int bitmasks (bit l-1 holds position l);
copying them per child is O(N) at worst.

The search keeps a shrinking squared radius: the first full path popped sets
it, later full paths must beat it strictly, and children are pushed only
while their SED is strictly inside it.  Entries already in the heap when the
radius shrinks are discarded lazily when popped; once the heap grows past a
threshold, stale entries are additionally dropped in an amortized bulk purge
(identical results, bounded memory).  Wrong values on frozen levels are never
materialized, so no SED is ever infinite.  Each distinct partial path is
generated at most once, whatever the metric kind, and the returned path
minimizes the SED over all valid codewords (exact ML); on an exact SED tie
the first path found wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from heapq import heapify, heappop, heappush
from math import inf, sqrt

import numpy as np

from .channel import ChannelParams
from .codes import CodeSpec, bit_reverse_permute, build_generator
from .metrics import MetricKind, build_metric_table


class StackLimitExceeded(RuntimeError):
    """Raised when the optional cap on stack occupancy is exceeded."""


# bulk-purge stale heap entries only past this size (amortized O(1) per push)
_PURGE_MIN = 1 << 18


@dataclass
class DecodeStats:
    """Search-effort counters for one decode.

    node_visits counts child paths generated during expansion (frozen levels
    generate one child, information levels two); pops counts entries taken
    off the stack one at a time, including lazily discarded stale ones (bulk
    purges are not counted); max_stack is the peak stack occupancy including
    stale entries; radius_updates counts recorded full paths.
    """

    node_visits: int = 0
    pops: int = 0
    max_stack: int = 0
    radius_updates: int = 0


@dataclass(eq=False)
class DecodeResult:
    """Decoder output.

    ``u_hat`` is the bit-reversal of ``v_hat``; ``final_radius_sq`` is the
    SED of the returned path.  ``tie_count`` is populated only by the
    exhaustive decoder: the number of candidates achieving the minimum SED.
    """

    u_hat: np.ndarray
    v_hat: np.ndarray
    final_radius_sq: float
    stats: DecodeStats
    tie_count: int | None = None


def stack_sphere_decode(
    y,
    spec: CodeSpec,
    params: ChannelParams,
    kind: MetricKind = MetricKind.M1,
    *,
    stack_limit: int | None = None,
    trace=None,
    check_single_visit: bool = False,
) -> DecodeResult:
    """Decode one received vector by best-first search under ``kind``.

    Parameters
    ----------
    y : array of N reals
        Channel output.
    spec, params : code and channel description.
    kind : MetricKind
        Stack-ordering key.  The decoded codeword is the exact SED minimizer
        for every kind; only the search effort differs.
    stack_limit : int, optional
        Hard cap on stack occupancy; raises StackLimitExceeded when crossed.
        Default: unbounded.
    trace : writable text sink, optional
        One line per pop: ``level=.. sed=.. metric=.. action=..`` with action
        in {expand, record, prune}.  Stale entries dropped by a bulk purge
        produce no line.
    check_single_visit : bool
        Debug mode: assert that no partial path is generated twice.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (spec.N,):
        raise ValueError(f"received vector must have length {spec.N}, got {y.shape}")
    N = spec.N
    sq_e = sqrt(params.E)
    kind = MetricKind(kind)
    if kind is MetricKind.M0 and trace is None and not check_single_visit:
        best, r_sq, stats = _search_m0(y, spec, sq_e, stack_limit)
        return _finish(best, r_sq, stats, N)
    if kind is MetricKind.M0:
        # integer sort keys; the length metric is redundant with the level
        inc0 = inc1 = [1] * N
        zero = 0
    else:
        table = build_metric_table(y, params.E, params.N0, kind)
        # increments indexed by the emitted bit (bit 0 -> symbol +1)
        inc0 = table.plus.tolist()
        inc1 = table.minus.tolist()
        zero = 0.0
    # fused per-level (sed increment, metric increment), indexed by emitted bit
    delta0 = [((t - sq_e) ** 2, m) for t, m in zip(y.tolist(), inc0)]
    delta1 = [((t + sq_e) ** 2, m) for t, m in zip(y.tolist(), inc1)]
    frozen = spec.frozen_mask.tolist()
    rows = build_generator(spec.n).row_masks
    below = [rows[j] & ((1 << j) - 1) for j in range(N)]
    vbit = [1 << j for j in range(N)]

    push = heappush
    pop = heappop
    # entry: (-metric, level*2 + last_bit, sed, v_mask, parity_mask)
    heap: list = []
    entry = (zero, (N + 1) << 1, 0.0, 0, 0)
    r_sq = inf
    best = -1
    visits = pops = updates = 0
    peak = 1
    purge_at = _PURGE_MIN
    seen = {((N + 1) << 1, 0)} if check_single_visit else None
    tw = trace.write if trace is not None else None

    # A generated child that outranks the heap top is processed in hand
    # instead of being pushed and immediately popped; the dispatch uses the
    # same tuple order as the heap, so the pop sequence is unchanged.
    while True:
        if entry is None:
            if not heap:
                break
            entry = pop(heap)
        neg_m, lvlbit, sed, v_mask, par = entry
        entry = None
        pops += 1
        if sed >= r_sq:
            if tw is not None:
                tw(f"level={lvlbit >> 1} sed={sed!r} metric={-neg_m!r} action=prune\n")
            continue
        level = lvlbit >> 1
        if level == 1:
            best = v_mask
            r_sq = sed
            updates += 1
            if tw is not None:
                tw(f"level={level} sed={sed!r} metric={-neg_m!r} action=record\n")
            continue
        if tw is not None:
            tw(f"level={level} sed={sed!r} metric={-neg_m!r} action=expand\n")
        j = level - 2
        c0 = (level - 1) << 1
        pbit = (par >> j) & 1

        visits += 1
        ds, dm = delta1[j] if pbit else delta0[j]
        child_sed = sed + ds
        e0 = (neg_m - dm, c0, child_sed, v_mask, par) if child_sed < r_sq else None
        e1 = None
        if not frozen[j]:
            visits += 1
            ds, dm = delta0[j] if pbit else delta1[j]
            child_sed = sed + ds
            if child_sed < r_sq:
                e1 = (neg_m - dm, c0 | 1, child_sed,
                      v_mask | vbit[j], par ^ below[j])
        if seen is not None:
            keys = [(c0, v_mask)]
            if not frozen[j]:
                keys.append((c0 | 1, v_mask | vbit[j]))
            for key in keys:
                if key in seen:
                    raise AssertionError(f"partial path generated twice: {key}")
                seen.add(key)

        if e0 is not None:
            if e1 is not None:
                if e1 < e0:
                    e0, e1 = e1, e0
                push(heap, e1)
            if heap and heap[0] < e0:
                push(heap, e0)
            else:
                entry = e0
        elif e1 is not None:
            if heap and heap[0] < e1:
                push(heap, e1)
            else:
                entry = e1

        hl = len(heap) if entry is None else len(heap) + 1
        if hl > peak:
            peak = hl
            if stack_limit is not None and hl > stack_limit:
                raise StackLimitExceeded(
                    f"stack occupancy {hl} exceeded limit {stack_limit}"
                )
        if hl >= purge_at:
            heap = [e for e in heap if e[2] < r_sq]
            heapify(heap)
            purge_at = max(_PURGE_MIN, 2 * len(heap))

    return _finish(best, r_sq, DecodeStats(visits, pops, peak, updates), N)


def _search_m0(y, spec, sq_e, stack_limit):
    """Hot path for the length-first metric, pop-order-identical to the
    generic loop.

    The length key is an affine function of the level, so ordering by
    (level*2 + bit, sed, ...) reproduces (-metric, level*2 + bit, sed, ...)
    exactly and the entries shrink to (lvlbit, sed, v_mask, parity).  A
    generated child is strictly deeper than every stacked entry, hence
    always processed in hand.
    """
    N = spec.N
    sed0 = [(t - sq_e) ** 2 for t in y.tolist()]
    sed1 = [(t + sq_e) ** 2 for t in y.tolist()]
    frozen = spec.frozen_mask.tolist()
    rows = build_generator(spec.n).row_masks
    below = [rows[j] & ((1 << j) - 1) for j in range(N)]
    vbit = [1 << j for j in range(N)]

    push = heappush
    pop = heappop
    heap: list = []
    entry = ((N + 1) << 1, 0.0, 0, 0)
    r_sq = inf
    best = -1
    visits = pops = updates = 0
    peak = 1
    purge_at = _PURGE_MIN

    while True:
        if entry is None:
            if not heap:
                break
            entry = pop(heap)
        lvlbit, sed, v_mask, par = entry
        entry = None
        pops += 1
        if sed >= r_sq:
            continue
        level = lvlbit >> 1
        if level == 1:
            best = v_mask
            r_sq = sed
            updates += 1
            continue
        j = level - 2
        c0 = (level - 1) << 1
        pbit = (par >> j) & 1

        visits += 1
        child_sed = sed + (sed1[j] if pbit else sed0[j])
        e0 = (c0, child_sed, v_mask, par) if child_sed < r_sq else None
        e1 = None
        if not frozen[j]:
            visits += 1
            child_sed = sed + (sed0[j] if pbit else sed1[j])
            if child_sed < r_sq:
                e1 = (c0 | 1, child_sed, v_mask | vbit[j], par ^ below[j])

        if e0 is not None:
            if e1 is not None:
                push(heap, e1)
            entry = e0
        elif e1 is not None:
            entry = e1

        hl = len(heap) if entry is None else len(heap) + 1
        if hl > peak:
            peak = hl
            if stack_limit is not None and hl > stack_limit:
                raise StackLimitExceeded(
                    f"stack occupancy {hl} exceeded limit {stack_limit}"
                )
        if hl >= purge_at:
            heap = [e for e in heap if e[1] < r_sq]
            heapify(heap)
            purge_at = max(_PURGE_MIN, 2 * len(heap))

    return best, r_sq, DecodeStats(visits, pops, peak, updates)


def _finish(best: int, r_sq: float, stats: DecodeStats, N: int) -> DecodeResult:
    if best < 0:
        # unreachable: the radius starts infinite and frozen-valid children
        # always exist, so some full path is always recorded
        raise RuntimeError("decoder defect: search exhausted without a codeword")
    v_hat = np.array([(best >> k) & 1 for k in range(N)], dtype=np.uint8)
    return DecodeResult(
        u_hat=bit_reverse_permute(v_hat),
        v_hat=v_hat,
        final_radius_sq=float(r_sq),
        stats=stats,
    )


_CODEBOOK_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
_CODEBOOK_CACHE_BYTES = 1 << 26
_CHUNK = 1 << 16


def _signal_chunks(spec: CodeSpec):
    """Yield (V, S, start) blocks covering every valid scrambled vector.

    Enumeration is lexicographic in v (information bits of the candidate
    index assigned most-significant-first to ascending positions).  Small
    codebooks are cached per spec; larger ones stream in chunks.
    """
    key = spec.cache_key()
    cached = _CODEBOOK_CACHE.get(key)
    if cached is not None:
        yield cached[0], cached[1], 0
        return
    f = build_generator(spec.n).f
    info = spec.info_positions
    total = 1 << spec.K
    shifts = np.arange(spec.K - 1, -1, -1)
    cache_ok = total * spec.N * 8 <= _CODEBOOK_CACHE_BYTES
    step = total if cache_ok else _CHUNK
    for start in range(0, total, step):
        ms = np.arange(start, min(start + step, total), dtype=np.int64)
        v = np.zeros((ms.size, spec.N), dtype=np.uint8)
        v[:, info] = ((ms[:, None] >> shifts) & 1).astype(np.uint8)
        x = (v @ f) & 1  # uint8 wraparound preserves parity
        s = 1.0 - 2.0 * x.astype(np.float64)
        if cache_ok:
            _CODEBOOK_CACHE[key] = (v, s)
        yield v, s, start


def ml_oracle(y, spec: CodeSpec, params: ChannelParams) -> DecodeResult:
    """Exhaustive minimum-SED decoder over all 2**K valid scrambled vectors.

    Ties are broken toward the lexicographically smallest scrambled vector.
    ``tie_count`` reports how many candidates achieve the minimum; ``stats``
    only records the number of candidates enumerated.  Refuses K > 20.
    """
    if spec.K > 20:
        raise ValueError(f"exhaustive enumeration supports K <= 20, got K={spec.K}")
    y = np.asarray(y, dtype=float)
    if y.shape != (spec.N,):
        raise ValueError(f"received vector must have length {spec.N}, got {y.shape}")
    sq_e = sqrt(params.E)
    base = float(y @ y) + params.E * spec.N
    best_d = inf
    best_v = best_s = None
    ties = 0
    for v, s, _start in _signal_chunks(spec):
        d = base - 2.0 * sq_e * (s @ y)
        k = int(np.argmin(d))
        d_min = float(d[k])
        if d_min < best_d:
            best_d = d_min
            best_v = v[k].copy()
            best_s = s[k]
            ties = int(np.count_nonzero(d == d_min))
        elif d_min == best_d:
            ties += int(np.count_nonzero(d == d_min))
    sed = float(np.sum((y - sq_e * best_s) ** 2))
    return DecodeResult(
        u_hat=bit_reverse_permute(best_v),
        v_hat=best_v,
        final_radius_sq=sed,
        stats=DecodeStats(node_visits=1 << spec.K, pops=0, max_stack=0, radius_updates=0),
        tie_count=ties,
    )
