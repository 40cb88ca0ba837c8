import io
import math
import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sphdec import (
    MetricKind,
    StackLimitExceeded,
    bit_reverse_permute,
    bpsk_map,
    build_generator,
    build_metric_table,
    construct_polar,
    construct_rm,
    ebn0_to_params,
    encode,
    ml_oracle,
    stack_sphere_decode,
    transmit,
    trial_rng,
)
from sphdec import ChannelParams
from sphdec.decoder import DecodeStats


def random_block(spec, rng):
    v = np.zeros(spec.N, dtype=np.uint8)
    v[spec.info_positions] = rng.integers(0, 2, size=spec.K, dtype=np.uint8)
    return bit_reverse_permute(v), v


def received(spec, params, rng):
    u, v = random_block(spec, rng)
    x, _ = encode(u, spec)
    return u, v, transmit(bpsk_map(x), params, rng)


def reference_decode(y, spec, params, kind):
    """Re-sorted-list realization of the same search, as an equivalence oracle.

    Keeps the whole stack in a plain list and sorts it on every iteration by
    (metric desc, level asc, bit asc, sed asc, suffix asc); symbols come from
    a fresh column sum over the generator per extension, not from cached
    parities.
    """
    y = np.asarray(y, dtype=float)
    N = spec.N
    sq_e = math.sqrt(params.E)
    table = build_metric_table(y, params.E, params.N0, kind)
    g = build_generator(spec.n)
    stack = [
        {"metric": 0.0, "level": N + 1, "bit": 0, "sed": 0.0, "bits": {}}
    ]
    r_sq = math.inf
    best = None
    visits = pops = updates = 0
    peak = 1
    while stack:
        stack.sort(
            key=lambda e: (
                -e["metric"],
                (e["level"] << 1) | e["bit"],
                e["sed"],
                sum(b << (l - 1) for l, b in e["bits"].items()),
            )
        )
        top = stack.pop(0)
        pops += 1
        if top["sed"] >= r_sq:
            continue
        if top["level"] == 1:
            best = top["bits"]
            r_sq = top["sed"]
            updates += 1
            continue
        level = top["level"] - 1
        choices = (0,) if spec.frozen_mask[level - 1] else (0, 1)
        for b in choices:
            visits += 1
            bits = dict(top["bits"])
            bits[level] = b
            symbol = 1 - 2 * (
                sum(g.entry(j, level) * bits.get(j, 0) for j in range(level, N + 1)) % 2
            )
            sed = top["sed"] + (float(y[level - 1]) - sq_e * symbol) ** 2
            metric = top["metric"] + table.increment(symbol, level)
            if sed < r_sq:
                stack.append(
                    {"metric": metric, "level": level, "bit": b, "sed": sed, "bits": bits}
                )
        peak = max(peak, len(stack))
    v_hat = np.zeros(N, dtype=np.uint8)
    for l, b in best.items():
        v_hat[l - 1] = b
    return v_hat, r_sq, DecodeStats(visits, pops, peak, updates)


CODES = [construct_polar(3, 4), construct_polar(3, 8), construct_polar(4, 8), construct_rm(3, 4)]


@pytest.mark.parametrize("kind", list(MetricKind))
def test_matches_reference_implementation(kind):
    for spec in CODES:
        for ebn0 in (0.0, 4.0):
            params = ebn0_to_params(ebn0, spec.N, spec.K)
            for t in range(15):
                rng = trial_rng(100, 0, t)
                _, _, y = received(spec, params, rng)
                got = stack_sphere_decode(y, spec, params, kind)
                v_ref, r_ref, stats_ref = reference_decode(y, spec, params, kind)
                assert np.array_equal(got.v_hat, v_ref)
                assert got.final_radius_sq == r_ref
                assert got.stats == stats_ref


def test_traced_run_equals_untraced():
    spec = construct_polar(4, 8)
    params = ebn0_to_params(1.0, 16, 8)
    for kind in MetricKind:
        for t in range(25):
            rng = trial_rng(101, 0, t)
            _, _, y = received(spec, params, rng)
            plain = stack_sphere_decode(y, spec, params, kind)
            traced = stack_sphere_decode(
                y, spec, params, kind, trace=io.StringIO(), check_single_visit=True
            )
            assert np.array_equal(plain.v_hat, traced.v_hat)
            assert plain.stats == traced.stats


def test_hand_example_two_bits():
    spec = construct_polar(1, 2)
    params = ChannelParams(E=1.0, N0=1.0)
    y = np.array([0.9, -0.2])
    for kind in MetricKind:
        res = stack_sphere_decode(y, spec, params, kind)
        assert res.v_hat.tolist() == [1, 1]
        assert res.final_radius_sq == pytest.approx(0.65)
    oracle = ml_oracle(y, spec, params)
    assert oracle.v_hat.tolist() == [1, 1]
    assert oracle.final_radius_sq == pytest.approx(0.65)
    assert oracle.tie_count == 1


def test_noiseless_decode():
    spec = construct_polar(4, 8)
    params = ChannelParams(E=1.0, N0=1e-300)
    rng = np.random.default_rng(5)
    for _ in range(10):
        u, v = random_block(spec, rng)
        x, _ = encode(u, spec)
        y = transmit(bpsk_map(x), params, rng)
        for kind in MetricKind:
            res = stack_sphere_decode(y, spec, params, kind)
            assert np.array_equal(res.u_hat, u)
            assert res.final_radius_sq == 0.0
            if kind in (MetricKind.M1, MetricKind.M2):
                # guided search generates at most two children per level
                assert res.stats.node_visits <= 2 * spec.N


def test_matches_exhaustive_oracle():
    spec = construct_polar(4, 8)
    params = ChannelParams(E=1.0, N0=1.0)
    for t in range(250):
        rng = trial_rng(7, 0, t)
        _, _, y = received(spec, params, rng)
        oracle = ml_oracle(y, spec, params)
        for kind in MetricKind:
            res = stack_sphere_decode(y, spec, params, kind)
            assert np.array_equal(res.v_hat, oracle.v_hat)


def test_metric_invariant_result():
    spec = construct_rm(4, 11)
    params = ebn0_to_params(2.0, 16, 11)
    for t in range(50):
        rng = trial_rng(8, 0, t)
        _, _, y = received(spec, params, rng)
        results = [stack_sphere_decode(y, spec, params, k) for k in MetricKind]
        for r in results[1:]:
            assert np.array_equal(r.v_hat, results[0].v_hat)
            assert r.final_radius_sq == results[0].final_radius_sq


def test_frozen_positions_zero():
    spec = construct_polar(4, 6)
    params = ebn0_to_params(0.0, 16, 6)
    for t in range(40):
        rng = trial_rng(9, 0, t)
        _, _, y = received(spec, params, rng)
        res = stack_sphere_decode(y, spec, params, MetricKind.M1)
        assert np.all(res.v_hat[spec.frozen_positions] == 0)
        assert np.array_equal(res.u_hat, bit_reverse_permute(res.v_hat))


def test_stats_invariants():
    spec = construct_polar(4, 8)
    params = ebn0_to_params(1.0, 16, 8)
    for t in range(40):
        rng = trial_rng(10, 0, t)
        _, _, y = received(spec, params, rng)
        for kind in MetricKind:
            st_ = stack_sphere_decode(y, spec, params, kind).stats
            assert st_.node_visits >= spec.N
            assert st_.pops <= st_.node_visits + 1
            assert st_.radius_updates >= 1
            assert st_.max_stack >= 1


def test_trace_records_shrinking_radius():
    spec = construct_polar(4, 8)
    params = ebn0_to_params(0.0, 16, 8)
    rng = trial_rng(11, 0, 0)
    _, _, y = received(spec, params, rng)
    sink = io.StringIO()
    stack_sphere_decode(y, spec, params, MetricKind.M0, trace=sink)
    lines = sink.getvalue().splitlines()
    assert lines, "trace is empty"
    pat = re.compile(r"^level=(\d+) sed=(\S+) metric=(\S+) action=(expand|record|prune)$")
    radii = []
    for line in lines:
        m = pat.match(line)
        assert m, line
        if m.group(4) == "record":
            radii.append(float(m.group(2)))
    assert radii == sorted(radii, reverse=True)
    assert len(radii) == len(set(radii))  # strictly decreasing


def test_trace_noiseless_dive_order():
    # guided search drills straight down: levels N+1..2 expand, then a record
    spec = construct_polar(3, 8)
    params = ChannelParams(E=1.0, N0=1e-300)
    u = np.zeros(8, dtype=np.uint8)
    x, _ = encode(u, spec)
    y = bpsk_map(x)
    sink = io.StringIO()
    stack_sphere_decode(y, spec, params, MetricKind.M1, trace=sink)
    actions = [line.split("action=")[1] for line in sink.getvalue().splitlines()]
    levels = [int(line.split()[0].split("=")[1]) for line in sink.getvalue().splitlines()]
    assert actions[:9] == ["expand"] * 8 + ["record"]
    assert levels[:9] == list(range(9, 0, -1))


def test_stack_limit():
    spec = construct_polar(4, 8)
    params = ebn0_to_params(0.0, 16, 8)
    rng = trial_rng(12, 0, 0)
    _, _, y = received(spec, params, rng)
    with pytest.raises(StackLimitExceeded):
        stack_sphere_decode(y, spec, params, MetricKind.M0, stack_limit=2)
    with pytest.raises(StackLimitExceeded):
        stack_sphere_decode(
            y, spec, params, MetricKind.M1, stack_limit=2, trace=io.StringIO()
        )


def test_input_validation():
    spec = construct_polar(3, 4)
    params = ChannelParams(E=1.0, N0=1.0)
    with pytest.raises(ValueError):
        stack_sphere_decode(np.zeros(7), spec, params, MetricKind.M1)
    with pytest.raises(ValueError):
        ml_oracle(np.zeros(7), spec, params)


def test_oracle_all_zero_tie():
    spec = construct_polar(3, 4)
    params = ChannelParams(E=1.0, N0=1.0)
    res = ml_oracle(np.zeros(8), spec, params)
    assert res.v_hat.sum() == 0
    assert res.tie_count == 2 ** 4
    assert res.final_radius_sq == pytest.approx(8.0)


def test_oracle_refuses_large_k():
    spec = construct_polar(5, 21)
    params = ChannelParams(E=1.0, N0=1.0)
    with pytest.raises(ValueError):
        ml_oracle(np.zeros(32), spec, params)


@settings(deadline=None, max_examples=20)
@given(st.integers(0, 2 ** 32 - 1))
def test_decode_beats_or_ties_any_codeword(seed):
    # returned SED is never above the distance of the transmitted codeword
    spec = construct_polar(3, 5)
    params = ebn0_to_params(1.0, 8, 5)
    rng = np.random.default_rng(seed)
    u, v = random_block(spec, rng)
    x, _ = encode(u, spec)
    s = bpsk_map(x)
    y = transmit(s, params, rng)
    res = stack_sphere_decode(y, spec, params, MetricKind.M2)
    sent_sed = float(np.sum((y - s) ** 2))
    assert res.final_radius_sq <= sent_sed + 1e-9
