import dataclasses
import math

import numpy as np
import pytest

from qrelay.analytics import (ChainConfig, SnrPoint, noise_single_relay,
                              optimal_position_single, optimal_positions,
                              optimize_positions_numeric, qber_from_snr,
                              range_enhancement, raw_rate,
                              snr_n_relays, snr_no_relay, solve_range_alpha_x)
from qrelay.chain import chain_noise, run_chain
from qrelay.errors import ConvergenceError


def test_chain_config_validation():
    cfg = ChainConfig(distance_km=100.0)
    assert cfg.alpha_x == pytest.approx(5.0)
    assert cfg.eta == 0.5 and cfg.p_dark == 1e-5 and cfg.n_relays == 0
    with pytest.raises(ValueError):
        ChainConfig(distance_km=-1.0)
    with pytest.raises(ValueError):
        ChainConfig(distance_km=10.0, atten_per_km=-0.05)
    with pytest.raises(ValueError):
        ChainConfig(distance_km=10.0, eta=1.2)
    with pytest.raises(ValueError):
        ChainConfig(distance_km=10.0, eta=0.999, p_dark=0.01)
    with pytest.raises(ValueError):
        ChainConfig(distance_km=10.0, n_relays=-1)
    with pytest.raises(ValueError):
        ChainConfig(distance_km=10.0, n_relays=1, positions_km=(11.0,))
    with pytest.raises(ValueError):
        ChainConfig(distance_km=10.0, n_relays=2, positions_km=(6.0, 4.0))
    with pytest.raises(ValueError):
        ChainConfig(distance_km=10.0, n_relays=2, positions_km=(4.0,))
    two = ChainConfig(distance_km=10.0, n_relays=2, positions_km=(4.0, 4.0))
    assert two.positions_km == (4.0, 4.0)
    moved = two.with_positions((3.0, 7.0))
    assert moved.positions_km == (3.0, 7.0)
    assert two.positions_km == (4.0, 4.0)


def test_qber_from_snr():
    assert qber_from_snr(math.inf) == 0.0
    assert qber_from_snr(0.0) == 0.5
    assert qber_from_snr(1.0) == 0.25
    with pytest.raises(ValueError):
        qber_from_snr(-0.5)
    # strictly decreasing, image inside (0, 1/2]
    grid = np.logspace(-3, 6, 40)
    vals = [qber_from_snr(s) for s in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(0.0 < v <= 0.5 for v in vals)


def test_snr_no_relay():
    assert snr_no_relay(1e-5, 0.0) == pytest.approx(5e4)
    assert snr_no_relay(1e-5, 10.0) == pytest.approx(5e4 * math.exp(-10.0))
    assert math.isinf(snr_no_relay(0.0, 3.0))
    with pytest.raises(ValueError):
        snr_no_relay(-1e-5, 1.0)


def test_snr_n_relays_reduces_to_no_relay():
    for ax in (0.0, 1.0, 5.0, 17.3):
        assert snr_n_relays(ax, 0, 0.5, 1e-5) == snr_no_relay(1e-5, ax)


def test_snr_single_relay_closed_form():
    # S_1 = sqrt(eta) e^{-alpha x / 2} / (4 p_dark)
    for ax in (0.1, 2.0, 10.0, 30.0):
        want = math.sqrt(0.5) * math.exp(-ax / 2) / (4e-5)
        assert snr_n_relays(ax, 1, 0.5, 1e-5) == pytest.approx(want,
                                                               rel=1e-13)


def test_snr_gain_examples():
    # one relay at alpha x = 10 beats direct by about 52.4x
    s0 = snr_no_relay(1e-5, 10.0)
    s1 = snr_n_relays(10.0, 1, 0.5, 1e-5)
    assert s1 / s0 == pytest.approx(math.exp(5.0) / (2 * math.sqrt(2)),
                                    rel=1e-12)
    assert s1 / s0 == pytest.approx(52.4, abs=0.1)
    # two relays at alpha x = 15
    s2 = snr_n_relays(15.0, 2, 0.5, 1e-5)
    gain = s2 / snr_no_relay(1e-5, 15.0)
    assert gain == pytest.approx(math.exp(10.0) / (3 * 0.5 ** (-2 / 3)),
                                 rel=1e-12)
    assert gain == pytest.approx(4625, rel=1e-3)


def test_noise_single_relay():
    cfg = ChainConfig(distance_km=100.0, n_relays=1)
    a = cfg.atten_per_km
    pn = noise_single_relay(40.0, 60.0, cfg)
    want = 2e-5 * (0.5 * math.exp(-a * 40) + math.exp(-a * 60))
    assert pn == pytest.approx(want, rel=1e-15)
    with pytest.raises(ValueError):
        noise_single_relay(40.0, 59.0, cfg)
    # first-order formula tracks the exact chain to O(p_dark)
    exact = chain_noise(cfg, (40.0,))
    assert pn == pytest.approx(exact, rel=1e-3)


def test_optimal_position_single():
    cfg = ChainConfig(distance_km=100.0, n_relays=1)
    x1 = optimal_position_single(cfg)
    assert x1 == pytest.approx(43.06852819440055, abs=1e-12)
    assert x1 == pytest.approx(0.5 * (100.0 + math.log(0.5) / 0.05))
    # lossless relay sits at the midpoint
    even = ChainConfig(distance_km=100.0, n_relays=1, eta=1.0, p_dark=0.0)
    assert optimal_position_single(even) == pytest.approx(50.0)
    # short link: the relay clamps to the transmitter
    short = ChainConfig(distance_km=10.0, n_relays=1)
    assert optimal_position_single(short) == 0.0


def test_optimal_position_single_agrees_with_numeric():
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = float(rng.uniform(20.0, 400.0))
        eta = float(rng.uniform(0.3, 0.9))
        cfg = ChainConfig(distance_km=x, n_relays=1, eta=eta, p_dark=1e-5)
        analytic = optimal_position_single(cfg)
        numeric = optimize_positions_numeric(
            cfg, lambda p: noise_single_relay(p[0], x - p[0], cfg))[0]
        assert abs(numeric - analytic) <= 1e-6 * max(1.0, x)


def test_optimal_positions_layout():
    cfg = ChainConfig(distance_km=100.0, n_relays=3)
    pos = optimal_positions(cfg)
    assert pos == pytest.approx(
        (21.534264097200273, 43.068528194400546, 64.60279229160082),
        abs=1e-9)
    # equal interior spacing d, final segment d + delta
    delta = -math.log(cfg.eta) / cfg.atten_per_km
    d = (100.0 - delta) / 4
    assert pos[0] == pytest.approx(d)
    assert pos[1] - pos[0] == pytest.approx(d)
    assert pos[2] - pos[1] == pytest.approx(d)
    assert 100.0 - pos[2] == pytest.approx(d + delta)
    # lossless relays divide the span evenly
    even = optimal_positions(ChainConfig(distance_km=100.0, n_relays=4,
                                         eta=1.0, p_dark=0.0))
    assert even == pytest.approx((20.0, 40.0, 60.0, 80.0))
    # all relays clamp to zero when the link is shorter than delta
    clamped = optimal_positions(ChainConfig(distance_km=10.0, n_relays=2))
    assert clamped == (0.0, 0.0)
    # n = 1 consistency with the dedicated solver
    one = ChainConfig(distance_km=123.0, n_relays=1, eta=0.4)
    assert optimal_positions(one)[0] == pytest.approx(
        optimal_position_single(one), abs=1e-12)
    assert optimal_positions(ChainConfig(distance_km=50.0)) == ()


def test_optimal_positions_refined_close_to_closed_form():
    cfg = ChainConfig(distance_km=150.0, n_relays=2)
    base = optimal_positions(cfg)
    fine = optimal_positions(cfg, refine=True)
    for b, f in zip(base, fine):
        assert abs(b - f) <= 1e-3 * 150.0
    assert chain_noise(cfg, fine) <= chain_noise(cfg, base) * (1 + 1e-12)


def test_numeric_optimum_multi_start():
    # different starting layouts must land on the same minimum
    for n in (2, 4):
        cfg = ChainConfig(distance_km=200.0, n_relays=n)
        x = cfg.distance_km
        objective = lambda p: chain_noise(cfg, p)
        uniform = tuple(x * (i + 1) / (n + 1) for i in range(n))
        jitter = tuple(min(x, max(0.0, u + ((-1) ** i) * 0.07 * x))
                       for i, u in enumerate(uniform))
        sols = [optimize_positions_numeric(cfg, objective, x0=s)
                for s in (None, uniform, jitter)]
        vals = [objective(s) for s in sols]
        for s in sols[1:]:
            assert max(abs(a - b) for a, b in zip(s, sols[0])) <= 1e-5 * x
        assert max(vals) - min(vals) <= 1e-9 * min(vals)


def test_numeric_optimum_matches_closed_form_spacing():
    cfg = ChainConfig(distance_km=200.0, n_relays=3)
    got = optimize_positions_numeric(cfg, lambda p: chain_noise(cfg, p))
    want = optimal_positions(cfg)
    # first-order placement is already within a small fraction of the span
    for g, w in zip(got, want):
        assert abs(g - w) <= 5e-3 * cfg.distance_km


def test_perturbed_placement_increases_noise():
    for n in (1, 2, 3):
        cfg = ChainConfig(distance_km=180.0, n_relays=n)
        objective = lambda p: chain_noise(cfg, p)
        best = optimize_positions_numeric(cfg, objective)
        base = objective(best)
        for k in range(n):
            for sign in (-1.0, 1.0):
                moved = list(best)
                moved[k] = min(cfg.distance_km,
                               max(0.0, moved[k] * (1 + 0.01 * sign)))
                assert objective(tuple(moved)) > base
        # and the spec-level guarantee: within one percent of the optimum
        closed = optimal_positions(cfg)
        assert objective(closed) <= base * 1.01


def test_convergence_error_carries_best():
    cfg = ChainConfig(distance_km=150.0, n_relays=2)
    with pytest.raises(ConvergenceError) as exc:
        optimize_positions_numeric(cfg, lambda p: chain_noise(cfg, p),
                                   max_sweeps=0)
    assert len(exc.value.best_positions) == 2
    assert exc.value.best_value > 0


def test_solve_range_alpha_x():
    assert solve_range_alpha_x(0, 0.5, 1e-5, 1.0) == pytest.approx(
        10.819778284410283, abs=1e-12)
    assert solve_range_alpha_x(1, 0.5, 1e-5, 1.0) == pytest.approx(
        19.56011502714073, abs=1e-12)
    # the returned range actually achieves the target SNR
    for n in (0, 1, 3):
        ax = solve_range_alpha_x(n, 0.5, 1e-5, 2.0)
        assert snr_n_relays(ax, n, 0.5, 1e-5) == pytest.approx(2.0, rel=1e-12)
    # no positive range exists when even alpha x = 0 misses the target
    with pytest.raises(ValueError):
        solve_range_alpha_x(0, 0.5, 0.3, 10.0)
    with pytest.raises(ValueError):
        solve_range_alpha_x(0, 0.5, 1e-5, 0.0)


def test_range_enhancement():
    r = range_enhancement(1, 0.5, 1e-5, 1.0)
    assert r.approx == pytest.approx(1.8193820026016112, abs=1e-12)
    assert r.exact == pytest.approx(1.8078110764361957, abs=1e-12)
    assert abs(r.approx - r.exact) / r.exact < 0.05
    none = range_enhancement(0, 0.5, 1e-5, 1.0)
    assert none.approx == 1.0 and none.exact == 1.0


def test_range_enhancement_envelope():
    # closed-form envelope vs exact ratio stays under five percent whenever
    # p_dark * s_target <= 1e-4 and n <= 8
    for pd, s in ((1e-5, 1.0), (1e-6, 10.0), (1e-4, 1.0), (1e-7, 1e3)):
        for n in (1, 2, 4, 8):
            r = range_enhancement(n, 0.5, pd, s)
            assert abs(r.approx - r.exact) / r.exact < 0.05


def test_raw_rate():
    assert raw_rate(1e11, 0.0) == pytest.approx(1e11)
    assert raw_rate(1e11, 25.0) == pytest.approx(1.388794386496402, rel=1e-12)
    with pytest.raises(ValueError):
        raw_rate(-1.0, 1.0)


def test_relay_gain_crossover():
    # at short range the relay overhead dominates; the crossover range grows
    # with the number of relays
    for n in (1, 2, 4):
        assert snr_n_relays(0.0, n, 0.5, 1e-5) < snr_no_relay(1e-5, 0.0)

    def crossover(n):
        lo, hi = 0.0, 80.0
        f = lambda ax: (snr_n_relays(ax, n, 0.5, 1e-5)
                        - snr_no_relay(1e-5, ax))
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if f(mid) > 0:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    xs = [crossover(n) for n in (1, 2, 3, 4)]
    assert all(a < b for a, b in zip(xs, xs[1:]))


def test_snr_point_container():
    pt = SnrPoint(alpha_x=5.0, s=1450.0, q_b=3.4e-4)
    assert pt.alpha_x == 5.0 and pt.s == 1450.0 and pt.q_b == 3.4e-4
    assert dataclasses.is_dataclass(pt)
