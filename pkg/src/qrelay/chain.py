"""Exact slot-by-slot propagation through a relay chain.

A clock slot is tracked as a probability vector over four exclusive events:
the slot still carries the original signal photon, it carries a randomly
polarized spurious photon, it is empty but every relay so far has gated it,
or some relay has already vetoed it. All orders of dark-count events are kept,
so these probabilities are exact for the model, not first-order expansions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analytics import ChainConfig, optimal_positions

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ChannelEventState:
    """Distribution of one clock slot over the four channel events.

    p_sig: original photon still present and so far always gated through.
    p_rnd: a spurious (randomly polarized) photon occupies the slot.
    p_empty: no photon, but no relay has vetoed the slot yet.
    p_nogate: some relay failed to gate; the slot is discarded downstream.
    """

    p_sig: float
    p_rnd: float
    p_empty: float
    p_nogate: float

    def __post_init__(self):
        for name in ("p_sig", "p_rnd", "p_empty", "p_nogate"):
            v = getattr(self, name)
            if v < -_SUM_TOL or v > 1.0 + _SUM_TOL:
                raise ValueError(f"{name} = {v} outside [0, 1]")
            if v < 0.0:
                object.__setattr__(self, name, 0.0)
        total = self.p_sig + self.p_rnd + self.p_empty + self.p_nogate
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"event probabilities sum to {total!r}, not 1")

    @property
    def p_alive(self) -> float:
        """Probability the slot has not been vetoed yet."""
        return self.p_sig + self.p_rnd + self.p_empty


def initial_state() -> ChannelEventState:
    """Slot state at the transmitter: signal photon present with certainty."""
    return ChannelEventState(1.0, 0.0, 0.0, 0.0)


def propagate_segment(state: ChannelEventState,
                      alpha_x_segment: float) -> ChannelEventState:
    """Fiber segment of dimensionless length alpha*dx: survival t = e^(-a dx).

    Lost photons leave the slot empty but still gated; classical gate signals
    do not attenuate. Zero length is the identity, and consecutive segments
    compose additively in alpha*dx.
    """
    if alpha_x_segment < 0:
        raise ValueError(f"segment alpha*dx must be >= 0, "
                         f"got {alpha_x_segment}")
    t = math.exp(-alpha_x_segment)
    lost = (1.0 - t) * (state.p_sig + state.p_rnd)
    return ChannelEventState(t * state.p_sig, t * state.p_rnd,
                             state.p_empty + lost, state.p_nogate)


def apply_relay(state: ChannelEventState, params) -> ChannelEventState:
    """One relay station: gate-and-pass efficiency eta, false gates 2*p_dark.

    ``params`` is any object with eta and p_dark attributes (a ChainConfig
    or a relay parameter set). An incoming photon is gated through with
    probability eta. Independently of what the slot holds, the two detectors
    that fire the gate can dark count, producing a false gate with probability
    2*p_dark per live slot; a false gate launches a randomly polarized photon.
    Slots gated neither way are vetoed and stay vetoed. The map is exactly
    stochastic.
    """
    eta, p_dark = float(params.eta), float(params.p_dark)
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must be in (0, 1], got {eta}")
    if not 0.0 <= p_dark < 0.5:
        raise ValueError(f"p_dark must be in [0, 0.5), got {p_dark}")
    pd2 = 2.0 * p_dark
    if eta + pd2 > 1.0:
        raise ValueError("eta + 2*p_dark exceeds 1")
    sig = eta * state.p_sig
    rnd = eta * state.p_rnd + pd2 * state.p_alive
    nogate = (state.p_nogate
              + (1.0 - eta - pd2) * (state.p_sig + state.p_rnd)
              + (1.0 - pd2) * state.p_empty)
    return ChannelEventState(sig, rnd, 0.0, nogate)


@dataclass(frozen=True)
class ReceiverReport:
    """Detection probabilities per transmitted slot, conditioned on nothing.

    p_s and p_n are per-slot probabilities of a signal detection and of a
    noise detection (spurious photon or receiver dark count in a gated slot).
    snr is their ratio; q_b = p_n / (2 (p_n + p_s)) since random polarization
    errs half the time. A fully vetoed chain yields nan for snr and q_b.
    """

    p_s: float
    p_n: float
    snr: float
    q_b: float


def receiver_detect(state: ChannelEventState, p_dark: float) -> ReceiverReport:
    """Terminal detection on a slot state, with receiver dark rate p_dark."""
    if not 0.0 <= p_dark < 0.5:
        raise ValueError(f"p_dark must be in [0, 0.5), got {p_dark}")
    p_s = state.p_sig
    p_n = state.p_rnd + 2.0 * p_dark * state.p_alive
    if p_n > 0.0:
        snr = p_s / p_n
    elif p_s > 0.0:
        snr = math.inf
    else:
        snr = math.nan
    denom = p_n + p_s
    q_b = 0.5 * p_n / denom if denom > 0.0 else math.nan
    return ReceiverReport(p_s=p_s, p_n=p_n, snr=snr, q_b=q_b)


def _segment_lengths(config: ChainConfig,
                     positions_km: Optional[Sequence[float]]) -> list[float]:
    if positions_km is None:
        positions_km = (config.positions_km if config.positions_km is not None
                        else optimal_positions(config))
    positions_km = tuple(float(p) for p in positions_km)
    if len(positions_km) != config.n_relays:
        raise ValueError(f"{len(positions_km)} positions for "
                         f"{config.n_relays} relays")
    pts = (0.0,) + positions_km + (config.distance_km,)
    lengths = []
    for a, b in zip(pts, pts[1:]):
        seg = b - a
        if seg < -1e-12:
            raise ValueError(f"positions must be non-decreasing within "
                             f"[0, {config.distance_km}], got {positions_km}")
        lengths.append(max(seg, 0.0))
    return lengths


def propagate_chain(config: ChainConfig,
                    positions_km: Optional[Sequence[float]] = None
                    ) -> ChannelEventState:
    """Exact slot state at the receiver input for the configured chain.

    Positions come from the explicit argument, else the config, else the
    analytic optimum. Segments alternate with relays; the receiver detector
    itself is not applied here.
    """
    state = initial_state()
    lengths = _segment_lengths(config, positions_km)
    for i, seg in enumerate(lengths):
        state = propagate_segment(state, config.atten_per_km * seg)
        if i < config.n_relays:
            state = apply_relay(state, config)
    return state


def run_chain(config: ChainConfig,
              positions_km: Optional[Sequence[float]] = None) -> ReceiverReport:
    """Exact receiver statistics for the configured chain."""
    state = propagate_chain(config, positions_km)
    return receiver_detect(state, config.p_dark)


def chain_noise(config: ChainConfig, positions_km: Sequence[float]) -> float:
    """Receiver noise probability as a function of relay positions.

    The objective minimized by relay placement; signal probability does not
    depend on the positions, so minimizing noise maximizes SNR.
    """
    return run_chain(config, positions_km).p_n


# int8 slot states for the vectorized sampler
_SIG, _RND, _EMPTY, _NOGATE = 0, 1, 2, 3


@dataclass(frozen=True)
class SampledReport:
    """Monte Carlo estimate of the receiver statistics.

    Counts are over n_trials transmitted slots. noise_events counts receiver
    noise detections; a slot can contribute two (spurious photon plus a dark
    count), which the standard errors account for. state_counts histograms
    the slot state just before the receiver.
    """

    p_s: float
    p_n: float
    snr: float
    q_b: float
    n_trials: int
    seed: int
    signal_count: int
    noise_events: int
    stderr_p_s: float
    stderr_p_n: float
    state_counts: dict = field(default_factory=dict)


def sample_chain(config: ChainConfig, n_trials: int, seed: int,
                 positions_km: Optional[Sequence[float]] = None,
                 chunk_size: int = 1_000_000) -> SampledReport:
    """Simulate n_trials slots through the chain and tally detections.

    Slots are processed in fixed-size chunks, each driven by its own child
    of SeedSequence(seed), so results depend only on (config, n_trials, seed,
    chunk_size) and not on execution order. The per-slot kernel matches
    propagate_segment/apply_relay/receiver_detect event for event, so the
    estimates are unbiased for the exact run_chain values.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    lengths = _segment_lengths(config, positions_km)
    trans = [math.exp(-config.atten_per_km * seg) for seg in lengths]
    eta, pd2 = config.eta, 2.0 * config.p_dark

    n_chunks = (n_trials + chunk_size - 1) // chunk_size
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    signal_count = 0
    noise_c1 = 0    # slots with exactly one noise detection
    noise_c2 = 0    # slots with two (spurious photon and a dark count)
    state_hist = np.zeros(4, dtype=np.int64)

    for ci in range(n_chunks):
        m = min(chunk_size, n_trials - ci * chunk_size)
        rng = np.random.default_rng(children[ci])
        states = np.zeros(m, dtype=np.int8)
        for i, t in enumerate(trans):
            if t < 1.0:
                u = rng.random(m)
                photon = states <= _RND
                states[photon & (u >= t)] = _EMPTY
            if i < config.n_relays:
                u = rng.random(m)
                out = np.full(m, _NOGATE, dtype=np.int8)
                sig = states == _SIG
                rnd = states == _RND
                emp = states == _EMPTY
                out[sig & (u < eta)] = _SIG
                out[sig & (u >= eta) & (u < eta + pd2)] = _RND
                out[rnd & (u < eta + pd2)] = _RND
                out[emp & (u < pd2)] = _RND
                states = out
        state_hist += np.bincount(states, minlength=4)
        u = rng.random(m)
        dark = (states != _NOGATE) & (u < pd2)
        noise = (states == _RND).astype(np.int64) + dark
        signal_count += int((states == _SIG).sum())
        noise_c1 += int((noise == 1).sum())
        noise_c2 += int((noise == 2).sum())

    n = n_trials
    p_s = signal_count / n
    noise_events = noise_c1 + 2 * noise_c2
    p_n = noise_events / n
    # sample variance of the per-slot noise count (values 0, 1, 2)
    second_moment = (noise_c1 + 4 * noise_c2) / n
    var_n = max(second_moment - p_n * p_n, 0.0)
    stderr_p_s = math.sqrt(p_s * (1.0 - p_s) / n)
    stderr_p_n = math.sqrt(var_n / n)
    if p_n > 0.0:
        snr = p_s / p_n
    elif p_s > 0.0:
        snr = math.inf
    else:
        snr = math.nan
    denom = p_n + p_s
    q_b = 0.5 * p_n / denom if denom > 0.0 else math.nan
    names = ("signal", "random", "empty", "no_gate")
    return SampledReport(
        p_s=p_s, p_n=p_n, snr=snr, q_b=q_b, n_trials=n, seed=seed,
        signal_count=signal_count, noise_events=noise_events,
        stderr_p_s=stderr_p_s, stderr_p_n=stderr_p_n,
        state_counts={k: int(v) for k, v in zip(names, state_hist)})
