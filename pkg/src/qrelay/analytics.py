"""Closed-form signal-to-noise and placement formulas for relay chains.

Everything here works in the dimensionless attenuation length alpha*x where
convenient; configs carry physical distances in km. The exact event-by-event
propagation lives in the chain module; this module holds the first-order
analytic forms and the relay placement results (uniform spacing with a longer
final segment, clamped to the transmitter end at short range).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from scipy.optimize import minimize_scalar

from .errors import ConvergenceError


@dataclass(frozen=True)
class ChainConfig:
    """End-to-end channel description.

    positions_km, when given, lists relay locations measured from the
    transmitter; they must be non-decreasing and inside [0, distance_km]
    (zero-length segments are legal and occur in degenerate sweeps). When
    absent, operations that need positions use optimal_positions().
    """

    distance_km: float
    atten_per_km: float = 0.05
    n_relays: int = 0
    eta: float = 0.5
    p_dark: float = 1e-5
    positions_km: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.distance_km < 0:
            raise ValueError(f"distance_km must be >= 0, got {self.distance_km}")
        if self.atten_per_km <= 0:
            raise ValueError(f"atten_per_km must be > 0, got {self.atten_per_km}")
        if not isinstance(self.n_relays, int) or self.n_relays < 0:
            raise ValueError(f"n_relays must be a nonnegative integer, got {self.n_relays}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if not 0.0 <= self.p_dark < 0.5:
            raise ValueError(f"p_dark must be in [0, 0.5), got {self.p_dark}")
        if self.eta + 2.0 * self.p_dark > 1.0:
            raise ValueError("eta + 2*p_dark exceeds 1")
        if self.positions_km is not None:
            pos = tuple(float(p) for p in self.positions_km)
            object.__setattr__(self, "positions_km", pos)
            if len(pos) != self.n_relays:
                raise ValueError(f"{len(pos)} positions for {self.n_relays} relays")
            lo = 0.0
            for p in pos:
                if p < lo - 1e-12 or p > self.distance_km + 1e-12:
                    raise ValueError(f"relay positions must be non-decreasing "
                                     f"within [0, {self.distance_km}], got {pos}")
                lo = p

    @property
    def alpha_x(self) -> float:
        return self.atten_per_km * self.distance_km

    def with_positions(self, positions_km: Sequence[float]) -> "ChainConfig":
        return ChainConfig(self.distance_km, self.atten_per_km, self.n_relays,
                           self.eta, self.p_dark, tuple(positions_km))


@dataclass(frozen=True)
class SnrPoint:
    """One row of an SNR sweep."""

    alpha_x: float
    s: float
    q_b: float


def qber_from_snr(s: float) -> float:
    """Bit error rate of a receiver seeing signal-to-noise ratio S.

    Noise photons are randomly polarized, so half of them land in the wrong
    detector: Q_B = 1 / (2 (1 + S)). S = 0 gives 1/2, S -> inf gives 0.
    """
    if math.isinf(s):
        return 0.0
    if s < 0:
        raise ValueError(f"snr must be nonnegative, got {s}")
    return 0.5 / (1.0 + s)


def snr_no_relay(p_dark: float, alpha_x: float) -> float:
    """Direct-transmission SNR: half the inverse dark rate times e^(-alpha x).

    p_dark = 0 returns math.inf as a noise-free sentinel.
    """
    if p_dark < 0:
        raise ValueError(f"p_dark must be >= 0, got {p_dark}")
    if alpha_x < 0:
        raise ValueError(f"alpha_x must be >= 0, got {alpha_x}")
    if p_dark == 0.0:
        return math.inf
    return 0.5 / p_dark * math.exp(-alpha_x)


def snr_n_relays(alpha_x: float, n_relays: int, eta: float, p_dark: float) -> float:
    """First-order SNR with n optimally placed relays.

    S_N = S_0 * (1/(N+1)) * eta^(N/(N+1)) * e^(alpha x N/(N+1)). At N = 0 the
    bracket is exactly 1, and at N = 1 it reduces to the single-relay closed
    form; both are algebraic identities, not approximations.
    """
    if n_relays < 0:
        raise ValueError(f"n_relays must be >= 0, got {n_relays}")
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must be in (0, 1], got {eta}")
    s0 = snr_no_relay(p_dark, alpha_x)
    r = n_relays / (n_relays + 1)
    bracket = (1.0 / (n_relays + 1)) * eta ** r * math.exp(alpha_x * r)
    return s0 * bracket


def noise_single_relay(x1_km: float, x2_km: float, config: ChainConfig) -> float:
    """First-order noise rate with one relay: 2 P_d (eta e^(-a x1) + e^(-a x2)).

    The two legs must add up to the configured total distance.
    """
    if abs(x1_km + x2_km - config.distance_km) > 1e-9 * max(1.0, config.distance_km):
        raise ValueError(f"legs {x1_km} + {x2_km} do not add up to "
                         f"{config.distance_km}")
    a = config.atten_per_km
    return 2.0 * config.p_dark * (config.eta * math.exp(-a * x1_km)
                                  + math.exp(-a * x2_km))


def optimal_position_single(config: ChainConfig) -> float:
    """Noise-minimizing location of a single relay.

    The stationary point of noise_single_relay is x1 = (x + ln(eta)/alpha)/2,
    biased toward the transmitter because a spurious photon born at the relay
    still has to survive the second leg. Clamped into [0, x].
    """
    x = config.distance_km
    raw = 0.5 * (x + math.log(config.eta) / config.atten_per_km)
    return min(max(raw, 0.0), x)


def optimal_positions(config: ChainConfig, refine: bool = False) -> tuple[float, ...]:
    """Noise-minimizing relay locations for the configured chain.

    Interior optimum: the first N segments share one length d and the final
    segment is longer by ln(1/eta)/alpha, so the last relay sits at distance
    (x - N ln(eta)/alpha)/(N + 1) from the receiver. When the channel is
    shorter than ln(1/eta)/alpha that pattern would need negative segments;
    the constrained optimum then parks every relay at the transmitter end.
    With refine=True the pattern is polished by the numeric minimizer against
    the exact chain noise (import deferred to keep the layering one-way).
    """
    n = config.n_relays
    if n == 0:
        return ()
    x = config.distance_km
    delta = -math.log(config.eta) / config.atten_per_km
    if x <= delta:
        pattern = (0.0,) * n
    else:
        d = (x - delta) / (n + 1)
        pattern = tuple(i * d for i in range(1, n + 1))
    if not refine:
        return pattern
    from .chain import chain_noise
    return optimize_positions_numeric(
        config, lambda pos: chain_noise(config, pos), x0=pattern)


def optimize_positions_numeric(config: ChainConfig,
                               objective: Callable[[Sequence[float]], float],
                               x0: Optional[Sequence[float]] = None,
                               obj_tol: float = 1e-10,
                               max_sweeps: int = 500) -> tuple[float, ...]:
    """Coordinate-descent minimization of a noise objective over positions.

    Each sweep line-searches every relay position inside the interval pinned
    by its neighbours (bounded Brent). Stops when a full sweep improves the
    objective by less than obj_tol relative; deterministic for a given config
    and start. Raises ConvergenceError, carrying the best point found, if the
    sweep budget runs out.
    """
    n = config.n_relays
    if n == 0:
        return ()
    x = config.distance_km
    pos = list(optimal_positions(config) if x0 is None else x0)
    if len(pos) != n:
        raise ValueError(f"start point has {len(pos)} positions for {n} relays")
    best = objective(pos)
    xatol = max(1e-13, 1e-12 * x)
    for _sweep in range(max_sweeps):
        previous = best
        for i in range(n):
            lo = pos[i - 1] if i > 0 else 0.0
            hi = pos[i + 1] if i < n - 1 else x
            if hi - lo <= 2 * xatol:
                continue
            res = minimize_scalar(
                lambda v: objective(pos[:i] + [v] + pos[i + 1:]),
                bounds=(lo, hi), method="bounded", options={"xatol": xatol})
            if res.fun < best:
                pos[i] = float(res.x)
                best = float(res.fun)
        # relative stop: noise objectives span many decades, so an absolute
        # threshold would quit coordinate sweeps while still percent-level off
        if previous - best <= obj_tol * abs(best):
            return tuple(pos)
    raise ConvergenceError(
        f"placement search did not converge in {max_sweeps} sweeps",
        best_positions=tuple(pos), best_value=best)


def solve_range_alpha_x(n_relays: int, eta: float, p_dark: float,
                        s_target: float) -> float:
    """Attenuation length at which the N-relay SNR equals s_target.

    Inverts the first-order SNR expression including its factor-2 terms.
    """
    if p_dark <= 0 or s_target <= 0:
        raise ValueError("p_dark and s_target must be positive")
    r = n_relays / (n_relays + 1)
    arg = 2.0 * p_dark * s_target * (n_relays + 1) * eta ** (-r)
    if arg >= 1.0:
        raise ValueError(
            f"no positive range: 2*p_dark*s_target*(N+1)*eta^(-N/(N+1)) = "
            f"{arg:.3g} >= 1")
    return -(n_relays + 1) * math.log(arg)


@dataclass(frozen=True)
class RangeEnhancement:
    approx: float
    exact: float


def range_enhancement(n_relays: int, eta: float, p_dark: float,
                      s_target: float) -> RangeEnhancement:
    """Range gain of an N-relay chain over direct transmission at fixed SNR.

    approx: R = (N+1) ln[(N+1) eta^(-N/(N+1)) P_d S] / ln[P_d S], the compact
    published form that drops the factor-2 terms. exact: the same ratio with
    both ranges solved from the full first-order expressions. Both need the
    log arguments below 1, otherwise the requested SNR is unreachable.
    """
    if n_relays < 0:
        raise ValueError(f"n_relays must be >= 0, got {n_relays}")
    if p_dark <= 0 or s_target <= 0:
        raise ValueError("p_dark and s_target must be positive")
    ps = p_dark * s_target
    if ps >= 1.0:
        raise ValueError(f"p_dark * s_target must be < 1, got {ps}")
    r = n_relays / (n_relays + 1)
    arg = (n_relays + 1) * eta ** (-r) * ps
    if arg >= 1.0:
        raise ValueError(f"approximate form out of domain: argument {arg:.3g} >= 1")
    approx = (n_relays + 1) * math.log(arg) / math.log(ps)
    exact = (solve_range_alpha_x(n_relays, eta, p_dark, s_target)
             / solve_range_alpha_x(0, eta, p_dark, s_target))
    return RangeEnhancement(approx=approx, exact=exact)


def raw_rate(clock_hz: float, alpha_x: float) -> float:
    """Photon arrival rate after fiber attenuation: clock * e^(-alpha x).

    Relays do not change this; they only suppress which slots are accepted.
    """
    if clock_hz < 0:
        raise ValueError(f"clock_hz must be >= 0, got {clock_hz}")
    if alpha_x < 0:
        raise ValueError(f"alpha_x must be >= 0, got {alpha_x}")
    return clock_hz * math.exp(-alpha_x)
