"""Nondestructive photon-presence measurement built from linear optics.

The device interferes an incoming polarization qubit (spatial mode 0) with one
half of a Bell pair (modes a, 1) on a polarizing beam splitter whose outputs
(modes 2, b) are read out in the diagonal F/S basis. A coincidence of exactly
one photon in each detector package signals "photon present" and leaves the
qubit, up to a known sign correction, in mode 1 without having measured its
polarization.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chain import ChannelEventState
from .errors import ContractViolationError
from .fockspace import (
    H,
    V,
    ModeBasis,
    PhotonicState,
    apply_transform,
    basis_rotate_fs,
    enumerate_outcomes,
    make_bell_phi_plus,
    make_qubit,
    pbs_hv,
    product,
    vacuum,
)

ENCODER_SPATIAL = ("0", "a", "1", "2", "b")

# detector channel labels after the F/S readout rotation: the H slot of a
# rotated mode counts F photons, the V slot counts S photons
F_CHANNEL = "F"
S_CHANNEL = "S"


def encoder_basis(photon_cap: int = 4) -> ModeBasis:
    """The fixed five-spatial-mode basis used by the device."""
    return ModeBasis(ENCODER_SPATIAL, photon_cap=photon_cap)


def _device_transform(basis: ModeBasis, d2_spatial: str = "2"):
    """PBS from (0, a) into (2, b), then F/S readout on b and on the second
    detector package's mode (mode 2 normally, mode 1 for the diagnostic)."""
    t = pbs_hv(basis, ("0", "a"), ("2", "b"))
    t = t.then(basis_rotate_fs(basis, "b"))
    return t.then(basis_rotate_fs(basis, d2_spatial))


def build_encoder_state(alpha, beta, photon_cap: int = 4) -> PhotonicState:
    """Qubit plus Bell pair after the PBS, before any readout rotation.

    Four terms: the two accepted ones keep one photon in mode b, the two
    rejected ones put zero or two photons there.
    """
    basis = encoder_basis(photon_cap)
    joint = product(make_qubit(basis, alpha, beta, "0"),
                    make_bell_phi_plus(basis, "a", "1"))
    return apply_transform(joint, pbs_hv(basis, ("0", "a"), ("2", "b")))


def _package_modes(basis: ModeBasis, spatial: str):
    return [(spatial, H), (spatial, V)]


def _one_and_only_one(pattern, basis, spatial) -> Optional[str]:
    """Channel label if the package saw exactly one photon, else None."""
    f = pattern.count((spatial, H))
    s = pattern.count((spatial, V))
    if f + s != 1:
        return None
    return F_CHANNEL if f == 1 else S_CHANNEL


@dataclass(frozen=True)
class PackageOutcome:
    """One accepted joint detector outcome of the device."""

    channel_d2: str
    channel_db: str
    probability: float
    flipped: bool                 # sign correction applied by feed-forward
    output: PhotonicState         # corrected single-photon state in mode 1
    fidelity: float               # against the input qubit


@dataclass(frozen=True)
class QndReport:
    outcomes: tuple[PackageOutcome, ...]
    success_probability: float

    def outcome(self, channel_d2: str, channel_db: str) -> PackageOutcome:
        for o in self.outcomes:
            if (o.channel_d2, o.channel_db) == (channel_d2, channel_db):
                return o
        raise KeyError((channel_d2, channel_db))


def feed_forward_sign(state: PhotonicState, spatial: str = "1") -> PhotonicState:
    """Sign correction: phase (-1) per V photon in the given spatial mode.

    Negates the beta component of a qubit there, and the VV component of a
    two-qubit correlated state. Applying it twice is the identity.
    """
    _, vi = state.basis.spatial_indices(spatial)
    return PhotonicState(state.basis,
                         {c: a * (-1) ** c[vi] for c, a in state.amps.items()})


def encoder_postselect(alpha, beta, photon_cap: int = 4):
    """Heralded Bell-state encoding: read out mode b only.

    Returns a list of (channel, probability, conditional) for the one-photon
    outcomes in the b package. Each branch has probability 1/4 and leaves
    modes 1 and 2 in (alpha|HH> +/- beta|VV>) up to normalization.
    """
    basis = encoder_basis(photon_cap)
    st = apply_transform(build_encoder_state(alpha, beta, photon_cap),
                         basis_rotate_fs(basis, "b"))
    branches = []
    for pattern, prob, cond in enumerate_outcomes(st, _package_modes(basis, "b")):
        ch = _one_and_only_one(pattern, basis, "b")
        if ch is not None:
            branches.append((ch, prob, cond))
    return branches


def _run_device(input_state: PhotonicState, d2_spatial: str = "2"):
    """Interfere with the ancilla pair and enumerate joint package outcomes."""
    basis = input_state.basis
    joint = product(input_state, make_bell_phi_plus(basis, "a", "1"))
    st = apply_transform(joint, _device_transform(basis, d2_spatial))
    measured = _package_modes(basis, d2_spatial) + _package_modes(basis, "b")
    accepted = []
    for pattern, prob, cond in enumerate_outcomes(st, measured):
        ch2 = _one_and_only_one(pattern, basis, d2_spatial)
        chb = _one_and_only_one(pattern, basis, "b")
        if ch2 is not None and chb is not None:
            accepted.append((ch2, chb, prob, cond))
    return accepted


def qnd_measure(alpha, beta, photon_cap: int = 4) -> QndReport:
    """Full device run on a single-photon qubit.

    Accepts on one-and-only-one photon in each detector package, applies the
    enumerated feed-forward sign rule, and reports every accepted outcome with
    its corrected output state and fidelity. Success probability is exactly
    1/2 with each of the four joint outcomes at 1/8.
    """
    basis = encoder_basis(photon_cap)
    qubit = make_qubit(basis, alpha, beta, "0")
    reference = make_qubit(basis, alpha, beta, "1")
    outcomes = []
    total = 0.0
    for ch2, chb, prob, cond in _run_device(qubit):
        flip = ch2 != chb
        out = feed_forward_sign(cond, "1") if flip else cond
        outcomes.append(PackageOutcome(
            channel_d2=ch2, channel_db=chb, probability=prob, flipped=flip,
            output=out, fidelity=out.fidelity(reference)))
        total += prob
    return QndReport(outcomes=tuple(outcomes), success_probability=total)


def derive_feed_forward_table(probe=(0.6, 0.8j)) -> dict[tuple[str, str], bool]:
    """Which joint outcomes need the sign correction, found by enumeration.

    Probes the device with an asymmetric qubit and marks an outcome as
    flipped when the raw conditional state needs feed_forward_sign to reach
    unit fidelity with the input. The result flips exactly the mixed-parity
    outcomes (F with S).
    """
    alpha, beta = probe
    basis = encoder_basis()
    reference = make_qubit(basis, alpha, beta, "1")
    table = {}
    for ch2, chb, _prob, cond in _run_device(make_qubit(basis, alpha, beta, "0")):
        fid_raw = cond.fidelity(reference)
        fid_flip = feed_forward_sign(cond, "1").fidelity(reference)
        if not (math.isclose(fid_raw, 1.0, abs_tol=1e-9)
                ^ math.isclose(fid_flip, 1.0, abs_tol=1e-9)):
            raise ContractViolationError(
                f"outcome ({ch2},{chb}) is fixed by neither or both sign choices")
        table[(ch2, chb)] = fid_flip > fid_raw
    return table


def vacuum_gate_probability(d2_spatial: str = "2", photon_cap: int = 4) -> float:
    """Probability of a (false) gate with no input photon.

    Exactly zero for the real device. Relocating the second detector package
    onto the output mode (d2_spatial="1") is a diagnostic that shows why that
    placement would false-gate on vacuum with probability 1/2.
    """
    basis = encoder_basis(photon_cap)
    return float(sum(prob for *_ch, prob, _c in
                     _run_device(vacuum(basis), d2_spatial)))


def multiphoton_gate_probability(n_input: int, alpha=1.0, beta=0.0,
                                 photon_cap: int = 4) -> float:
    """Gate probability for an n-photon polarized input pulse.

    Any input with two or more photons is rejected outright: with the Bell
    photon parked in mode 1, n + 1 >= 3 photons reach the two detector
    packages and can never satisfy the joint one-and-only-one condition.
    """
    if n_input < 0:
        raise ValueError("photon number must be nonnegative")
    if n_input + 2 > photon_cap:
        raise ValueError(
            f"{n_input} input photons plus the ancilla pair exceeds the "
            f"photon cap {photon_cap}")
    basis = encoder_basis(photon_cap)
    if n_input == 0:
        st = vacuum(basis)
    else:
        st = make_qubit(basis, alpha, beta, "0")
        for _ in range(n_input - 1):
            st = product(st, make_qubit(basis, alpha, beta, "0"))
        st = st.normalized()
    return float(sum(prob for *_ch, prob, _c in _run_device(st)))


def measured_relay_efficiency() -> float:
    """Device pass probability taken from the circuit simulation itself.

    Chain and formula layers can source their efficiency parameter from here
    instead of hand-entering 1/2.
    """
    return qnd_measure(1 / math.sqrt(2), 1 / math.sqrt(2)).success_probability


@dataclass(frozen=True)
class QndChannelParams:
    """Relay channel parameters: pass efficiency and detector dark-count rate.

    ``p_dark`` is the per-detector dark probability within one gate window;
    the relay's false-gate probability is 2*p_dark because only dark counts
    in the package opposite the ancilla photon can fake a coincidence.
    """

    eta: float = 0.5
    p_dark: float = 1e-5

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if not 0.0 <= self.p_dark < 0.5:
            raise ValueError(f"p_dark must be in [0, 0.5), got {self.p_dark}")
        if self.eta + 2.0 * self.p_dark > 1.0:
            raise ValueError("eta + 2*p_dark exceeds 1; the relay map would "
                             "not be stochastic")
        if self.p_dark > 1e-2:
            warnings.warn(f"p_dark={self.p_dark} is far outside the regime "
                          "where the first-order formulas apply", stacklevel=2)


def _validate_theta(theta):
    if theta is None:
        return
    m = np.asarray(theta, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError("polarization density matrix must be 2x2")
    if np.max(np.abs(m - m.conj().T)) > 1e-9:
        raise ValueError("polarization density matrix must be Hermitian")
    if abs(np.trace(m).real - 1.0) > 1e-9:
        raise ValueError("polarization density matrix must have unit trace")
    if np.min(np.linalg.eigvalsh(m)) < -1e-12:
        raise ValueError("polarization density matrix must be positive")


def ideal_relay_map(p1: float, theta=None) -> ChannelEventState:
    """Lossless relay on a slot carrying a photon with probability p1.

    The photon passes with the device's intrinsic 1/2; everything else is
    vetoed. The polarization state ``theta`` is untouched on the pass branch
    (that is the point of the device) and is validated only.
    """
    if not 0.0 <= p1 <= 1.0:
        raise ValueError(f"p1 must be a probability, got {p1}")
    _validate_theta(theta)
    return ChannelEventState(p_sig=0.5 * p1, p_rnd=0.0, p_empty=0.0,
                             p_nogate=1.0 - 0.5 * p1)


def noisy_relay_map(p1: float, params: QndChannelParams, theta=None) -> ChannelEventState:
    """Relay with finite efficiency and dark counts.

    weight eta*p1:        legitimate gate, polarization preserved
    weight 2*p_dark:      false gate emitting a randomly polarized photon
    remainder:            no gate
    The map is exactly trace-preserving and matches the first-order
    gate/error/no-gate weights term by term.
    """
    if not 0.0 <= p1 <= 1.0:
        raise ValueError(f"p1 must be a probability, got {p1}")
    _validate_theta(theta)
    p_sig = params.eta * p1
    p_rnd = 2.0 * params.p_dark
    return ChannelEventState(p_sig=p_sig, p_rnd=p_rnd, p_empty=0.0,
                             p_nogate=1.0 - p_sig - p_rnd)
