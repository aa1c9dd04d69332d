"""Dispersive probing of the qubit states and minimum-error phase discrimination.

A weak coherent pulse probes the pi transitions out of ``|S,1,+-1>``. An
ion in a qubit state shifts the pulse phase; an ion elsewhere leaves it
untouched. Deciding between the two phases is a two-pure-state
discrimination problem whose minimum error is the Helstrom bound.

Probe model
-----------
* Reflection phase: ``arg(1 - 2 eta_c / (1 - 2 i Delta))`` with ``Delta`` the
  detuning in linewidths and ``eta_c`` the fraction of the probe mode that
  couples to the atomic dipole.
* Excitation probability: steady-state population
  ``(s/2) / (1 + s + 4 Delta^2)`` times a pulse-shape factor fixed by the
  reference pair (``s0``, ``Delta``) -> ``reference_excitation``.
* Photons at the ion: ``s * T / (8 eta_c)`` for a pulse of ``T`` upper-state
  lifetimes (saturation relation ``s = 8 eta_c Phi / Gamma``).
* Photons reaching the phase detector: ``n_ion * R * zeta``; the probe is
  injected and picked off at the beam splitter of reflectivity ``R``, and
  ``zeta`` lumps the remaining detection losses. ``zeta`` is calibrated so
  that the ion-1 error crosses the threshold at ``R1``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ._io import write_csv

SUCCESS_IDEAL = 4.0 / 27.0
D32_BRANCHING = 0.005


def steady_state_excitation(saturation: float, detuning: float) -> float:
    """Upper-state population of a two-level atom; detuning in linewidths."""
    return 0.5 * saturation / (1.0 + saturation + 4.0 * detuning**2)


def calibrate_coupling_efficiency(detuning: float = 2.0, phase: float = 0.14 * math.pi) -> float:
    """eta_c for which the probe phase magnitude at ``detuning`` equals ``phase``."""
    return optimize.brentq(lambda e: abs(probe_phase(detuning, e)) - phase, 1e-9, 1.0, xtol=1e-15)


def calibrate_shape_factor(s0: float = 0.01, detuning: float = 2.0, excitation: float = 1e-5) -> float:
    return excitation / steady_state_excitation(s0, detuning)


@dataclass(frozen=True)
class ProbeConfig:
    """Operating point of the dispersive probe.

    ``reflectivity`` None means "use the threshold reflectivity". ``priors``
    None means "derive from branching and success probabilities":
    ion 1 is in a qubit state with probability ``ion1_qubit_probability``;
    ion 2 with ``ion2_qubit_probability * (1 - R1) * (1 - R)``.
    """

    saturation_s0: float = 0.01
    detuning: float = 2.0
    pulse_length: float = 1e4
    reflectivity: float | None = None
    coupling_efficiency: float = 0.8946960917469554
    excitation_cap: float = 5e-4
    priors: tuple[float, float] | None = None
    reference_excitation: float = 1e-5
    shape_factor: float = 0.03402
    detection_efficiency: float = 0.0890675513523223
    error_threshold: float = 5e-4
    R1: float = 0.5
    ion1_qubit_probability: float = 2.0 / 3.0
    ion2_qubit_probability: float = SUCCESS_IDEAL * 0.47 * 0.78**2

    def __post_init__(self):
        if self.priors is not None:
            p0, p1 = self.priors
            if p0 < 0 or p1 < 0 or abs(p0 + p1 - 1) > 1e-12:
                raise ValueError(f"priors must be nonnegative and sum to 1, got {self.priors}")
        if self.reflectivity is not None and not 0 <= self.reflectivity <= 1:
            raise ValueError("reflectivity must lie in [0, 1]")
        if not 0 <= self.R1 <= 1:
            raise ValueError("R1 must lie in [0, 1]")
        if not self.pulse_length > 0:
            raise ValueError("pulse_length must be positive")
        if not 0 <= self.coupling_efficiency <= 1:
            raise ValueError("coupling_efficiency must lie in [0, 1]")

    @property
    def probe_saturation(self) -> float:
        """Saturation parameter that meets the excitation cap."""
        return _saturation_for_cap(self)

    @property
    def photons_at_ion(self) -> float:
        return self.probe_saturation * self.pulse_length / (8.0 * self.coupling_efficiency)

    @property
    def phase_shift(self) -> float:
        return probe_phase(self.detuning, self.coupling_efficiency)

    def ion_priors(self, ion: int, reflectivity: float) -> tuple[float, float]:
        """(p_not_qubit, p_qubit) for the given ion and its beam splitter."""
        if self.priors is not None:
            return self.priors
        if ion == 1:
            p1 = self.ion1_qubit_probability
        elif ion == 2:
            p1 = self.ion2_qubit_probability * (1 - self.R1) * (1 - reflectivity)
        else:
            raise ValueError("ion must be 1 or 2")
        return 1.0 - p1, p1


@dataclass(frozen=True)
class DiscriminationResult:
    phase_shift: float
    mean_photon_at_ion: float
    overlap: float
    error_probability: float


def probe_phase(detuning: float, coupling_efficiency: float) -> float:
    """Phase imprinted on the reflected probe, radians; detuning in linewidths."""
    if not 0 <= coupling_efficiency <= 1:
        raise ValueError("coupling_efficiency must lie in [0, 1]")
    return float(np.angle(1.0 - 2.0 * coupling_efficiency / (1.0 - 2j * detuning)))


def coherent_overlap(mean_photon: float, phase: float) -> float:
    """|<alpha | alpha e^{i phase}>| for |alpha|^2 = mean_photon."""
    if mean_photon < 0:
        raise ValueError("mean photon number must be nonnegative")
    return math.exp(-mean_photon * (1.0 - math.cos(phase)))


def helstrom_error(p0: float, p1: float, overlap: float) -> float:
    """Minimum error for two pure states with the given priors and |overlap|."""
    if p0 < 0 or p1 < 0 or abs(p0 + p1 - 1) > 1e-9:
        raise ValueError("priors must be nonnegative and sum to 1")
    if not 0 <= overlap <= 1 + 1e-15:
        raise ValueError("overlap must lie in [0, 1]")
    disc = max(0.0, 1.0 - 4.0 * p0 * p1 * overlap**2)
    err = 0.5 * (1.0 - math.sqrt(disc))
    # accurate small-error branch: 1 - sqrt(1 - x) = x / (1 + sqrt(1 - x))
    x = 4.0 * p0 * p1 * overlap**2
    err = 0.5 * x / (1.0 + math.sqrt(disc)) if x < 0.5 else err
    return min(err, min(p0, p1))


def _saturation_for_cap(config: ProbeConfig) -> float:
    if not config.excitation_cap > 0:
        raise ValueError("excitation_cap must be positive")
    # shape * s/2 / (1 + s + 4 D^2) = cap is linear in s
    a = config.excitation_cap / config.shape_factor
    denom = 0.5 - a
    if denom <= 0:
        raise ValueError("excitation cap unreachable below saturation")
    return a * (1.0 + 4.0 * config.detuning**2) / denom


def discriminate(config: ProbeConfig, ion: int, reflectivity: float) -> DiscriminationResult:
    if not 0 <= reflectivity <= 1:
        raise ValueError("reflectivity must lie in [0, 1]")
    phase = config.phase_shift
    n_ion = config.photons_at_ion
    n_det = n_ion * reflectivity * config.detection_efficiency
    ov = coherent_overlap(n_det, phase)
    p0, p1 = config.ion_priors(ion, reflectivity)
    return DiscriminationResult(phase, n_ion, ov, helstrom_error(p0, p1, ov))


def error_vs_reflectivity(config: ProbeConfig, ion: int, reflectivities=None) -> tuple[np.ndarray, np.ndarray]:
    """Helstrom error over a reflectivity grid at the capped probe amplitude."""
    if not config.excitation_cap > 0:
        raise ValueError("excitation_cap must be positive")
    grid = np.linspace(0.0, 1.0, 201) if reflectivities is None else np.asarray(reflectivities, dtype=float)
    err = np.array([discriminate(config, ion, float(r)).error_probability for r in grid])
    return grid, err


def threshold_reflectivity(config: ProbeConfig, ion: int, tol: float = 1e-4) -> float:
    """Smallest reflectivity whose error is at or below ``error_threshold``.

    Bisection on the monotone branch; returns nan if even R = 1 fails.
    """
    target = config.error_threshold

    def excess(r):
        return discriminate(config, ion, r).error_probability - target

    lo, hi = 0.0, 1.0
    if excess(hi) > 0:
        return float("nan")
    if excess(lo) <= 0:
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def calibrate_detection_efficiency(config: ProbeConfig, R1: float = 0.5) -> float:
    """zeta that puts the ion-1 threshold exactly at ``R1``."""
    p0, p1 = config.ion_priors(1, R1)
    e = config.error_threshold
    ov2 = (1.0 - (1.0 - 2.0 * e) ** 2) / (4.0 * p0 * p1)
    n_det = -0.5 * math.log(ov2) / (1.0 - math.cos(config.phase_shift))
    return n_det / (config.photons_at_ion * R1)


def success_reduction(R1: float, R2: float) -> float:
    """Fractional loss of heralded pairs from the two probe beam splitters."""
    for r in (R1, R2):
        if not 0 <= r <= 1:
            raise ValueError("reflectivities must lie in [0, 1]")
    return 1.0 - (1.0 - R1) * (1.0 - R2)


def operating_reflectivities(config: ProbeConfig) -> tuple[float, float]:
    """(R1, R2): the configured ion-1 value and the resulting ion-2 threshold."""
    r1 = config.R1
    r2 = config.reflectivity if config.reflectivity is not None else threshold_reflectivity(config, 2)
    return r1, r2


def which_state_damping(config: ProbeConfig, delta: float) -> float:
    """Coherence factor left after both ions scatter the probe.

    A Zeeman shift of ``m * delta * gamma`` moves the probe detuning by
    ``m * delta / 3`` linewidths (the linewidth is ``3 gamma``), so the two
    qubit states imprint slightly different phases. The scattered light of
    both ions then distinguishes them by the coherent-state overlap.
    """
    shift = delta / 3.0
    phi_plus = probe_phase(config.detuning + shift, config.coupling_efficiency)
    phi_minus = probe_phase(config.detuning - shift, config.coupling_efficiency)
    n_total = 2.0 * config.photons_at_ion
    return math.exp(-n_total * (1.0 - math.cos(phi_plus - phi_minus)))


def postselection_fidelity(config: ProbeConfig, delta: float = 0.0, include_detection_errors: bool = True) -> float:
    """Singlet fidelity after the dispersive postselection.

    The coherence is damped by :func:`which_state_damping`. With
    ``include_detection_errors`` each ion also contributes its Helstrom error
    at the operating reflectivity and its probe excitation probability as a
    heralding error.
    """
    if abs(delta) > 1.0:
        warnings.warn("postselection fidelity model assumes |delta| << 1", RuntimeWarning, stacklevel=2)
    damping = which_state_damping(config, delta)
    fid = 0.5 * (1.0 + damping)
    if include_detection_errors:
        r1, r2 = operating_reflectivities(config)
        eps = 0.0
        for ion, r in ((1, r1), (2, r2)):
            eps += discriminate(config, ion, r).error_probability + config.excitation_cap
        fid *= 1.0 - eps
    return fid


def m0_probe_fidelity_limit() -> float:
    """Upper fidelity bound of probing m = 0 states, set by D3/2 leakage."""
    return 1.0 - D32_BRANCHING


def reflectivity_csv(config: ProbeConfig, reflectivities=None, target=None) -> str:
    grid, e1 = error_vs_reflectivity(config, 1, reflectivities)
    _, e2 = error_vs_reflectivity(config, 2, grid)
    rows = [(r, a, b, config.error_threshold) for r, a, b in zip(grid, e1, e2)]
    return write_csv(target, ["reflectivity", "error_ion1", "error_ion2", "error_threshold"], rows)
