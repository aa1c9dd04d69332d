"""Ground-state density matrix of the two ions after the photons are traced out.

Every photon that leaves the system is emitted from one of the excited
amplitudes. The two-ion ground-state density matrix therefore builds up as

    rho_pq(t) = int_0^t exp(-i (w_p - w_q)(t - t')) J_pq(t') dt'

where ``p = (g1, g2)`` labels two-ion ground states and the source ``J``
collects products of amplitudes. The free-space part pairs amplitudes of the
same ion at equal times; the mirror part pairs amplitudes of different ions
separated by the travel time, because a photon from one ion reaches the
other focus and continues on the same modes. With the delayed coupling used
in :mod:`ionmirror.dynamics` this bookkeeping conserves probability exactly:
``trace(rho) + sum |b|^2 = 1`` inside the valid window.

Qubit basis: ``q = 0`` is ``|S,1,-1>``, ``q = 1`` is ``|S,1,+1>``; the logical
state ``|q1 q2>`` has ion 1 first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._io import write_csv
from .dynamics import (
    AmplitudeTrajectory,
    CouplingKernel,
    build_kernel,
    component_index,
    evolve,
    standard_initial_state,
)
from .expseries import product_phase_integral
from .levels import GROUND_LEVELS, QUBIT_LEVELS, ZeemanConfig, build_level_scheme

QUBIT_INDEX = tuple(GROUND_LEVELS.index(q) for q in QUBIT_LEVELS)
LOGICAL_LABELS = ("00", "01", "10", "11")
SINGLET = np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0)


def pair_index(g1: int, g2: int) -> int:
    return 4 * g1 + g2


@dataclass
class GroundDensity:
    t: float
    rho: np.ndarray  # (16, 16), index pair_index(g1, g2)
    excited_population: float

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def logical_block(self) -> np.ndarray:
        idx = [pair_index(a, b) for a in QUBIT_INDEX for b in QUBIT_INDEX]
        return self.rho[np.ix_(idx, idx)]


@dataclass
class PostselectedState:
    rho_post: np.ndarray  # unnormalised, logical basis 00, 01, 10, 11
    success_probability: float
    fidelity_singlet: float  # nan when the block is empty

    @property
    def fidelity_defined(self) -> bool:
        return not math.isnan(self.fidelity_singlet)

    @property
    def normalized(self) -> np.ndarray:
        return self.rho_post / self.success_probability


def _source_terms(kernel: CouplingKernel):
    """Nonzero coefficients of the density source.

    Returns two lists of ``(p, q, c, c2, coeff)``:
    ``same`` for ``coeff * b_c(t) conj(b_c2(t))`` and ``delayed`` for
    ``coeff * b_c(t - tau) conj(b_c2(t))``. The mirror part's other ordering
    ``b_c(t) conj(b_c2(t - tau))`` is the Hermitian partner of an entry of
    ``delayed`` and is added through that symmetry.
    """
    d = kernel.scheme.dipole_vectors()
    k_rate = kernel.rate_scale
    gam = kernel.gamma_rel
    same = []
    for a in range(2):
        for e in range(4):
            for m in range(4):
                if not np.any(d[e, m]):
                    continue
                for f in range(4):
                    for m2 in range(4):
                        if not np.any(d[f, m2]):
                            continue
                        coeff = k_rate * np.vdot(d[f, m2], d[e, m])
                        if coeff == 0:
                            continue
                        for g in range(4):
                            for g2 in range(4):
                                if a == 0:
                                    p, q = pair_index(m, g), pair_index(m2, g2)
                                else:
                                    p, q = pair_index(g, m), pair_index(g2, m2)
                                same.append((p, q, component_index(a, e, g), component_index(a, f, g2), coeff))

    delayed = []
    for a in range(2):
        b = 1 - a
        for k in range(4):
            for pa in range(4):
                if not np.any(d[k, pa]):
                    continue
                for l_ in range(4):
                    if kernel.dropped_target(l_):
                        continue
                    for qb in range(4):
                        if not np.any(d[l_, qb]):
                            continue
                        coeff = -k_rate * np.vdot(d[l_, qb], gam @ d[k, pa])
                        if coeff == 0:
                            continue
                        for pb in range(4):
                            for qa in range(4):
                                # c: ion a excited k, ion b in pb; emits to pa
                                # c2: ion b excited l, ion a in qa; emits to qb
                                if a == 0:
                                    p, q = pair_index(pa, pb), pair_index(qa, qb)
                                else:
                                    p, q = pair_index(pb, pa), pair_index(qb, qa)
                                delayed.append((p, q, component_index(a, k, pb), component_index(b, l_, qa), coeff))
    return same, delayed


def _pair_energies(kernel: CouplingKernel) -> np.ndarray:
    e = kernel.scheme.ground_energies()
    return np.add.outer(e, e).reshape(16)


def ground_density(traj: AmplitudeTrajectory, kernel: CouplingKernel, t: float) -> GroundDensity:
    """Two-ion ground-state density matrix at time ``t``.

    Uses the exact exponential-polynomial amplitudes when the trajectory
    carries them; otherwise the time integral is done by the trapezoid rule
    on the trajectory grid.
    """
    if not (traj.t_grid[0] <= t <= traj.t_grid[-1]):
        raise ValueError(f"t = {t} outside the evolved window [{traj.t_grid[0]}, {traj.t_grid[-1]}]")
    same, delayed = _source_terms(kernel)
    w = _pair_energies(kernel)
    rho = np.zeros((16, 16), dtype=complex)
    if traj.series is not None:
        series = traj.series
        cache = {}

        def comp(c, delay):
            key = (c, delay)
            if key not in cache:
                cache[key] = series.component(c, delay)
            return cache[key]

        for p, q, c, c2, coeff in same:
            if not comp(c, 0.0) or not comp(c2, 0.0):
                continue
            rho[p, q] += coeff * product_phase_integral(comp(c, 0.0), comp(c2, 0.0), w[p] - w[q], t)
        for p, q, c, c2, coeff in delayed:
            if not comp(c, kernel.tau) or not comp(c2, 0.0):
                continue
            val = coeff * product_phase_integral(comp(c, kernel.tau), comp(c2, 0.0), w[p] - w[q], t)
            rho[p, q] += val
            rho[q, p] += np.conj(val)
        excited = float(np.sum(np.abs(series.evaluate([t])) ** 2))
    else:
        rho = _ground_density_grid(traj, kernel, t, same, delayed, w)
        b_t = _interp_amplitudes(traj, np.array([t]), kernel.diagonal_rates)[0]
        excited = float(np.sum(np.abs(b_t) ** 2))
    return GroundDensity(t=float(t), rho=rho, excited_population=excited)


def _interp_amplitudes(traj: AmplitudeTrajectory, times: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """Linear interpolation of the amplitudes with each carrier removed."""
    flat = traj.b.reshape(traj.t_grid.size, -1) * np.exp(np.outer(traj.t_grid, rates))
    out = np.zeros((times.size, flat.shape[1]), dtype=complex)
    for c in range(flat.shape[1]):
        out[:, c] = np.interp(times, traj.t_grid, flat[:, c].real, left=0.0) + 1j * np.interp(
            times, traj.t_grid, flat[:, c].imag, left=0.0
        )
    return out * np.exp(-np.outer(times, rates))


def _ground_density_grid(traj, kernel, t, same, delayed, w) -> np.ndarray:
    grid = traj.t_grid[traj.t_grid <= t]
    if grid[-1] < t:
        grid = np.append(grid, t)
    rates = kernel.diagonal_rates
    now = _interp_amplitudes(traj, grid, rates)
    late = _interp_amplitudes(traj, grid - kernel.tau, rates)
    late[grid - kernel.tau < 0] = 0.0
    rho = np.zeros((16, 16), dtype=complex)
    for p, q, c, c2, coeff in same:
        f = coeff * now[:, c] * np.conj(now[:, c2]) * np.exp(-1j * (w[p] - w[q]) * (t - grid))
        rho[p, q] += np.trapezoid(f, grid)
    for p, q, c, c2, coeff in delayed:
        f = coeff * late[:, c] * np.conj(now[:, c2]) * np.exp(-1j * (w[p] - w[q]) * (t - grid))
        val = np.trapezoid(f, grid)
        rho[p, q] += val
        rho[q, p] += np.conj(val)
    return rho


def postselect(gd: GroundDensity) -> PostselectedState:
    """Project onto both ions in qubit states and score against the singlet."""
    block = gd.logical_block()
    success = float(np.real(np.trace(block)))
    if success < 1e-15:
        return PostselectedState(block, 0.0, float("nan"))
    fid = float(np.real(SINGLET @ block @ SINGLET)) / success
    return PostselectedState(block, success, fid)


def closed_form_elements(delta: float) -> tuple[float, complex]:
    """(population, coherence) of the long-time post-selected block.

    ``population`` is each of <01|rho|01> and <10|rho|10>; ``coherence`` is
    <01|rho|10>.
    """
    pop = 2.0 / (3.0 * (9.0 + delta**2))
    coh = 2.0 / (3.0 * (-9.0 + delta * (-9j + 2.0 * delta)))
    return pop, coh


def closed_form_post(delta: float) -> PostselectedState:
    """Long-time post-selected state for differential Zeeman splitting ``delta``."""
    pop, coh = closed_form_elements(delta)
    block = np.zeros((4, 4), dtype=complex)
    block[1, 1] = block[2, 2] = pop
    block[1, 2] = coh
    block[2, 1] = np.conj(coh)
    success = 2 * pop
    fid = float(np.real(SINGLET @ block @ SINGLET)) / success
    return PostselectedState(block, success, fid)


def simulate_post(
    delta: float,
    gamma_tau: float = 25.0,
    horizon: float = 20.0,
    gamma_rel: np.ndarray | None = None,
    zeeman: ZeemanConfig | None = None,
) -> tuple[PostselectedState, GroundDensity]:
    """Evolve from the standard initial state and post-select at ``t = tau + horizon``.

    Times are in units of 1/gamma with gamma = 1; requires
    ``horizon < gamma_tau`` so the first-order solution is exact.
    """
    if not horizon < gamma_tau:
        raise ValueError("horizon must be shorter than tau to stay inside the first-order window")
    zeeman = zeeman or ZeemanConfig.from_delta(delta)
    scheme = build_level_scheme(zeeman)
    kernel = build_kernel(scheme, gamma_rel=np.eye(3) if gamma_rel is None else gamma_rel, tau=gamma_tau)
    t_end = gamma_tau + horizon
    traj = evolve(kernel, standard_initial_state(), t_end, order=1, t_grid=np.array([0.0, t_end]))
    gd = ground_density(traj, kernel, t_end)
    return postselect(gd), gd


def fidelity_curve(delta_grid, gamma_tau: float = 25.0, horizon: float = 20.0, target=None):
    """Closed-form and simulated success/fidelity for each delta.

    Returns a list of rows ``(delta, success_closed, fidelity_closed,
    success_numeric, fidelity_numeric)``; also written as CSV when ``target``
    is given.
    """
    grid = np.asarray(delta_grid, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise ValueError("delta grid must be finite")
    rows = []
    for dl in grid:
        cf = closed_form_post(float(dl))
        num, _ = simulate_post(float(dl), gamma_tau, horizon)
        rows.append((float(dl), cf.success_probability, cf.fidelity_singlet, num.success_probability, num.fidelity_singlet))
    if target is not None:
        write_csv(
            target,
            ["delta", "success_closed_form", "fidelity_closed_form", "success_numeric", "fidelity_numeric"],
            rows,
        )
    return rows
