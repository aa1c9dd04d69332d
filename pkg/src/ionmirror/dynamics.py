"""Retarded amplitude dynamics of two ions coupled through the mirror pair.

State vector
------------
The single-excitation amplitudes ``b[alpha, e, g]`` give the probability
amplitude that ion ``alpha`` (0 or 1) is in excited sublevel ``e`` while the
other ion is in ground sublevel ``g``, with no photon in flight. Level
indices follow :data:`ionmirror.levels.EXCITED_LEVELS` and
:data:`ionmirror.levels.GROUND_LEVELS`. Flattened, component
``alpha * 16 + e * 4 + g``.

Equation of motion
------------------
With the photon field eliminated the amplitudes obey::

    b'(t) = -(i Omega + M_self) b(t) - M_cross b(t - tau)

``Omega`` holds the level energies of each component (the optical carrier is
removed, including its propagation phase over ``tau``). ``M_self`` is the
free-space decay, diagonal with value ``1.5 * gamma``. ``M_cross`` moves an
excitation from one ion to the other through the aperture dyadic. Terms of
order ``n`` in ``M_cross`` start at ``t = n tau``, so truncating at order
``N`` is exact for ``t < (N + 1) tau``.

Times are measured in the reciprocal unit of ``scheme.gamma``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ._io import write_csv
from .expseries import ExpSeries, incomplete_moment
from .levels import (
    EXCITED_LEVELS,
    GROUND_LEVELS,
    IonLevel,
    LevelScheme,
    Manifold,
)

N_COMP = 32
_SHAPE = (2, 4, 4)


def component_index(ion: int, excited: int, partner_ground: int) -> int:
    return ion * 16 + excited * 4 + partner_ground


def component_labels() -> list[tuple[int, IonLevel, IonLevel]]:
    return [(a, e, g) for a in range(2) for e in EXCITED_LEVELS for g in GROUND_LEVELS]


def _emission_vectors(scheme: LevelScheme) -> np.ndarray:
    """d[e, m] = <m| d |e> in the normalised units of ``levels``."""
    return scheme.dipole_vectors()


@dataclass(frozen=True)
class CouplingKernel:
    """Instantaneous and delayed coupling matrices of the flattened amplitudes.

    ``self_rate`` and ``cross_matrix`` act on the 32 components;
    ``omega`` is the diagonal energy term; ``rate_scale`` is ``K = 3 gamma``,
    the factor that turns dipole products into rates.
    """

    scheme: LevelScheme
    self_rate: np.ndarray
    cross_matrix: np.ndarray
    omega: np.ndarray
    tau: float
    gamma_rel: np.ndarray
    rate_scale: float
    neglect_f0_excited: bool = True

    @property
    def gamma(self) -> float:
        return self.scheme.gamma

    @property
    def diagonal_rates(self) -> np.ndarray:
        """Complex decay constants of the undriven components."""
        return 1j * self.omega + np.diag(self.self_rate)

    def dropped_target(self, excited_idx: int) -> bool:
        return self.neglect_f0_excited and EXCITED_LEVELS[excited_idx].F == 0


def build_kernel(
    scheme: LevelScheme,
    geom=None,
    gamma_rel: np.ndarray | None = None,
    *,
    tau: float | None = None,
    neglect_f0_excited: bool | None = None,
) -> CouplingKernel:
    """Assemble self and cross coupling matrices.

    Parameters
    ----------
    scheme : LevelScheme
    geom : MirrorGeometry, optional
        Supplies ``gamma_rel`` and ``tau`` when those are not given. Its
        ``tau`` is in seconds and is converted with ``scheme.gamma``
        (taken as s^-1 in that case).
    gamma_rel : (3, 3) array, optional
        Aperture dyadic. Defaults to ``geometry.gamma_rel(geom)``.
    tau : float, optional
        Delay in units of ``1 / scheme.gamma``.
    """
    if gamma_rel is None:
        if geom is None:
            raise ValueError("need gamma_rel or a geometry")
        from .geometry import gamma_rel as _gamma_rel

        gamma_rel = _gamma_rel(geom)
    gamma_rel = np.asarray(gamma_rel, dtype=float)
    if gamma_rel.shape != (3, 3):
        raise ValueError(f"gamma_rel must be 3x3, got shape {gamma_rel.shape}")
    if not np.allclose(gamma_rel, gamma_rel.T, atol=1e-12):
        raise ValueError("gamma_rel must be symmetric")
    if tau is None:
        if geom is None:
            raise ValueError("need tau or a geometry")
        tau = geom.tau * scheme.gamma
    if not tau > 0:
        raise ValueError("tau must be positive")
    if neglect_f0_excited is None:
        neglect_f0_excited = scheme.neglect_f0_excited

    d = _emission_vectors(scheme)
    if d.shape != (4, 4, 3):
        raise ValueError("dipole table must be indexed [excited, ground, xyz]")
    k_rate = 3.0 * scheme.gamma
    w = np.einsum("emx,fmx->ef", d.conj(), d)  # sum over emitted-into ground m

    m_self = np.zeros((N_COMP, N_COMP), dtype=complex)
    for a in range(2):
        for e in range(4):
            for f in range(4):
                if w[e, f] == 0:
                    continue
                for g in range(4):
                    m_self[component_index(a, e, g), component_index(a, f, g)] = 0.5 * k_rate * w[e, f]
    off = m_self - np.diag(np.diag(m_self))
    if np.max(np.abs(off), initial=0.0) > 1e-12:
        raise ValueError("self-decay matrix is not diagonal; dipole table is inconsistent")
    m_self = np.diag(np.diag(m_self))

    # Target (alpha, i, j): absorber alpha excited to i from its ground g,
    # emitter beta left in its ground j. Source (beta, k, g).
    m_cross = np.zeros((N_COMP, N_COMP), dtype=complex)
    for a in range(2):
        b = 1 - a
        for i in range(4):
            if neglect_f0_excited and EXCITED_LEVELS[i].F == 0:
                continue
            for g in range(4):
                if not np.any(d[i, g]):
                    continue
                absorb = d[i, g]
                for k in range(4):
                    for j in range(4):
                        if not np.any(d[k, j]):
                            continue
                        value = -k_rate * np.vdot(absorb, gamma_rel @ d[k, j])
                        if value != 0:
                            m_cross[component_index(a, i, j), component_index(b, k, g)] = value

    omega = np.zeros(N_COMP)
    e_exc = scheme.excited_energies()
    e_gnd = scheme.ground_energies()
    for a in range(2):
        for e in range(4):
            for g in range(4):
                omega[component_index(a, e, g)] = e_exc[e] + e_gnd[g]

    return CouplingKernel(
        scheme=scheme,
        self_rate=m_self,
        cross_matrix=m_cross,
        omega=omega,
        tau=float(tau),
        gamma_rel=gamma_rel,
        rate_scale=k_rate,
        neglect_f0_excited=neglect_f0_excited,
    )


@dataclass
class AmplitudeTrajectory:
    """Amplitudes on a time grid, indexed ``b[time, ion, excited, partner_ground]``."""

    t_grid: np.ndarray
    b: np.ndarray
    order: int
    tau: float
    series: ExpSeries | None = field(default=None, repr=False)
    method: str = "analytic"

    @property
    def t_over_tau(self) -> np.ndarray:
        return self.t_grid / self.tau

    @property
    def initial(self) -> np.ndarray:
        return self.b[0]

    def at(self, t) -> np.ndarray:
        """Amplitudes at arbitrary times inside the valid window."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.series is None:
            raise ValueError("trajectory has no analytic representation; use the grid values")
        if np.any(t < 0) or np.any(t >= (self.order + 1) * self.tau):
            raise ValueError("requested time outside the valid window [0, (N+1) tau)")
        return self.series.evaluate(t).reshape((t.size,) + _SHAPE)

    def total_excitation(self) -> np.ndarray:
        return np.sum(np.abs(self.b) ** 2, axis=(1, 2, 3))


def standard_initial_state() -> np.ndarray:
    """Ion 1 in |P,1,0>, ion 2 in |S,1,0>."""
    b0 = np.zeros(_SHAPE, dtype=complex)
    b0[0, EXCITED_LEVELS.index(IonLevel(Manifold.P_HALF, 1, 0)), GROUND_LEVELS.index(IonLevel(Manifold.S_HALF, 1, 0))] = 1.0
    return b0


def _as_initial(initial) -> np.ndarray:
    if isinstance(initial, AmplitudeTrajectory):
        initial = initial.b[0]
    if isinstance(initial, dict):
        b0 = np.zeros(_SHAPE, dtype=complex)
        for (ion, e, g), amp in initial.items():
            b0[ion, EXCITED_LEVELS.index(e), GROUND_LEVELS.index(g)] = amp
        initial = b0
    b0 = np.asarray(initial, dtype=complex)
    if b0.size != N_COMP:
        raise ValueError(f"initial amplitudes need {N_COMP} components, got {b0.size}")
    b0 = b0.reshape(N_COMP)
    norm = np.sum(np.abs(b0) ** 2)
    if norm > 1 + 1e-12:
        raise ValueError(f"initial state has norm^2 {norm} > 1")
    return b0


def _check_grid(t_grid: np.ndarray, order: int, tau: float) -> None:
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise ValueError("time grid must be a non-empty 1-D array")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if t_grid[0] < 0:
        raise ValueError("time grid must start at t >= 0")
    if t_grid[-1] >= (order + 1) * tau:
        raise ValueError(
            f"t_max = {t_grid[-1]:.6g} must be below (N+1) tau = {(order + 1) * tau:.6g} for order N = {order}"
        )


def amplitude_series(kernel: CouplingKernel, initial, t_max: float, order: int = 1) -> ExpSeries:
    """Exact exponential-polynomial form of the order-``order`` solution."""
    b0 = _as_initial(initial)
    rates = kernel.diagonal_rates
    term = ExpSeries.exponential(rates, b0)
    total = term
    for _ in range(order):
        term = term.delayed_convolution(rates, kernel.cross_matrix, kernel.tau, t_max)
        total = total + term
    return total


def evolve(
    kernel: CouplingKernel,
    initial,
    t_max: float,
    order: int = 1,
    dt: float | None = None,
    t_grid=None,
    method: str = "analytic",
) -> AmplitudeTrajectory:
    """Integrate the delayed amplitude equations up to Neumann order ``order``.

    Parameters
    ----------
    kernel : CouplingKernel
    initial : array (2, 4, 4) or (32,), dict, or AmplitudeTrajectory
        Amplitudes at t = 0.
    t_max : float
        Must satisfy ``t_max < (order + 1) * tau``.
    dt : float, optional
        Grid step, default ``tau / 1000``. Ignored when ``t_grid`` is given.
    method : {"analytic", "grid"}
        ``analytic`` builds the exact exponential-polynomial solution and
        samples it; ``grid`` integrates with an exponential trapezoid rule on
        the grid itself (second order in ``dt``; independent cross-check).
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    tau = kernel.tau
    if t_grid is None:
        if t_max >= (order + 1) * tau:
            raise ValueError(
                f"t_max = {t_max:.6g} must be below (N+1) tau = {(order + 1) * tau:.6g} for order N = {order}"
            )
        step = tau / 1000 if dt is None else dt
        if not step > 0:
            raise ValueError("dt must be positive")
        n = max(1, int(np.ceil(t_max / step - 1e-9)))
        t_grid = np.linspace(0.0, t_max, n + 1)
    t_grid = np.asarray(t_grid, dtype=float)
    _check_grid(t_grid, order, tau)

    if method == "analytic":
        series = amplitude_series(kernel, initial, t_grid[-1], order)
        b = series.evaluate(t_grid).reshape((t_grid.size,) + _SHAPE)
        return AmplitudeTrajectory(t_grid, b, order, tau, series, "analytic")
    if method == "grid":
        b = _evolve_grid(kernel, _as_initial(initial), t_grid, order)
        return AmplitudeTrajectory(t_grid, b.reshape((t_grid.size,) + _SHAPE), order, tau, None, "grid")
    raise ValueError(f"unknown method {method!r}")


def _evolve_grid(kernel: CouplingKernel, b0: np.ndarray, t_grid: np.ndarray, order: int) -> np.ndarray:
    """Order-by-order exponential trapezoid integration on a uniform grid.

    A uniform ``t_grid`` is used as is; otherwise the integration runs on a
    uniform grid with the smallest step of ``t_grid`` and the result is
    interpolated back (with each component's carrier removed). Each Neumann
    order is driven by the previous one evaluated at ``t - tau``. Within a
    step the source is the source component's own carrier times a linearly
    interpolated envelope, integrated exactly against the target propagator.
    """
    rates = kernel.diagonal_rates
    tau = kernel.tau
    steps = np.diff(t_grid)
    uniform = t_grid.size > 1 and t_grid[0] == 0 and np.allclose(steps, steps[0], rtol=1e-10, atol=0)
    if uniform:
        fine = t_grid
        h = float(steps[0])
    else:
        h = float(np.min(steps)) if t_grid.size > 1 else tau / 1000
        fine = np.arange(int(np.ceil(t_grid[-1] / h + 1e-9)) + 1) * h

    orders = [np.exp(-np.outer(fine, rates)) * b0]
    m = kernel.cross_matrix
    pairs = np.argwhere(m != 0)
    # exact step weights for exp(-lam_c (h - v)) exp(-lam_src v) (1, v/h)
    def step_weights(length):
        w0 = np.zeros_like(m)
        w1 = np.zeros_like(m)
        for c, src in pairs:
            nu = rates[src] - rates[c]
            lead = np.exp(-rates[c] * length)
            w0[c, src] = m[c, src] * lead * incomplete_moment(0, nu, length)
            w1[c, src] = m[c, src] * lead * incomplete_moment(1, nu, length) / length
        return w0, w1

    w0, w1 = step_weights(h)
    decay = np.exp(-rates * h)
    for _ in range(order):
        prev = orders[-1]
        # previous order with its own carrier removed: slowly varying
        demod = prev * np.exp(np.outer(fine, rates))
        src_t = fine - tau
        env = np.zeros_like(prev)
        live = src_t >= 0
        for c in range(N_COMP):
            env[live, c] = np.interp(src_t[live], fine, demod[:, c].real) + 1j * np.interp(src_t[live], fine, demod[:, c].imag)
        new = np.zeros_like(prev)
        for n in range(fine.size - 1):
            if src_t[n + 1] <= 0:
                continue
            if src_t[n] < 0:
                # the source switches on inside this step
                part = src_t[n + 1]
                p0, p1 = step_weights(part)
                a = demod[0]
                b = env[n + 1]
                new[n + 1] = -(p0 - p1) @ a - p1 @ b
                continue
            carrier = np.exp(-rates * src_t[n])
            a = carrier * env[n]
            b = carrier * env[n + 1]
            new[n + 1] = decay * new[n] - (w0 - w1) @ a - w1 @ b
        orders.append(new)
    total = np.sum(orders, axis=0)
    if uniform:
        return total
    demod = total * np.exp(np.outer(fine, rates))
    out = np.empty((t_grid.size, N_COMP), dtype=complex)
    for c in range(N_COMP):
        out[:, c] = np.interp(t_grid, fine, demod[:, c].real) + 1j * np.interp(t_grid, fine, demod[:, c].imag)
    return out * np.exp(-np.outer(t_grid, rates))


def excitation_probability(traj: AmplitudeTrajectory, ion: int) -> tuple[np.ndarray, np.ndarray]:
    """(t, P) with P the total excited population of ion 1 or 2."""
    if ion not in (1, 2):
        raise ValueError("ion must be 1 or 2")
    p = np.sum(np.abs(traj.b[:, ion - 1]) ** 2, axis=(1, 2))
    return traj.t_grid, p


# (ion, excited level, partner ground level) of the four amplitudes that matter
RELEVANT_COMPONENTS = {
    "ion1_P10_S10": (0, IonLevel(Manifold.P_HALF, 1, 0), IonLevel(Manifold.S_HALF, 1, 0)),
    "ion2_P1p1_S1m1": (1, IonLevel(Manifold.P_HALF, 1, 1), IonLevel(Manifold.S_HALF, 1, -1)),
    "ion2_P1m1_S1p1": (1, IonLevel(Manifold.P_HALF, 1, -1), IonLevel(Manifold.S_HALF, 1, 1)),
    "ion2_P00_S00": (1, IonLevel(Manifold.P_HALF, 0, 0), IonLevel(Manifold.S_HALF, 0, 0)),
}


def relevant_amplitudes(traj: AmplitudeTrajectory, include_f0: bool | None = None) -> dict[str, np.ndarray]:
    """The amplitudes populated from the standard initial state.

    The ion-2 F = 0 amplitude is omitted when ``include_f0`` is false;
    by default it is kept only if it is nonzero anywhere.
    """
    if not np.allclose(traj.b[0], standard_initial_state(), atol=1e-14):
        raise ValueError("relevant amplitudes are defined for ion 1 in |P,1,0> and ion 2 in |S,1,0>")
    out = {}
    for name, (ion, e, g) in RELEVANT_COMPONENTS.items():
        series = traj.b[:, ion, EXCITED_LEVELS.index(e), GROUND_LEVELS.index(g)]
        if name == "ion2_P00_S00":
            if include_f0 is False or (include_f0 is None and not np.any(series)):
                continue
        out[name] = series
    return out


def peak_time(traj: AmplitudeTrajectory, ion: int = 2) -> tuple[float, float]:
    """(t_peak, P_peak) of an ion's excitation, refined between grid points."""
    t, p = excitation_probability(traj, ion)
    k = int(np.argmax(p))
    if traj.series is None or k == 0 or k == t.size - 1:
        return float(t[k]), float(p[k])
    sl = slice(ion - 1, ion)

    def neg(x):
        return -float(np.sum(np.abs(traj.at(x)[0, sl]) ** 2))

    res = optimize.minimize_scalar(neg, bounds=(t[k - 1], t[k + 1]), method="bounded", options={"xatol": 1e-12})
    return float(res.x), -float(res.fun)


def trajectory_csv(traj: AmplitudeTrajectory, target=None) -> str:
    """CSV with t/tau, P1, P2 and the populations of the relevant amplitudes."""
    _, p1 = excitation_probability(traj, 1)
    _, p2 = excitation_probability(traj, 2)
    chans = {}
    for name, (ion, e, g) in RELEVANT_COMPONENTS.items():
        chans[name] = np.abs(traj.b[:, ion, EXCITED_LEVELS.index(e), GROUND_LEVELS.index(g)]) ** 2
    header = ["t_over_tau", "P1_probability", "P2_probability"] + [f"abs2_{n}" for n in chans]
    rows = (
        [traj.t_over_tau[i], p1[i], p2[i]] + [chans[n][i] for n in chans]
        for i in range(traj.t_grid.size)
    )
    return write_csv(target, header, rows)
