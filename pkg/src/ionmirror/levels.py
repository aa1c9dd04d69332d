"""Hyperfine level structure of the S1/2 and P1/2 manifolds of 171Yb+.

Both manifolds have J = 1/2 and the nucleus has I = 1/2, so each splits into
F = 0 and F = 1, giving four sublevels per manifold and eight per ion.

Conventions
-----------
* Phases follow Condon-Shortley. Emission matrix elements are
  ``<g| d_q |e>`` with ``q = m_g - m_e``; the Cartesian dipole vector is
  ``sum_q <g|d_q|e> e_q^*`` with ``e_{+1} = -(x + i y)/sqrt(2)``,
  ``e_0 = z``, ``e_{-1} = (x - i y)/sqrt(2)``.
* The emitted photon is called sigma+ when ``m_e - m_g = +1`` (q = -1),
  sigma- when ``m_e - m_g = -1`` (q = +1) and pi when q = 0.
* Dipole vectors are normalised so that, for every excited level, the squared
  norms over all decay channels sum to one. The squared norm of a channel is
  therefore its branching fraction (``rate_weight``).
* Rates are expressed through ``gamma``: every P1/2 amplitude decays at
  ``1.5 * gamma`` (population at ``3 * gamma``), so a channel of weight ``w``
  carries amplitude rate ``1.5 * gamma * w``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .wigner import wigner_3j, wigner_6j

_HALF = 0.5
NUCLEAR_SPIN = 0.5
ELECTRON_SPIN = 0.5


class Manifold(enum.Enum):
    S_HALF = "S1/2"
    P_HALF = "P1/2"

    @property
    def orbital_l(self) -> int:
        return 0 if self is Manifold.S_HALF else 1


class Polarization(enum.Enum):
    SIGMA_PLUS = "sigma+"
    SIGMA_MINUS = "sigma-"
    PI = "pi"


# q index ordering of ``TransitionDipole.spherical_components``
Q_VALUES = (-1, 0, 1)

_SQ2 = math.sqrt(0.5)
SPHERICAL_BASIS = {
    1: np.array([-_SQ2, -1j * _SQ2, 0.0], dtype=complex),
    0: np.array([0.0, 0.0, 1.0], dtype=complex),
    -1: np.array([_SQ2, -1j * _SQ2, 0.0], dtype=complex),
}


@dataclass(frozen=True)
class IonLevel:
    manifold: Manifold
    F: int
    m: int

    def __post_init__(self):
        if self.F not in (0, 1):
            raise ValueError(f"F must be 0 or 1, got {self.F}")
        if abs(self.m) > self.F:
            raise ValueError(f"|m| must not exceed F (F={self.F}, m={self.m})")

    @property
    def is_excited(self) -> bool:
        return self.manifold is Manifold.P_HALF

    def label(self) -> str:
        return f"{self.manifold.value},F={self.F},m={self.m:+d}"

    def __repr__(self):
        return f"IonLevel({self.label()})"


def _manifold_levels(manifold: Manifold) -> tuple[IonLevel, ...]:
    return (
        IonLevel(manifold, 0, 0),
        IonLevel(manifold, 1, -1),
        IonLevel(manifold, 1, 0),
        IonLevel(manifold, 1, 1),
    )


# Fixed orderings; array axes throughout the package follow these.
GROUND_LEVELS = _manifold_levels(Manifold.S_HALF)
EXCITED_LEVELS = _manifold_levels(Manifold.P_HALF)
ALL_LEVELS = GROUND_LEVELS + EXCITED_LEVELS

QUBIT_LEVELS = (IonLevel(Manifold.S_HALF, 1, -1), IonLevel(Manifold.S_HALF, 1, 1))


def ground_index(level: IonLevel) -> int:
    if level.is_excited:
        raise ValueError(f"{level!r} is not a ground level")
    return GROUND_LEVELS.index(level)


def excited_index(level: IonLevel) -> int:
    if not level.is_excited:
        raise ValueError(f"{level!r} is not an excited level")
    return EXCITED_LEVELS.index(level)


@dataclass(frozen=True)
class ZeemanConfig:
    """Zeeman and hyperfine parameters, all as angular frequencies.

    ``delta1`` and ``delta2`` are the linear Zeeman shifts per unit m of the
    F = 1 sublevels in P1/2 and S1/2. Hyperfine splittings put F = 1 above
    F = 0 in each manifold. The defaults assume ``gamma = 1``.
    """

    delta1: float = 0.0
    delta2: float = 0.0
    gamma: float = 1.0
    hyperfine_split_S: float = 1000.0
    hyperfine_split_P: float = 300.0
    optical_offset: float = 0.0

    @property
    def delta(self) -> float:
        """Dimensionless differential Zeeman splitting (delta1 - delta2)/gamma."""
        return (self.delta1 - self.delta2) / self.gamma

    def hyperfine_resolved(self, ratio: float = 100.0) -> bool:
        return min(self.hyperfine_split_S, self.hyperfine_split_P) > ratio * self.gamma

    @classmethod
    def from_delta(cls, delta: float, gamma: float = 1.0, **kwargs) -> "ZeemanConfig":
        """Config with the whole differential shift placed on the P1/2 manifold."""
        return cls(delta1=delta * gamma, delta2=0.0, gamma=gamma, **kwargs)


@dataclass(frozen=True)
class TransitionDipole:
    excited: IonLevel
    ground: IonLevel
    polarization: Polarization | None
    spherical_components: tuple[complex, complex, complex]
    rate_weight: float

    @property
    def q(self) -> int:
        return self.ground.m - self.excited.m

    @property
    def vector(self) -> np.ndarray:
        """Cartesian emission dipole ``<g| d |e>`` (normalised units)."""
        v = np.zeros(3, dtype=complex)
        for q, c in zip(Q_VALUES, self.spherical_components):
            if c != 0:
                v += c * SPHERICAL_BASIS[q].conj()
        return v

    @property
    def absorption_vector(self) -> np.ndarray:
        """Cartesian ``<e| d |g>``, the Hermitian conjugate element."""
        return self.vector.conj()

    @property
    def is_allowed(self) -> bool:
        return self.rate_weight > 0.0


def _reduced_f(f_g: int, f_e: int) -> float:
    """<J'=1/2 I F_g || d || J=1/2 I F_e> in units of the J-reduced element,
    times the L-S factor that carries the S<-P orbital reduction."""
    j_ = _HALF
    i_ = NUCLEAR_SPIN
    f_part = (
        (-1) ** int(round(j_ + i_ + f_e + 1))
        * math.sqrt((2 * f_e + 1) * (2 * f_g + 1))
        * wigner_6j(j_, f_g, i_, f_e, j_, 1)
    )
    l_g, l_e, s_ = 0, 1, ELECTRON_SPIN
    j_part = (
        (-1) ** int(round(l_g + s_ + j_ + 1))
        * math.sqrt((2 * j_ + 1) * (2 * j_ + 1))
        * wigner_6j(l_g, j_, s_, j_, l_e, 1)
    )
    return f_part * j_part


def _raw_element(ground: IonLevel, excited: IonLevel, q: int) -> float:
    phase = -1 if (ground.F - ground.m) % 2 else 1
    return phase * wigner_3j(ground.F, 1, excited.F, -ground.m, q, excited.m) * _reduced_f(
        ground.F, excited.F
    )


def _channel_norm() -> float:
    # identical for every P1/2 sublevel (checked in tests)
    e = EXCITED_LEVELS[0]
    return sum(
        _raw_element(g, e, g.m - e.m) ** 2 for g in GROUND_LEVELS if abs(g.m - e.m) <= 1
    )


_NORM = None


def dipole_element(excited: IonLevel, ground: IonLevel) -> TransitionDipole:
    """Emission matrix element between a P1/2 and an S1/2 sublevel.

    Forbidden pairs give an element with zero components and zero weight.
    """
    global _NORM
    if not excited.is_excited:
        raise ValueError(f"{excited!r} is not a P1/2 level")
    if ground.is_excited:
        raise ValueError(f"{ground!r} is not an S1/2 level")
    if _NORM is None:
        _NORM = _channel_norm()

    q = ground.m - excited.m
    comps = [0.0, 0.0, 0.0]
    pol = None
    if abs(q) <= 1:
        value = _raw_element(ground, excited, q) / math.sqrt(_NORM)
        if abs(value) < 1e-14:
            value = 0.0
        comps[Q_VALUES.index(q)] = value
        if value != 0.0:
            pol = {-1: Polarization.SIGMA_PLUS, 1: Polarization.SIGMA_MINUS, 0: Polarization.PI}[q]
    weight = float(sum(abs(c) ** 2 for c in comps))
    return TransitionDipole(
        excited=excited,
        ground=ground,
        polarization=pol,
        spherical_components=tuple(complex(c) for c in comps),
        rate_weight=weight,
    )


@dataclass(frozen=True)
class LevelScheme:
    zeeman: ZeemanConfig
    levels: tuple[IonLevel, ...] = ALL_LEVELS
    dipoles: tuple[TransitionDipole, ...] = ()
    energies: dict = field(default_factory=dict)
    neglect_f0_excited: bool = True

    @property
    def gamma(self) -> float:
        return self.zeeman.gamma

    @property
    def ground_levels(self) -> tuple[IonLevel, ...]:
        return GROUND_LEVELS

    @property
    def excited_levels(self) -> tuple[IonLevel, ...]:
        return EXCITED_LEVELS

    @property
    def qubit_states(self) -> tuple[IonLevel, IonLevel]:
        return QUBIT_LEVELS

    def energy(self, level: IonLevel) -> float:
        return self.energies[level]

    def ground_energies(self) -> np.ndarray:
        return np.array([self.energies[g] for g in GROUND_LEVELS])

    def excited_energies(self) -> np.ndarray:
        return np.array([self.energies[e] for e in EXCITED_LEVELS])

    def dipole_vectors(self) -> np.ndarray:
        """Array ``[e, g, 3]`` of Cartesian emission dipoles."""
        out = np.zeros((4, 4, 3), dtype=complex)
        for d in self.dipoles:
            out[excited_index(d.excited), ground_index(d.ground)] = d.vector
        return out

    def dump(self) -> str:
        """One line per level: manifold, F, m, energy."""
        lines = ["# manifold F m energy"]
        for lev in self.levels:
            lines.append(
                f"{lev.manifold.value} {lev.F} {lev.m:+d} {self.energies[lev]:.12g}"
            )
        return "\n".join(lines) + "\n"


def level_energy(level: IonLevel, zeeman: ZeemanConfig) -> float:
    if level.is_excited:
        offset, split, slope = zeeman.optical_offset, zeeman.hyperfine_split_P, zeeman.delta1
    else:
        offset, split, slope = 0.0, zeeman.hyperfine_split_S, zeeman.delta2
    if level.F == 0:
        return offset
    return offset + split + slope * level.m


def build_level_scheme(zeeman: ZeemanConfig | None = None, neglect_f0_excited: bool = True) -> LevelScheme:
    """Assemble the eight sublevels, their energies and all allowed dipoles."""
    zeeman = zeeman or ZeemanConfig()
    if not zeeman.gamma > 0:
        raise ValueError(f"gamma must be positive, got {zeeman.gamma}")
    if not math.isfinite(zeeman.delta):
        raise ValueError("differential Zeeman splitting must be finite")
    dipoles = []
    for e in EXCITED_LEVELS:
        for g in GROUND_LEVELS:
            d = dipole_element(e, g)
            if d.is_allowed:
                dipoles.append(d)
    energies = {lev: level_energy(lev, zeeman) for lev in ALL_LEVELS}
    return LevelScheme(
        zeeman=zeeman,
        dipoles=tuple(dipoles),
        energies=energies,
        neglect_f0_excited=neglect_f0_excited,
    )


def decay_channels(excited: IonLevel, scheme: LevelScheme) -> list[tuple[TransitionDipole, float]]:
    """Allowed channels of a P1/2 sublevel with their amplitude decay rates."""
    if not excited.is_excited:
        raise ValueError(f"{excited!r} is not a P1/2 level")
    chans = [d for d in scheme.dipoles if d.excited == excited]
    chans.sort(key=lambda d: ground_index(d.ground))
    return [(d, 1.5 * scheme.gamma * d.rate_weight) for d in chans]
