"""Mirror geometry: aperture dyadic, exit-pupil fields, Fresnel factors, eta.

Angles
------
``theta`` is the polar angle of an emission direction seen from the focus,
measured from the axis pointing at the mirror vertex. A ray leaving at
``theta`` hits the paraboloid at incidence angle ``theta / 2`` and leaves the
exit pupil at radius ``r = 2 tan(theta / 2)`` in units of the focal length.

Fresnel convention
------------------
``r_TE = (cos i - k) / (cos i + k)`` and
``r_TM = (eps cos i - k) / (eps cos i + k)`` with ``k = sqrt(eps - sin^2 i)``.
At normal incidence ``r_TM = -r_TE``. A perfect conductor gives
``r_TE = -1`` and ``r_TM = +1``; the factors applied to the pupil field are
the ratios to that limit, ``t_TE = -r_TE`` and ``t_TM = r_TM``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from ._io import write_csv

SPEED_OF_LIGHT = 299_792_458.0
QUAD_EPSABS = 1e-10
ALUMINUM_EPSILON = -18.74 + 3.37j

# pupil quadrature sizes
_N_PHI = 64
_N_RADIAL = 256


@dataclass(frozen=True)
class MirrorGeometry:
    """Two confocal-axis parabolic mirrors facing each other.

    Lengths in metres, angles in radians. ``epsilon = inf`` models a
    perfect conductor. When ``phi_full`` is false the azimuthal range is
    ``(phi_min, phi_max)``.
    """

    focal_length: float = 2.1e-3
    foci_separation: float = 3.0e3
    theta_min: float = math.radians(20.0)
    theta_max: float = math.radians(135.0)
    phi_full: bool = True
    epsilon: complex = ALUMINUM_EPSILON
    wavelength: float = 369e-9
    phi_min: float = 0.0
    phi_max: float = 2 * math.pi

    def __post_init__(self):
        if not (0.0 <= self.theta_min < self.theta_max <= math.pi):
            raise ValueError(
                f"need 0 <= theta_min < theta_max <= pi, got ({self.theta_min}, {self.theta_max})"
            )
        if not self.phi_full and not (self.phi_min < self.phi_max <= self.phi_min + 2 * math.pi):
            raise ValueError("azimuthal range must be non-empty and at most 2 pi")
        if self.focal_length <= 0 or self.foci_separation < 0:
            raise ValueError("focal_length must be positive and foci_separation nonnegative")
        if not self.semiclassical_valid:
            warnings.warn(
                "wavelength is not small against the focal length; ray picture is unreliable",
                RuntimeWarning,
                stacklevel=2,
            )

    @property
    def tau(self) -> float:
        """Photon travel time between the foci, (4 f + d)/c."""
        return (4 * self.focal_length + self.foci_separation) / SPEED_OF_LIGHT

    @property
    def semiclassical_valid(self) -> bool:
        return self.wavelength < 0.01 * self.focal_length

    @property
    def phi_range(self) -> tuple[float, float]:
        return (0.0, 2 * math.pi) if self.phi_full else (self.phi_min, self.phi_max)

    @property
    def pupil_radii(self) -> tuple[float, float]:
        return pupil_radius(self.theta_min), pupil_radius(self.theta_max)

    @property
    def perfect_conductor(self) -> bool:
        return np.isinf(abs(self.epsilon))

    @classmethod
    def full_sphere(cls, **kwargs) -> "MirrorGeometry":
        return cls(theta_min=0.0, theta_max=math.pi, **kwargs)


def pupil_radius(theta):
    """Exit-pupil radius (units of f) of the ray emitted at polar angle theta."""
    return 2.0 * np.tan(np.asarray(theta) / 2.0)


def pupil_angle(r):
    """Inverse of :func:`pupil_radius`."""
    return 2.0 * np.arctan(np.asarray(r) / 2.0)


def _phi_moments(phi_full: bool, phi0: float, phi1: float) -> dict:
    """Azimuthal moments divided by pi, so full coverage gives exact small integers."""
    if phi_full:
        return dict(dphi=2.0, c2=1.0, s2=1.0, cs=0.0, c1=0.0, s1=0.0)
    dphi = phi1 - phi0
    ds2 = math.sin(2 * phi1) - math.sin(2 * phi0)
    raw = dict(
        dphi=dphi,
        c2=dphi / 2 + ds2 / 4,
        s2=dphi / 2 - ds2 / 4,
        cs=(math.sin(phi1) ** 2 - math.sin(phi0) ** 2) / 2,
        c1=math.sin(phi1) - math.sin(phi0),
        s1=-(math.cos(phi1) - math.cos(phi0)),
    )
    return {k: v / math.pi for k, v in raw.items()}


def _quad(fn, a, b) -> complex:
    """Adaptive Gauss-Kronrod quadrature of a possibly complex integrand."""
    re = integrate.quad(lambda x: np.real(fn(x)), a, b, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)[0]
    probe = fn(0.5 * (a + b))
    if np.iscomplexobj(probe):
        im = integrate.quad(lambda x: np.imag(fn(x)), a, b, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)[0]
        return complex(re, im)
    return re


def _weighted_dyadic(geom: MirrorGeometry, tm: Callable | None, te: Callable | None) -> np.ndarray:
    """(3/8pi) int_Omega sin(theta) [a e_theta e_theta + b e_phi e_phi] dtheta dphi.

    ``a(theta)`` and ``b(theta)`` weight the two transverse polarizations;
    with both equal to one this is the projector onto the transverse plane
    integrated over the aperture.
    """
    t0, t1 = geom.theta_min, geom.theta_max
    if tm is None:
        # unit weight: elementary antiderivatives
        c0, c1 = math.cos(t0), math.cos(t1)
        a_cc = (c0**3 - c1**3) / 3.0
        a_ss = (c0 - c1) - (c0**3 - c1**3) / 3.0
        a_sc = (math.sin(t1) ** 3 - math.sin(t0) ** 3) / 3.0
    else:
        a_cc = _quad(lambda th: np.sin(th) * np.cos(th) ** 2 * tm(th), t0, t1)
        a_ss = _quad(lambda th: np.sin(th) ** 3 * tm(th), t0, t1)
        a_sc = _quad(lambda th: np.sin(th) ** 2 * np.cos(th) * tm(th), t0, t1)
    if te is None:
        b_s = math.cos(t0) - math.cos(t1)
    else:
        b_s = _quad(lambda th: np.sin(th) * te(th), t0, t1)
    pm = _phi_moments(geom.phi_full, *geom.phi_range)

    dtype = complex if any(np.iscomplexobj(v) for v in (a_cc, a_ss, a_sc, b_s)) else float
    out = np.zeros((3, 3), dtype=dtype)
    out[0, 0] = a_cc * pm["c2"] + b_s * pm["s2"]
    out[1, 1] = a_cc * pm["s2"] + b_s * pm["c2"]
    out[2, 2] = a_ss * pm["dphi"]
    out[0, 1] = out[1, 0] = (a_cc - b_s) * pm["cs"]
    out[0, 2] = out[2, 0] = -a_sc * pm["c1"]
    out[1, 2] = out[2, 1] = -a_sc * pm["s1"]
    return out * (3.0 / 8.0) + 0.0


def gamma_rel(geom: MirrorGeometry) -> np.ndarray:
    """Aperture dyadic (3/8pi) int_Omega sin(theta) (1 - e_r e_r) dtheta dphi.

    Both angular integrals are elementary for a rectangular aperture and are
    evaluated in closed form.

    Real symmetric 3x3 with eigenvalues in [0, 1]; the identity for full
    coverage. Full-azimuth apertures give an exactly diagonal matrix.
    """
    return _weighted_dyadic(geom, None, None)


def fresnel_coeffs(theta_incidence, epsilon) -> tuple:
    """Fresnel amplitude reflection coefficients (r_TE, r_TM).

    See the module docstring for the sign convention. ``epsilon`` may be
    ``inf`` (perfect conductor). Accepts scalar or array angles.
    """
    th = np.asarray(theta_incidence, dtype=float)
    if np.any(th < 0) or np.any(th >= math.pi / 2):
        raise ValueError("incidence angle must lie in [0, pi/2)")
    eps = complex(epsilon)
    if np.isinf(abs(eps)):
        ones = np.ones_like(th)
        return (-ones + 0j)[()], (ones + 0j)[()]
    if eps.imag < 0:
        raise ValueError("passive media need Im(epsilon) >= 0")
    c = np.cos(th)
    k = np.sqrt(eps - np.sin(th) ** 2 + 0j)
    r_te = (c - k) / (c + k)
    r_tm = (eps * c - k) / (eps * c + k)
    return r_te[()], r_tm[()]


def mirror_factors(theta, epsilon):
    """(t_TM, t_TE): single-bounce amplitudes relative to a perfect conductor."""
    r_te, r_tm = fresnel_coeffs(np.asarray(theta) / 2.0, epsilon)
    return r_tm, -r_te


def exit_pupil_field(r, phi, helicity: int) -> np.ndarray:
    """Collimated sigma+/- polarization pattern in the exit pupil.

    Returns components on (e_r, e_phi, e_z) with a trailing axis of length
    3; ``r`` and ``phi`` broadcast. The unnormalised shape carries no
    radial amplitude envelope.
    """
    if helicity not in (1, -1):
        raise ValueError("helicity must be +1 or -1")
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(r < 0):
        raise ValueError("pupil radius must be nonnegative")
    r2 = r * r
    h = helicity
    er = (r2 - 4.0) * (np.cos(phi) + h * 1j * np.sin(phi))
    ephi = (r2 + 4.0) * (np.sin(phi) - h * 1j * np.cos(phi))
    er, ephi = np.broadcast_arrays(er, ephi)
    return np.stack([er, ephi, np.zeros_like(er)], axis=-1)


def pupil_amplitude(r):
    """Radial envelope that turns the polarization pattern into the field.

    Combined with the pupil area element it reproduces the circular-dipole
    emission pattern (1 + cos^2 theta) per solid angle.
    """
    return 1.0 / (4.0 + np.asarray(r) ** 2) ** 2


def _pupil_grid(geom: MirrorGeometry, n_r=_N_RADIAL, n_phi=_N_PHI):
    r0, r1 = geom.pupil_radii
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (r1 - r0) * x + 0.5 * (r1 + r0)
    wr = 0.5 * (r1 - r0) * w * r
    p0, p1 = geom.phi_range
    if geom.phi_full:
        # periodic trapezoid: exact for trigonometric polynomials of low degree
        phi = np.arange(n_phi) * (2 * math.pi / n_phi)
        wphi = np.full(n_phi, 2 * math.pi / n_phi)
    else:
        xp, wp = np.polynomial.legendre.leggauss(n_phi)
        phi = 0.5 * (p1 - p0) * xp + 0.5 * (p1 + p0)
        wphi = 0.5 * (p1 - p0) * wp
    return r[:, None], phi[None, :], wr[:, None] * wphi[None, :]


def modified_pupil_field(geom: MirrorGeometry, helicity: int, modifier=None):
    """Pupil field on the quadrature grid with TM/TE factors applied.

    ``modifier(r, phi) -> (f_TM, f_TE)`` overrides the Fresnel factors;
    it is the hook used for the phi-dependent negative control.
    Returns (field, weights).
    """
    r, phi, w = _pupil_grid(geom)
    field = exit_pupil_field(r, phi, helicity) * pupil_amplitude(r)[..., None]
    if modifier is None:
        if geom.perfect_conductor:
            f_tm = f_te = np.ones_like(r)
        else:
            f_tm, f_te = mirror_factors(pupil_angle(r), geom.epsilon)
    else:
        f_tm, f_te = modifier(r, phi)
    f_tm, f_te = np.broadcast_to(f_tm, field.shape[:-1]), np.broadcast_to(f_te, field.shape[:-1])
    field = field.copy()
    field[..., 0] *= f_tm
    field[..., 1] *= f_te
    return field, w


def helicity_cross_overlap(geom: MirrorGeometry, modifier=None) -> complex:
    """Normalised overlap of the modified sigma+ field with sigma-*.

    Zero whenever the TM/TE factors depend on r only.
    """
    f_plus, w = modified_pupil_field(geom, +1, modifier)
    r, phi, _ = _pupil_grid(geom)
    f_minus_ref = exit_pupil_field(r, phi, -1) * pupil_amplitude(r)[..., None]
    num = np.sum(w * np.einsum("...k,...k->...", f_plus, f_minus_ref.conj()))
    norm = math.sqrt(
        np.sum(w * np.sum(abs(f_plus) ** 2, axis=-1)) * np.sum(w * np.sum(abs(f_minus_ref) ** 2, axis=-1))
    )
    return complex(num / norm)


def _sigma_unit_vector(scheme=None) -> np.ndarray:
    if scheme is None:
        return np.array([1.0, 1j, 0.0]) / math.sqrt(2.0)
    from .levels import IonLevel, Manifold

    for d in scheme.dipoles:
        if d.excited == IonLevel(Manifold.P_HALF, 1, 0) and d.ground == IonLevel(Manifold.S_HALF, 1, -1):
            v = d.vector
            return v / np.linalg.norm(v)
    raise ValueError("scheme has no sigma channel from |P,1,0>")


def effective_dyadic(geom: MirrorGeometry) -> np.ndarray:
    """Aperture dyadic with two-bounce TM/TE factors on each ray."""
    if geom.perfect_conductor:
        return _weighted_dyadic(geom, None, None).astype(complex)

    def tm(th):
        return mirror_factors(th, geom.epsilon)[0] ** 2

    def te(th):
        return mirror_factors(th, geom.epsilon)[1] ** 2

    return _weighted_dyadic(geom, tm, te)


def efficiency_eta(geom: MirrorGeometry, scheme=None) -> float:
    """Success-probability factor of a real mirror pair relative to ideal.

    Model: the photon emitted on a sigma transition is coupled to the partner
    ion through each ray of the aperture, picking up one reflection at each
    mirror. The coupling amplitude is ``u^H G u`` with ``u`` the unit sigma
    dipole and ``G`` the aperture dyadic whose TM and TE parts carry the
    squared single-bounce factors; the probability factor is its squared
    modulus. Equals 1 for full coverage with perfect conductors.
    """
    u = _sigma_unit_vector(scheme)
    # dividing by u^H u keeps the ideal case free of normalisation rounding
    amp = (u.conj() @ effective_dyadic(geom) @ u) / (u.conj() @ u).real
    return float(min(abs(amp) ** 2, 1.0))


def fiber_coupling_efficiency(waist: float, geom: MirrorGeometry | None = None, helicity: int = 1) -> float:
    """Power coupling of the sigma pupil field into a circular Gaussian mode.

    ``waist`` is the 1/e field radius in units of f. The overlap runs over
    the whole collimated pupil unless ``geom`` is given, in which case it is
    limited to the aperture annulus.
    """
    if not waist > 0:
        raise ValueError("waist must be positive")
    r0, r1 = (0.0, np.inf) if geom is None else geom.pupil_radii
    n_phi = 16
    phi = np.arange(n_phi) * (2 * math.pi / n_phi)
    c_hat = np.array([1.0, helicity * 1j, 0.0]) / math.sqrt(2.0)

    def cartesian(r):
        f = exit_pupil_field(r, phi, helicity) * pupil_amplitude(r)
        cos, sin = np.cos(phi), np.sin(phi)
        ex = f[:, 0] * cos - f[:, 1] * sin
        ey = f[:, 0] * sin + f[:, 1] * cos
        return ex, ey

    def proj(r):
        if r > 1e30:
            return 0.0
        ex, ey = cartesian(r)
        return np.mean(c_hat[0].conjugate() * ex + c_hat[1].conjugate() * ey)

    def power(r):
        if r > 1e30:
            return 0.0
        ex, ey = cartesian(r)
        return np.mean(abs(ex) ** 2 + abs(ey) ** 2)

    gauss = lambda r: math.exp(-(r / waist) ** 2)
    num = _quad(lambda r: proj(r) * gauss(r) * r, r0, r1)
    n_field = _quad(lambda r: power(r) * r, r0, r1)
    n_gauss = _quad(lambda r: gauss(r) ** 2 * r, r0, r1)
    if n_gauss <= 0:
        return 0.0
    return float(abs(num) ** 2 / (n_field * n_gauss))


def max_fiber_coupling(geom: MirrorGeometry | None = None) -> tuple[float, float]:
    """(best waist, efficiency) by bounded scalar search."""
    res = optimize.minimize_scalar(
        lambda w: -fiber_coupling_efficiency(w, geom),
        bounds=(0.05, 20.0),
        method="bounded",
        options={"xatol": 1e-6},
    )
    return float(res.x), float(-res.fun)


def two_mirror_fiber_bound(geom: MirrorGeometry | None = None) -> float:
    """Best fiber-mediated link efficiency: one coupling per mirror."""
    return max_fiber_coupling(geom)[1] ** 2


def gamma_rel_csv(theta_max_grid, target=None, theta_min=0.0) -> str:
    rows = []
    for tmax in theta_max_grid:
        g = gamma_rel(MirrorGeometry(theta_min=theta_min, theta_max=float(tmax)))
        rows.append((math.degrees(theta_min), math.degrees(tmax), g[0, 0], g[1, 1], g[2, 2]))
    return write_csv(target, ["theta_min_deg", "theta_max_deg", "gamma_xx", "gamma_yy", "gamma_zz"], rows)


def eta_csv(theta_min_grid, target=None, base: MirrorGeometry | None = None) -> str:
    base = base or MirrorGeometry()
    rows = []
    for tmin in theta_min_grid:
        geom = MirrorGeometry(
            focal_length=base.focal_length,
            foci_separation=base.foci_separation,
            theta_min=float(tmin),
            theta_max=base.theta_max,
            epsilon=base.epsilon,
            wavelength=base.wavelength,
        )
        rows.append((math.degrees(tmin), efficiency_eta(geom)))
    return write_csv(target, ["theta_min_deg", "eta"], rows)


def fiber_csv(waist_grid, target=None, geom: MirrorGeometry | None = None) -> str:
    rows = [(w, fiber_coupling_efficiency(float(w), geom)) for w in waist_grid]
    return write_csv(target, ["waist_over_f", "coupling_efficiency"], rows)
