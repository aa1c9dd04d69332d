"""Piecewise exponential-polynomial functions and their exact integrals.

A series is a sum of terms ``Theta(t - s) * sum_d C_d (t - s)^d exp(-mu (t - s))``
with vector-valued coefficients ``C_d``. The class is closed under the two
operations the delayed amplitude equations need: retarded convolution with a
diagonal exponential propagator, and (for scalar components) integration of
a product against an oscillating phase. Both are done in closed form, so the
only error is floating-point rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# |nu| * horizon below which exp(-nu v) is expanded as a Taylor polynomial
TAYLOR_SWITCH = 1.0
_TAYLOR_TOL = 1e-18
_SERIES_MAX_TERMS = 400


@dataclass
class ExpTerm:
    shift: float
    rate: complex
    coeffs: np.ndarray  # shape (degree + 1, n) or (degree + 1,)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1


def _horner(coeffs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """sum_d coeffs[d] u^d for coeffs of shape (D+1, ...) and u of shape (T,)."""
    out = np.zeros(u.shape + coeffs.shape[1:], dtype=complex)
    uu = u.reshape(u.shape + (1,) * (coeffs.ndim - 1))
    for c in coeffs[::-1]:
        out = out * uu + c
    return out


class ExpSeries:
    """Vector-valued sum of shifted exponential-polynomial terms."""

    def __init__(self, size: int, terms=None):
        self.size = size
        self._terms: dict[tuple[float, complex], np.ndarray] = {}
        for term in terms or ():
            self.add(term.shift, term.rate, term.coeffs)

    def add(self, shift: float, rate: complex, coeffs: np.ndarray) -> None:
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        key = (float(shift), complex(rate))
        old = self._terms.get(key)
        if old is None:
            self._terms[key] = coeffs.copy()
            return
        deg = max(old.shape[0], coeffs.shape[0])
        merged = np.zeros((deg, self.size), dtype=complex)
        merged[: old.shape[0]] += old
        merged[: coeffs.shape[0]] += coeffs
        self._terms[key] = merged

    @property
    def terms(self) -> list[ExpTerm]:
        return [ExpTerm(s, r, c) for (s, r), c in sorted(self._terms.items(), key=lambda kv: (kv[0][0], kv[0][1].real, kv[0][1].imag))]

    def __add__(self, other: "ExpSeries") -> "ExpSeries":
        out = ExpSeries(self.size, self.terms)
        for term in other.terms:
            out.add(term.shift, term.rate, term.coeffs)
        return out

    @classmethod
    def exponential(cls, rates: np.ndarray, initial: np.ndarray) -> "ExpSeries":
        """Solution exp(-diag(rates) t) @ initial of the undriven problem."""
        rates = np.asarray(rates, dtype=complex)
        initial = np.asarray(initial, dtype=complex)
        out = cls(len(rates))
        for rate in dict.fromkeys(rates.tolist()):
            mask = rates == rate
            c = np.where(mask, initial, 0.0)
            if np.any(c != 0):
                out.add(0.0, rate, c[None, :])
        return out

    def evaluate(self, t) -> np.ndarray:
        """Values at times ``t``; shape ``(len(t), size)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((t.size, self.size), dtype=complex)
        for (shift, rate), coeffs in self._terms.items():
            u = t - shift
            on = u >= 0
            if not np.any(on):
                continue
            uo = u[on]
            out[on] += _horner(coeffs, uo) * np.exp(-rate * uo)[:, None]
        return out

    def delayed_convolution(self, rates: np.ndarray, matrix: np.ndarray, delay: float, t_end: float) -> "ExpSeries":
        """Series for ``y`` solving ``y' = -diag(rates) y - matrix @ x(t - delay)``, y = 0 early.

        ``x`` is this series. The result is exact on ``t <= t_end``; the
        horizon only selects between the two algebraically equivalent forms
        of the elementary integral.
        """
        rates = np.asarray(rates, dtype=complex)
        out = ExpSeries(self.size)
        for (shift, mu), coeffs in self._terms.items():
            s1 = shift + delay
            horizon = t_end - s1
            if horizon <= 0:
                continue
            driven = coeffs @ matrix.T  # (D+1, n): row d is matrix @ C_d
            active = np.nonzero(np.any(driven != 0, axis=0))[0]
            for c in active:
                lam = rates[c]
                nu = mu - lam
                col = driven[:, c]
                if abs(nu) * horizon <= TAYLOR_SWITCH:
                    poly = _taylor_primitive(col, nu, horizon)
                    vec = np.zeros((poly.size, self.size), dtype=complex)
                    vec[:, c] = -poly
                    out.add(s1, lam, vec)
                else:
                    const = 0.0 + 0j
                    moving = np.zeros(col.size, dtype=complex)
                    for d, cd in enumerate(col):
                        if cd == 0:
                            continue
                        f = math.factorial(d) / nu ** (d + 1)
                        const += cd * f
                        for k in range(d + 1):
                            moving[k] += cd * f * nu**k / math.factorial(k)
                    vec = np.zeros((1, self.size), dtype=complex)
                    vec[0, c] = -const
                    out.add(s1, lam, vec)
                    vec = np.zeros((moving.size, self.size), dtype=complex)
                    vec[:, c] = moving
                    out.add(s1, mu, vec)
        return out

    def component(self, index: int, delay: float = 0.0) -> list[ExpTerm]:
        """Scalar terms of one component, optionally shifted later by ``delay``."""
        out = []
        for (shift, rate), coeffs in self._terms.items():
            col = coeffs[:, index]
            nz = np.nonzero(col)[0]
            if nz.size:
                out.append(ExpTerm(shift + delay, rate, col[: nz[-1] + 1].copy()))
        return out


def _taylor_primitive(col: np.ndarray, nu: complex, horizon: float) -> np.ndarray:
    """Coefficients in u of sum_d col[d] int_0^u v^d exp(-nu v) dv, as a polynomial."""
    x = abs(nu) * horizon
    n_terms = 1
    term = 1.0
    while term > _TAYLOR_TOL and n_terms < 200:
        term *= x / n_terms
        n_terms += 1
    poly = np.zeros(col.size + n_terms + 1, dtype=complex)
    for d, cd in enumerate(col):
        if cd == 0:
            continue
        fac = 1.0 + 0j
        for n in range(n_terms):
            poly[d + n + 1] += cd * fac / (d + n + 1)
            fac *= -nu / (n + 1)
    return np.trim_zeros(poly, "b") if np.any(poly) else poly[:1]


def incomplete_moment(d: int, nu: complex, length: float) -> complex:
    """int_0^length v^d exp(-nu v) dv for Re(nu) >= 0 (any complex nu)."""
    if length <= 0:
        return 0.0 + 0j
    x = nu * length
    if abs(x) <= max(4.0, 2.0 * (d + 1)):
        # Kummer form of the lower incomplete gamma function; no cancellation
        total = 0.0 + 0j
        term = 1.0 / (d + 1) + 0j
        for n in range(_SERIES_MAX_TERMS):
            total += term
            term *= x / (d + 2 + n)
            if abs(term) < 1e-17 * abs(total):
                break
        return length ** (d + 1) * np.exp(-x) * total
    partial = 0.0 + 0j
    pw = 1.0 + 0j
    for k in range(d + 1):
        partial += pw
        pw *= x / (k + 1)
    return math.factorial(d) / nu ** (d + 1) * (1.0 - np.exp(-x) * partial)


def _shift_poly(coeffs: np.ndarray, delta: float) -> np.ndarray:
    """Coefficients of p(v + delta) in v."""
    if delta == 0 or coeffs.size == 1:
        return coeffs
    out = np.zeros_like(coeffs)
    for d, cd in enumerate(coeffs):
        for k in range(d + 1):
            out[k] += cd * math.comb(d, k) * delta ** (d - k)
    return out


def product_phase_integral(a_terms: list[ExpTerm], b_terms: list[ExpTerm], omega: float, t: float) -> complex:
    """int_0^t exp(-i omega (t - t')) a(t') conj(b(t')) dt' for scalar series."""
    total = 0.0 + 0j
    for a in a_terms:
        for b in b_terms:
            s = max(a.shift, b.shift)
            length = t - s
            if length <= 0:
                continue
            da, db = s - a.shift, s - b.shift
            pa = _shift_poly(a.coeffs, da)
            pb = _shift_poly(np.conj(b.coeffs), db)
            pre = np.exp(-a.rate * da - np.conj(b.rate) * db)
            poly = np.convolve(pa, pb)
            nu = a.rate + np.conj(b.rate) - 1j * omega
            acc = 0.0 + 0j
            for d, cd in enumerate(poly):
                if cd != 0:
                    acc += cd * incomplete_moment(d, nu, length)
            total += pre * np.exp(-1j * omega * length) * acc
    return complex(total)


def evaluate_terms(terms: list[ExpTerm], t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros(t.shape, dtype=complex)
    for term in terms:
        u = t - term.shift
        on = u >= 0
        if np.any(on):
            out[on] += _horner(term.coeffs, u[on]) * np.exp(-term.rate * u[on])
    return out
