"""Superfluorescence onset: Bessel-kernel noise intensity and delay time."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .constants import C_LIGHT, HBAR
from .errors import DomainError, QuadratureError
from .medium import MediumParams, timescales

# Above this the power series is replaced by the asymptotic expansion.
# The asymptotic series cannot beat ~exp(-2y) in relative accuracy, so the
# switch has to sit well above y = 8 to keep 1e-12.
I0_SERIES_LIMIT = 20.0
I0_MAX_ARGUMENT = 700.0


def _i0_series(y: float) -> float:
    q = 0.25 * y * y
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if term < 1e-17 * total:
            return total


def _i0_asymptotic_factor(y: float) -> float:
    """Sum of ((2k-1)!!)^2 / (k! 8^k y^k), truncated at its smallest term."""
    total = 1.0
    term = 1.0
    k = 0
    while True:
        k += 1
        nxt = term * (2 * k - 1) ** 2 / (8.0 * k * y)
        if nxt >= term or nxt < 1e-17 * total:
            return total + (nxt if nxt < term else 0.0)
        term = nxt
        total += term


def bessel_I0(y):
    """Modified Bessel function of the first kind, order zero.

    Power series below ``I0_SERIES_LIMIT``, asymptotic expansion
    e^y / sqrt(2 pi y) (1 + 1/8y + 9/128y^2 + ...) above.  Negative
    arguments use the even extension.  Arguments above 700 would overflow
    and raise :class:`DomainError`.  Accepts scalars or arrays.
    """
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 0:
        return _bessel_I0_scalar(float(arr))
    out = np.empty_like(arr)
    for idx, v in np.ndenumerate(arr):
        out[idx] = _bessel_I0_scalar(float(v))
    return out


def _bessel_I0_scalar(y: float) -> float:
    if math.isnan(y):
        return math.nan
    y = abs(y)
    if y > I0_MAX_ARGUMENT:
        raise DomainError(f"bessel_I0 overflow: argument {y} exceeds {I0_MAX_ARGUMENT}")
    if y < I0_SERIES_LIMIT:
        return _i0_series(y)
    return math.exp(y) / math.sqrt(2.0 * math.pi * y) * _i0_asymptotic_factor(y)


def bessel_I0_derivative(y: float) -> float:
    """I0'(y) = I1(y), used only by diagnostics; series or asymptotic form."""
    y = float(y)
    sgn = 1.0 if y >= 0 else -1.0
    y = abs(y)
    if y < I0_SERIES_LIMIT:
        q = 0.25 * y * y
        term = 0.5 * y
        total = term
        k = 0
        while True:
            k += 1
            term *= q / (k * (k + 1))
            total += term
            if term <= 1e-17 * total:
                return sgn * total
    # I1 asymptotic: e^y/sqrt(2 pi y) * sum (-1)^k prod(4 - (2j-1)^2) / (k! 8^k y^k)
    total = 1.0
    term = 1.0
    k = 0
    while True:
        k += 1
        nxt = -term * (4.0 - (2 * k - 1) ** 2) / (8.0 * k * y)
        if abs(nxt) >= abs(term) or abs(nxt) < 1e-17:
            break
        term = nxt
        total += term
    return sgn * math.exp(y) / math.sqrt(2.0 * math.pi * y) * total


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SFContext:
    """Medium plus the derived quantities the SF formulas need."""

    medium: MediumParams

    @property
    def omega_p(self) -> float:
        return self.medium.omega_p

    @property
    def tau_R(self) -> float:
        return timescales(self.medium).tau_R

    @property
    def prefactor(self) -> float:
        """(2 pi d omega0 / c)^2 (N / S)."""
        m = self.medium
        return (2.0 * math.pi * m.dipole_d * m.omega0 / C_LIGHT) ** 2 * m.density_N / m.area_S


def _sf_integral(omega_p: float, L: float, t: float, rtol: float) -> tuple[float, float]:
    upper = min(L, C_LIGHT * t)
    if upper <= 0.0:
        return 0.0, 0.0

    def integrand(x):
        return bessel_I0(omega_p * math.sqrt((x / C_LIGHT) * (t - x / C_LIGHT))) ** 2

    # the step function edge sits at x = ct; integrating only up to min(L, ct)
    # keeps the kink at the end of the interval
    val, err = integrate.quad(integrand, 0.0, upper, epsrel=rtol, epsabs=0.0, limit=400)
    return val, err


def sf_intensity(ctx: SFContext, t: float, rtol: float = 1e-8) -> float:
    """Normally ordered field intensity <F^dag F>(L, t) at the output face.

    (2 pi d omega0/c)^2 (N/S) * int_0^L dx theta(t - x/c) I0^2(wp sqrt((x/c)(t - x/c)))
    evaluated by adaptive Gauss-Kronrod quadrature.
    """
    t = float(t)
    if t < 0.0:
        raise DomainError("sf_intensity needs t >= 0")
    val, err = _sf_integral(ctx.omega_p, ctx.medium.length_L, t, rtol)
    if val > 0.0 and err > max(rtol * val, 1e-300):
        raise QuadratureError(f"sf_intensity quadrature reached only {err / val:.2e} relative", err / val)
    return ctx.prefactor * val


def sf_intensity_short_time(ctx: SFContext, t: float) -> float:
    """Short-time limit (2 pi d omega0/c)^2 (N/S) c t."""
    return ctx.prefactor * C_LIGHT * float(t)


def sf_intensity_asymptotic(ctx: SFContext, t: float) -> float:
    """Large-time form (1/8 pi)(2 pi hbar omega0 / S c t) exp(4 sqrt(t / tau_R)).

    The exponent 4 sqrt(t/tau_R) is what the Bessel integral produces when
    wp^2 = 4c / (tau_R L); it is also the exponent that yields the delay
    time tau_R [ln(2 pi N_T)/4]^2.
    """
    m = ctx.medium
    t = float(t)
    return (1.0 / (8.0 * math.pi)) * (2.0 * math.pi * HBAR * m.omega0 / (m.area_S * C_LIGHT * t)) * math.exp(
        4.0 * math.sqrt(t / ctx.tau_R)
    )


@dataclass(frozen=True)
class DelayResult:
    closed_form: float
    root_solve: float

    @property
    def ratio(self) -> float:
        return self.closed_form / self.root_solve


def sf_delay(ctx: SFContext) -> DelayResult:
    """SF peak time by two routes.

    Closed form: tau_R [ln(2 pi N_T) / 4]^2.
    Root solve: the time at which (c / 2 pi) times the asymptotic intensity
    reaches N_T hbar omega0 / (S tau_R).  In units of tau_R this is the
    larger root of exp(4 sqrt(u)) = 8 pi N_T u.
    """
    m = ctx.medium
    nt = m.atom_count_NT
    if nt <= 1.0:
        raise DomainError("sf_delay needs N_T > 1")
    tau_r = ctx.tau_R
    closed = timescales(m).tau_D
    target = nt * HBAR * m.omega0 / (m.area_S * tau_r)

    def f(u):
        return math.log(C_LIGHT / (2.0 * math.pi) * sf_intensity_asymptotic(ctx, u * tau_r) / target)

    lo, hi = 1.0, 4.0
    try:
        if f(lo) >= 0.0:
            raise DomainError("sf_delay: root bracketing failure (threshold reached before t = tau_R)")
        while f(hi) <= 0.0:
            hi *= 2.0
            if hi > 1e8:
                raise DomainError("sf_delay: root bracketing failure")
    except OverflowError:
        raise DomainError("sf_delay: root bracketing failure (overflow)") from None
    u = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-14)
    return DelayResult(closed, u * tau_r)
