"""Signal, noise and signal-to-noise ratio of a weak pulse in the amplifier.

All intensities here are normally ordered field expectations <F^dag F> in
Gaussian units unless stated otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .constants import C_LIGHT, HBAR
from .errors import DomainError, ParameterError
from .medium import (
    MUCH_GREATER,
    MediumParams,
    PulseParams,
    RegimeReport,
    gain_coefficient,
    group_velocity,
    regime_report,
    timescales,
)

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class SNRInputs:
    """Medium and pulse together with the derived quantities used below."""

    medium: MediumParams
    pulse: PulseParams
    observation_t: float | None = None

    def __post_init__(self):
        self.pulse.check_against(self.medium)

    @property
    def v_g(self) -> float:
        return group_velocity(self.medium, self.pulse.detuning_Delta).v_g

    @property
    def excess(self) -> float:
        return group_velocity(self.medium, self.pulse.detuning_Delta).excess

    @property
    def g(self) -> float:
        return gain_coefficient(self.medium, self.pulse.detuning_Delta).g

    @property
    def beta(self) -> float:
        return self.medium.beta

    @property
    def tau_R(self) -> float:
        return timescales(self.medium).tau_R

    @property
    def field_prefactor(self) -> float:
        """(2 pi d omega0 / c)^2 (N / S)."""
        m = self.medium
        return (2.0 * math.pi * m.dipole_d * m.omega0 / C_LIGHT) ** 2 * m.density_N / m.area_S

    @property
    def peak_time(self) -> float:
        return self.medium.length_L / self.v_g

    def regime(self, observation_T: float | None = None) -> RegimeReport:
        T = observation_T if observation_T is not None else (self.observation_t or self.peak_time)
        return regime_report(self.medium, self.pulse, T)


def _expm1_difference(a: float, b: float) -> float:
    """exp(a) - exp(-b) without cancellation when both exponents are small."""
    return math.expm1(a) - math.expm1(-b)


def noise_intensity(inputs: SNRInputs, t: float) -> float:
    """Dipole-fluctuation noise <F_n^dag F_n>(z, t) with t_o = 0.

    (2 pi d omega0/c)^2 (N/S) (c / 2 beta) [exp(g v_g t) - exp(-2 beta t)]

    For beta = 0 the beta -> 0 limit is returned; that limit is
    (2 pi d omega0/c)^2 (N/S) v_g t when g = 2 beta (1/c - 1/v_g).
    """
    t = float(t)
    if t < 0.0:
        raise DomainError("noise_intensity needs t >= 0")
    beta = inputs.beta
    v_g = inputs.v_g
    pref = inputs.field_prefactor
    if t == 0.0:
        return 0.0
    if beta == 0.0:
        # g / beta is finite as beta -> 0: g = (wp^2 w / 2c) beta / (Delta^2 + beta^2)
        m = inputs.medium
        d = inputs.pulse.detuning_Delta
        g_over_beta = m.omega_p_squared * m.inversion_w / (2.0 * C_LIGHT) / (d * d)
        return pref * 0.5 * C_LIGHT * (g_over_beta * v_g * t + 2.0 * t)
    g = inputs.g
    return pref * C_LIGHT / (2.0 * beta) * _expm1_difference(g * v_g * t, 2.0 * beta * t)


def signal_intensity(inputs: SNRInputs, t) -> float | np.ndarray:
    """Incident signal <F_s^dag F_s>(0, t - L/v_g).

    q 2 pi hbar omega0 / (v_g S tau_p sqrt(pi)) exp(-(t - L/v_g)^2 / tau_p^2),
    which makes the flux (v_g / 2 pi) <F^dag F> integrate to q hbar omega0 / S.
    """
    p = inputs.pulse
    m = inputs.medium
    v_g = inputs.v_g
    peak = p.photon_number_q * 2.0 * math.pi * HBAR * m.omega0 / (v_g * m.area_S * p.duration_tau_p * SQRT_PI)
    s = (np.asarray(t, dtype=float) - m.length_L / v_g) / p.duration_tau_p
    out = peak * np.exp(-s * s)
    return float(out) if out.ndim == 0 else out


def signal_energy_flux(inputs: SNRInputs) -> float:
    """Time-integrated incident flux (v_g/2 pi) int <F_s^dag F_s> dt, by quadrature."""
    v_g = inputs.v_g
    tc = inputs.peak_time
    tp = inputs.pulse.duration_tau_p
    val, _ = integrate.quad(
        lambda t: signal_intensity(inputs, t), tc - 40 * tp, tc + 40 * tp, points=[tc], epsabs=0.0, epsrel=1e-13, limit=200
    )
    return v_g / (2.0 * math.pi) * val


def noise_denominator(inputs: SNRInputs) -> float:
    """(2 pi d omega0/c)^2 N L / S, the noise level the atoms produce over L."""
    return inputs.field_prefactor * inputs.medium.length_L


@dataclass(frozen=True)
class SNRForms:
    form_photon_ratio: float
    form_cooperative: float
    form_advance: float
    max_relative_deviation: float
    flags: RegimeReport | None = None

    @property
    def value(self) -> float:
        return self.form_cooperative


def _rel_spread(values):
    ref = max(abs(v) for v in values)
    if ref == 0.0:
        return 0.0
    return (max(values) - min(values)) / ref


def snr(inputs: SNRInputs, t: float, noise: str = "fixed", check_tol: float | None = 1e-10, with_flags: bool = True) -> SNRForms:
    """Signal-to-noise ratio at the output face in three algebraically equal forms.

    ``form_photon_ratio``  signal / [(2 pi d omega0/c)^2 N L / S]
    ``form_cooperative``  (q/sqrt(pi)) (tau_R/tau_p) (c/v_g) exp(-(t - L/v_g)^2/tau_p^2)
    ``form_advance`` (q/sqrt(pi)) tau_p / ((v_g/c - 1)(L/c) Delta^2 tau_p^2) exp(...)

    The default ``noise="fixed"`` holds the noise at its value for the
    transit time, as the three closed forms assume.  ``noise="time-dependent"``
    divides the same signal by :func:`noise_intensity` evaluated at ``t``
    instead; the three forms are then all scaled by the same ratio.

    When ``check_tol`` is set, a mutual disagreement larger than it raises
    :class:`DomainError` (inconsistent derived inputs).
    """
    m = inputs.medium
    p = inputs.pulse
    v_g = inputs.v_g
    tau_p = p.duration_tau_p
    q = p.photon_number_q
    s = (float(t) - m.length_L / v_g) / tau_p
    envelope = math.exp(-s * s)
    f_ratio = signal_intensity(inputs, t) / noise_denominator(inputs)
    f_coop = q / SQRT_PI * (inputs.tau_R / tau_p) * (C_LIGHT / v_g) * envelope
    delta = p.detuning_Delta
    f_adv = q / SQRT_PI * tau_p / (inputs.excess * (m.length_L / C_LIGHT) * delta * delta * tau_p * tau_p) * envelope
    if noise == "time-dependent":
        n_t = noise_intensity(inputs, t)
        if n_t == 0.0:
            raise DomainError("time-dependent noise vanishes at t = 0")
        scale = noise_denominator(inputs) / n_t
        f_ratio, f_coop, f_adv = f_ratio * scale, f_coop * scale, f_adv * scale
    elif noise != "fixed":
        raise ParameterError("noise must be 'fixed' or 'time-dependent'")
    spread = _rel_spread([f_ratio, f_coop, f_adv])
    if check_tol is not None and spread > check_tol:
        raise DomainError(f"SNR forms disagree by {spread:.3e}; derived inputs are inconsistent")
    flags = None
    if with_flags:
        try:
            flags = inputs.regime(float(t) if t > 0 else None)
        except DomainError:
            flags = None
    return SNRForms(f_ratio, f_coop, f_adv, spread, flags)


def peak_snr(inputs: SNRInputs) -> float:
    """(q / sqrt(pi)) (tau_R / tau_p) (c / v_g), the SNR at t = L / v_g."""
    p = inputs.pulse
    return p.photon_number_q / SQRT_PI * (inputs.tau_R / p.duration_tau_p) * (C_LIGHT / inputs.v_g)


@dataclass(frozen=True)
class SNRBounds:
    detuning_bound: float
    detuning_bound_valid: bool
    separation_ratio: float  # (v_g/c - 1)(L/c) / tau_p
    frequency_independent_bound: float
    frequency_independent_valid: bool
    peak: float

    @property
    def noise_dominated(self) -> bool:
        return self.detuning_bound_valid and self.peak < 1.0


def snr_bounds(inputs: SNRInputs, threshold: float = MUCH_GREATER) -> SNRBounds:
    """Upper bounds on the peak SNR.

    ``detuning_bound`` (q/sqrt(pi)) / (Delta tau_p)^2 applies once the superluminal
    advance (v_g/c - 1) L/c reaches ``threshold`` pulse durations.
    ``frequency_independent_bound`` q tau_p / ((v_g/c - 1) L/c) applies whenever
    |Delta| tau_p >= 1 and contains no reference to the transition frequency.
    """
    p = inputs.pulse
    m = inputs.medium
    q = p.photon_number_q
    tau_p = p.duration_tau_p
    dtp = abs(p.detuning_Delta) * tau_p
    advance = inputs.excess * m.length_L / C_LIGHT
    sep = advance / tau_p
    det_bound = q / SQRT_PI / (dtp * dtp)
    fib = math.inf if advance <= 0.0 else q * tau_p / advance
    peak = peak_snr(inputs)
    return SNRBounds(det_bound, sep >= threshold and dtp >= 1.0, sep, fib, dtp >= 1.0 and advance > 0.0, peak)


@dataclass(frozen=True)
class VacuumCrosscheck:
    value: float
    lorentzian_integral: float
    lorentzian_quadrature: float
    photon_denominator: float

    @property
    def relative_gap(self) -> float:
        return abs(self.value - self.photon_denominator) / self.photon_denominator


def lorentzian_integral_quadrature(beta: float, rtol: float = 1e-12) -> float:
    """int beta / (Delta^2 + beta^2) dDelta over the whole line, by quadrature.

    The half-line integral is taken in s = ln Delta over ln beta +- 50, where
    the integrand beta e^s / (e^{2s} + beta^2) is a smooth bump; the two
    clipped tails contribute ~e^-50 each and are dropped.  Mapping the
    infinite interval directly loses the peak when beta is far from 1.
    """
    if beta <= 0.0:
        raise DomainError("Lorentzian integral needs beta > 0")
    lb = math.log(beta)

    def f(s):
        u = math.exp(s - lb)
        return u / (u * u + 1.0)

    half, _ = integrate.quad(f, lb - 50.0, lb + 50.0, points=[lb], epsabs=0.0, epsrel=rtol, limit=400)
    return 2.0 * half


def vacuum_noise_crosscheck(inputs: SNRInputs) -> VacuumCrosscheck:
    """Anti-normally ordered route to the amplifier noise.

    Summing (2 pi hbar omega / S l) g(omega) L over the field modes, taking the
    mode continuum and omega ~ omega0 in the numerator, gives
    (hbar omega0 L / c S) * int g dOmega, and the Lorentzian integrates to
    (wp^2 w / 2c) * pi.  This reproduces (2 pi d omega0/c)^2 N L / S.
    """
    m = inputs.medium
    gain_weight = m.omega_p_squared * m.inversion_w / (2.0 * C_LIGHT)  # g = gain_weight * Lorentzian
    lor = math.pi
    quad = lorentzian_integral_quadrature(inputs.beta) if inputs.beta > 0 else math.pi
    value = HBAR * m.omega0 * m.length_L / (C_LIGHT * m.area_S) * gain_weight * lor
    return VacuumCrosscheck(value, lor, quad, noise_denominator(inputs))


def snr_grid(medium: MediumParams, q: float, deltas, tau_ps, lengths) -> np.ndarray:
    """Peak SNR forms over a (Delta, tau_p, L) grid; returns shape (..., 3)."""
    out = np.empty((len(deltas), len(tau_ps), len(lengths), 3))
    for i, d in enumerate(deltas):
        for j, tp in enumerate(tau_ps):
            for k, L in enumerate(lengths):
                mm = medium.replace(length_L=L)
                inp = SNRInputs(mm, PulseParams.for_medium(mm, q, tp, d))
                f = snr(inp, inp.peak_time, check_tol=None, with_flags=False)
                out[i, j, k] = (f.form_photon_ratio, f.form_cooperative, f.form_advance)
    return out
