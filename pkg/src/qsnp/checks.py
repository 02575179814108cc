"""Acceptance checks with their tolerances, shared by ``qsnp selftest`` and the test suite.

Each check builds its own scenario, compares against an independent oracle
and returns a :class:`CheckResult`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np

from .amplifier_snr import SNRInputs, noise_intensity, peak_snr, snr, vacuum_noise_crosscheck
from .constants import C_LIGHT, HBAR
from .medium import MediumParams, PulseParams, TransitionSpec, group_velocity, timescales
from .superfluorescence import (
    SFContext,
    bessel_I0,
    sf_delay,
    sf_intensity,
    sf_intensity_asymptotic,
    sf_intensity_short_time,
)


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    name: str
    passed: bool
    value: float
    target: str
    seconds: float
    detail: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] criterion {self.criterion:2d} {self.name}: {self.value:.6g} (target {self.target}; {self.seconds:.2f} s) {self.detail}".rstrip()


# ---------------------------------------------------------------------------
# reference media

OMEGA0 = 3e15
DIPOLE = 2.5e-18
SLAB_L = 1.0
SLAB_S = 1e-3


def density_for_coupling(wp_L_over_c: float, length_L: float = SLAB_L, omega0: float = OMEGA0, dipole: float = DIPOLE) -> float:
    """Density giving omega_p L / c = ``wp_L_over_c``."""
    wp = wp_L_over_c * C_LIGHT / length_L
    return wp * wp / (8.0 * math.pi * dipole * dipole * omega0 / HBAR)


def coupled_medium(wp_L_over_c: float, beta_L_over_c: float | None = None, length_L: float = SLAB_L) -> MediumParams:
    """Slab with prescribed omega_p L/c and (optionally) beta L/c."""
    beta = None if beta_L_over_c is None else beta_L_over_c * C_LIGHT / length_L
    tr = TransitionSpec(omega0=OMEGA0, dipole_d=DIPOLE, beta=beta)
    return MediumParams(tr, density_for_coupling(wp_L_over_c, length_L), 1.0, length_L, SLAB_S)


def sparse_medium(density_N: float = 1e10) -> MediumParams:
    return MediumParams(TransitionSpec(omega0=OMEGA0, dipole_d=DIPOLE), density_N, 1.0, SLAB_L, SLAB_S)


def _timed(fn: Callable[[], tuple]) -> tuple:
    t0 = time.perf_counter()
    out = fn()
    return out + (time.perf_counter() - t0,)


# ---------------------------------------------------------------------------
# 1-4: wave packets


def check_group_velocity() -> CheckResult:
    from .wavepacket import Grid1D, make_gaussian_packet, measure_arrival, synthesize

    def run():
        n = 2**14
        dx = 0.05
        grid = Grid1D(-100.0 - 0.25 * n * dx, dx, n)
        pk = make_gaussian_packet(grid, 5.0, 0.5, -100.0, 1.0)
        fields = [synthesize(pk, t) for t in (0.0, 10.0, 20.0, 30.0)]
        fit = measure_arrival(fields)
        expect = 5.0 / math.sqrt(24.0)
        return (abs(fit.velocity / expect - 1.0), f"v={fit.velocity:.6f} expected {expect:.6f}")

    err, detail, sec = _timed(run)
    return CheckResult(1, "centroid group velocity", err < 0.01 and sec < 5.0, err, "rel err < 1e-2, < 5 s", sec, detail)


def _reference_packet():
    from .wavepacket import Grid1D, make_gaussian_packet

    grid = Grid1D.centered(480.0, 4096)
    return make_gaussian_packet(grid, 5.0, 0.5, 10.0, 1.0)


def check_tail_reconstruction() -> CheckResult:
    from .wavepacket import cancellation_check

    def run():
        rep = cancellation_check(_reference_packet(), 0.0, 30.0, oracle="spectral")
        return (rep.reconstruction_error, f"growth ratio {rep.growth_ratio:.3g}")

    err, detail, sec = _timed(run)
    return CheckResult(2, "tail reconstruction", err < 1e-6 and sec < 5.0, err, "< 1e-6, < 5 s", sec, detail)


def check_luminal_cancellation() -> CheckResult:
    from .wavepacket import cancellation_check, growth_rate

    def run():
        pk = _reference_packet()
        rep = cancellation_check(pk, 0.0, 30.0, oracle="samples")
        rate, _ = growth_rate(pk, 0.0, np.linspace(20.0, 30.0, 6))
        ok = rep.residual < 1e-8 and rep.growth_ratio > 1e3 and abs(rate - 1.0) <= 0.05
        return (rep.residual, ok, f"growth ratio {rep.growth_ratio:.3g}, fitted rate {rate:.4f} (c m = 1)")

    res, ok, detail, sec = _timed(run)
    return CheckResult(3, "luminal cancellation", ok, res, "residual < 1e-8, ratio > 1e3, rate 1 +- 5%", sec, detail)


def check_fd_causality(n_steps: int = 1000) -> CheckResult:
    from .wavepacket import FDState, Grid1D, fd_propagate

    def run():
        n = 4096
        grid = Grid1D(-3000.0 * 0.5, 0.5, n)
        x = grid.x
        # smooth bump supported on (-60, -20)
        u = (x + 40.0) / 20.0
        inside = np.abs(u) < 1.0
        bump = np.zeros(n)
        bump[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2)) * np.cos(2.0 * x[inside])
        state = FDState(grid, bump.astype(complex), bump.astype(complex), 0.4, 0.1, 1.0)
        out = fd_propagate(state, n_steps)
        edge = x[inside].max()
        beyond = x > edge + n_steps * grid.dx + 1e-9
        leak = float(np.max(np.abs(out.field_now[beyond])))
        inside_max = float(np.max(np.abs(out.field_now)))
        return (leak, f"max |E| inside cone {inside_max:.3g}")

    leak, detail, sec = _timed(run)
    return CheckResult(4, "finite-difference causality", leak < 1e-14 and sec < 10.0, leak, "|E| < 1e-14 beyond cone, < 10 s", sec, detail)


# ---------------------------------------------------------------------------
# 5-6: SNR


def check_snr_forms() -> CheckResult:
    def run():
        base = sparse_medium(1e12)
        wp = base.omega_p
        worst = 0.0
        for Delta in np.geomspace(2.0 * wp, 1e4 * wp, 10):
            for tau_p in np.geomspace(1e-3, 1e3, 10) / wp:
                for L in np.geomspace(0.01, 100.0, 10):
                    med = base.replace(length_L=float(L))
                    inp = SNRInputs(med, PulseParams.for_medium(med, 1.0, float(tau_p), float(Delta)))
                    forms = snr(inp, inp.peak_time, check_tol=None, with_flags=False)
                    worst = max(worst, forms.max_relative_deviation)
        # worked value: q = 1, tau_p = tau_R, v_g = 2c
        med = base
        Delta = wp / math.sqrt(2.0)
        tau_r = timescales(med).tau_R
        inp = SNRInputs(med, PulseParams.for_medium(med, 1.0, tau_r, Delta))
        val = peak_snr(inp)
        ok = worst <= 1e-10 and abs(val - 0.28209) <= 1e-5
        return (worst, ok, f"worked value {val:.6f} (v_g/c = {inp.v_g / C_LIGHT:.12f})")

    worst, ok, detail, sec = _timed(run)
    return CheckResult(5, "SNR three-form equivalence", ok, worst, "spread <= 1e-10; peak 0.28209 +- 1e-5", sec, detail)


def check_snr_verdicts() -> CheckResult:
    def run():
        base = sparse_medium(1e12)
        Delta = 3.0 * base.omega_p
        tau_p = 5.0 / Delta
        excess = group_velocity(base, Delta).excess
        L = 10.0 * tau_p * C_LIGHT / excess
        med = base.replace(length_L=L)
        det_bound = peak_snr(SNRInputs(med, PulseParams.for_medium(med, 1.0, tau_p, Delta)))
        # short-pulse regime
        vg = group_velocity(base, Delta).v_g
        tp = timescales(base).tau_R * C_LIGHT / vg
        one = peak_snr(SNRInputs(base, PulseParams.for_medium(base, 1.0, tp, Delta)))
        two = peak_snr(SNRInputs(base, PulseParams.for_medium(base, 2.0, tp, Delta)))
        ok = det_bound < 0.0226 and abs(one - 1.0 / math.sqrt(math.pi)) < 1e-12 and two > 1.0
        return (det_bound, ok, f"short-pulse q=1 -> {one:.6f}, q=2 -> {two:.6f}")

    det_bound, ok, detail, sec = _timed(run)
    return CheckResult(6, "detuning-bound and short-pulse verdicts", ok, det_bound, "far-detuned peak < 0.0226; short-pulse q/sqrt(pi), q=2 > 1", sec, detail)


# ---------------------------------------------------------------------------
# 7: superfluorescence


def check_sf_intensity() -> CheckResult:
    def run():
        med = sparse_medium(1e10)
        ctx = SFContext(med)
        ts = timescales(med)
        t_short = np.linspace(0.05, 1.0, 8) * min(0.01 * ts.tau_R, ts.transit_L_over_c)
        short = max(abs(sf_intensity(ctx, t) / sf_intensity_short_time(ctx, t) - 1.0) for t in t_short)
        t_long = 100.0 * ts.tau_R
        asym = sf_intensity(ctx, t_long) / sf_intensity_asymptotic(ctx, t_long)
        ratios = []
        for nt in np.geomspace(1e4, 1e12, 9):
            m = med.replace(density_N=float(nt) / (med.length_L * med.area_S))
            ratios.append(sf_delay(SFContext(m)).ratio)
        ok = short < 0.01 and abs(asym - 1.0) < 0.25 and all(0.5 <= r <= 2.0 for r in ratios)
        return (short, ok, f"asymptotic ratio {asym:.4f}; delay ratios {min(ratios):.3f}..{max(ratios):.3f}")

    short, ok, detail, sec = _timed(run)
    ok = ok and sec < 30.0
    return CheckResult(7, "SF intensity and delay", ok, short, "short 1%, asymptotic 25%, delay x2, < 30 s", sec, detail)


# ---------------------------------------------------------------------------
# 8: Monte Carlo


def check_monte_carlo(replicates: int = 32) -> CheckResult:
    from .maxwell_bloch import MBGrid, convergence_study, ensemble_statistics, run_realizations

    def run():
        L = SLAB_L
        T0 = L / C_LIGHT
        notes = []
        # SF mode
        med = coupled_medium(3.0)
        grid = MBGrid.for_window(128, L, 6.0 * T0)
        t = grid.output_times
        levels = [int(np.argmin(np.abs(t - p))) for p in np.linspace(0.6, 6.0, 10) * T0]
        ctx = SFContext(med)
        ref = np.array([sf_intensity(ctx, t[i]) for i in levels])
        st = ensemble_statistics(run_realizations(grid, med, 2024, range(1000), "sf", levels=levels))
        z_sf = float(np.max(np.abs(st.mean_intensity - ref) / st.intensity_stderr))
        notes.append(f"SF max |z| {z_sf:.2f}")
        # amplifier mode, noise only
        amed = coupled_medium(0.05, 0.01)
        pulse = PulseParams.for_medium(amed, 1.0, 0.5 * T0, 10.0 / T0)
        inp = SNRInputs(amed, pulse)
        agrid = MBGrid.for_window(400, L, inp.peak_time + 0.5 * T0)
        at = agrid.output_times
        alev = [int(np.argmin(np.abs(at - p))) for p in np.linspace(0.2, 1.0, 10) * inp.peak_time]
        aref = np.array([noise_intensity(inp, at[i]) for i in alev])
        ast = ensemble_statistics(run_realizations(agrid, amed, 2025, range(1000), "amplifier", pulse, levels=alev))
        z_amp = float(np.max(np.abs(ast.mean_intensity - aref) / ast.intensity_stderr))
        notes.append(f"amplifier max |z| {z_amp:.2f}")
        # 1/sqrt(M)
        cgrid = MBGrid.for_window(256, L, 6.0 * T0)
        ct = cgrid.output_times
        clev = [int(np.argmin(np.abs(ct - p))) for p in np.linspace(0.6, 6.0, 10) * T0]
        cref = np.array([sf_intensity(ctx, ct[i]) for i in clev])
        study = convergence_study(cgrid, med, 2026, cref, clev, replicates=replicates)
        notes.append(f"slope {study.slope:.3f}")
        ok = z_sf < 3.0 and z_amp < 3.0 and abs(study.slope + 0.5) <= 0.1
        return (max(z_sf, z_amp), ok, "; ".join(notes))

    z, ok, detail, sec = _timed(run)
    ok = ok and sec < 300.0
    return CheckResult(8, "Monte-Carlo consistency", ok, z, "|z| < 3 at 10 times; slope -0.5 +- 0.1; < 5 min", sec, detail)


# ---------------------------------------------------------------------------
# 9-10


def check_noise_attribution() -> CheckResult:
    def run():
        tr = TransitionSpec(omega0=OMEGA0, dipole_d=DIPOLE, beta=0.0)
        med = MediumParams(tr, 1e12, 1.0, SLAB_L, SLAB_S)
        Delta = 50.0 * med.omega_p
        inp = SNRInputs(med, PulseParams.for_medium(med, 1.0, 10.0 / Delta, Delta))
        dip = noise_intensity(inp, med.length_L / inp.v_g)
        vac = vacuum_noise_crosscheck(inp).value
        at_c = noise_intensity(inp, med.length_L / C_LIGHT)
        return (abs(dip / vac - 1.0), f"at t = L/c the ratio is v_g/c = {at_c / vac:.12f}")

    err, detail, sec = _timed(run)
    return CheckResult(9, "noise attribution", err < 1e-8, err, "rel gap < 1e-8 at t = L/v_g", sec, detail)


def bessel_i0_oracle(y: float, dps: int = 50) -> mpmath.mpf:
    """Power series of I0 summed in ``dps``-digit arithmetic."""
    with mpmath.workdps(dps):
        q = mpmath.mpf(y) ** 2 / 4
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        k = 0
        eps = mpmath.mpf(10) ** (-dps)
        while True:
            k += 1
            term *= q / (k * k)
            total += term
            if term < eps * total:
                return +total


def check_bessel(n_points: int = 1000) -> CheckResult:
    def run():
        ys = np.logspace(-3.0, math.log10(700.0), n_points)
        ys[-1] = 700.0
        worst = 0.0
        where = 0.0
        for y in ys:
            ref = bessel_i0_oracle(float(y))
            err = float(abs((mpmath.mpf(bessel_I0(float(y))) - ref) / ref))
            if err > worst:
                worst, where = err, float(y)
        return (worst, f"worst at y = {where:.6g}; I0(0) = {bessel_I0(0.0)}")

    worst, detail, sec = _timed(run)
    return CheckResult(10, "Bessel I0 accuracy", worst < 1e-12, worst, "< 1e-12", sec, detail)


ALL_CHECKS = (
    check_group_velocity,
    check_tail_reconstruction,
    check_luminal_cancellation,
    check_fd_causality,
    check_snr_forms,
    check_snr_verdicts,
    check_sf_intensity,
    check_monte_carlo,
    check_noise_attribution,
    check_bessel,
)


def run_all(quick: bool = False) -> list[CheckResult]:
    out = []
    for fn in ALL_CHECKS:
        if quick and fn is check_monte_carlo:
            out.append(fn(replicates=8))
        else:
            out.append(fn())
    return out
