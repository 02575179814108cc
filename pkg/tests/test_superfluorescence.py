import math

import mpmath
import numpy as np
import pytest

from qsnp import DomainError
from qsnp.checks import bessel_i0_oracle
from qsnp.constants import C_LIGHT
from qsnp.medium import MediumParams, TransitionSpec, timescales
from qsnp.superfluorescence import (
    I0_MAX_ARGUMENT,
    I0_SERIES_LIMIT,
    SFContext,
    bessel_I0,
    bessel_I0_derivative,
    sf_delay,
    sf_intensity,
    sf_intensity_asymptotic,
    sf_intensity_short_time,
)

from conftest import DIPOLE, OMEGA0, medium_with_wp


def ctx_for(wp_L_over_c: float, L: float = 1.0) -> SFContext:
    return SFContext(medium_with_wp(wp_L_over_c * C_LIGHT / L, L=L))


# --- Bessel I0 ------------------------------------------------------------------


def test_i0_at_zero():
    assert bessel_I0(0.0) == 1.0


def test_i0_at_one():
    assert bessel_I0(1.0) == pytest.approx(1.2660658777520082, rel=1e-12)
    assert bessel_I0(1.0) == pytest.approx(float(mpmath.besseli(0, 1)), rel=1e-12)


def test_i0_asymptotic_correction_at_twenty():
    ratio = bessel_I0(20.0) * math.sqrt(40 * math.pi) / math.exp(20.0)
    assert ratio == pytest.approx(1 + 1 / 160 + 9 / 51200 + 225 / 24576000, abs=1e-6)
    assert abs(ratio - (1 + 1 / 160)) < 2e-4  # the neglected term is 9/(128 y^2) = 1.8e-4


@pytest.mark.parametrize(
    "y",
    [1e-8, 0.3, 2.0, 7.9, 8.0, 8.1, 15.0, I0_SERIES_LIMIT - 1e-9, I0_SERIES_LIMIT, 25.0, 60.0, 150.0, 400.0, 699.0, 700.0],
)
def test_i0_relative_accuracy(y):
    ref = bessel_i0_oracle(y)
    assert abs(bessel_I0(y) / float(ref) - 1.0) < 1e-12


def test_i0_even_and_vectorised():
    ys = np.array([-3.0, 0.5, 3.0])
    out = bessel_I0(ys)
    assert out.shape == (3,) and out[0] == out[2]


def test_i0_overflow_reported():
    with pytest.raises(DomainError, match="overflow"):
        bessel_I0(700.5)
    assert I0_MAX_ARGUMENT == 700.0


def test_i0_derivative_matches_i1():
    for y in (0.5, 5.0, 30.0, 200.0):
        assert bessel_I0_derivative(y) == pytest.approx(float(mpmath.besseli(1, y)), rel=1e-11)


@pytest.mark.parametrize("y", [3.0, 12.0, 35.0])
def test_i0_ode_residual_is_second_order(y):
    def resid(h):
        f0, fp, fm = bessel_I0(y), bessel_I0(y + h), bessel_I0(y - h)
        d2 = (fp - 2 * f0 + fm) / h**2
        d1 = (fp - fm) / (2 * h)
        return abs(y * d2 + d1 - y * f0) / f0

    r1, r2 = resid(1e-2), resid(5e-3)
    assert r1 < 1e-3
    assert math.log2(r1 / r2) == pytest.approx(2.0, abs=0.1)


# --- intensity ---------------------------------------------------------------------


def test_intensity_zero_at_zero_time():
    assert sf_intensity(ctx_for(2.0), 0.0) == 0.0


def test_negative_time_rejected():
    with pytest.raises(DomainError):
        sf_intensity(ctx_for(2.0), -1.0)


def test_short_time_limit():
    ctx = ctx_for(2.0)
    L_c = ctx.medium.length_L / C_LIGHT
    tiny = 1e-5 * L_c
    assert sf_intensity(ctx, tiny) == pytest.approx(sf_intensity_short_time(ctx, tiny), rel=1e-6)
    ctx_small = ctx_for(0.05)
    t = L_c
    assert ctx_small.omega_p * math.sqrt(t * L_c) < 0.1
    assert sf_intensity(ctx_small, t) == pytest.approx(sf_intensity_short_time(ctx_small, t), rel=0.01)


def test_asymptotic_form_at_hundred_tau_R():
    ctx = SFContext(MediumParams(TransitionSpec(OMEGA0, dipole_d=DIPOLE), 1e10, 1.0, 1.0, 1e-3))
    t = 100 * ctx.tau_R
    ratio = sf_intensity(ctx, t) / sf_intensity_asymptotic(ctx, t)
    assert 0.75 <= ratio <= 1.25


def test_intensity_monotone_after_transit():
    ctx = ctx_for(3.0)
    L_c = ctx.medium.length_L / C_LIGHT
    vals = [sf_intensity(ctx, L_c * s) for s in np.linspace(1.0, 20.0, 40)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_dimensionless_scaling():
    a = ctx_for(3.0, L=1.0)
    b = SFContext(medium_with_wp(3.0 * C_LIGHT / 2.5, L=2.5, S=7e-3))
    for u in (0.5, 3.0, 40.0):
        ia = sf_intensity(a, u * a.tau_R) / (a.prefactor * a.medium.length_L)
        ib = sf_intensity(b, u * b.tau_R) / (b.prefactor * b.medium.length_L)
        assert ia == pytest.approx(ib, rel=1e-8)


def test_prefactor_consistent_with_plasma_identity():
    ctx = ctx_for(2.0)
    m = ctx.medium
    # omega_p^2 = 4 c / (tau_R L) ties tau_R to the same medium
    assert ctx.omega_p**2 == pytest.approx(4 * C_LIGHT / (ctx.tau_R * m.length_L), rel=1e-12)


# --- delay ---------------------------------------------------------------------------


def _sample(N_T: float) -> SFContext:
    S, L = 1e-3, 1.0
    return SFContext(MediumParams(TransitionSpec(OMEGA0, dipole_d=DIPOLE), N_T / (S * L), 1.0, L, S))


def test_delay_closed_form():
    ctx = _sample(1e8)
    d = sf_delay(ctx)
    assert d.closed_form / ctx.tau_R == pytest.approx(25.65, abs=5e-3)


def test_delay_log_shift():
    a, b = _sample(1e8), _sample(math.e * 1e8)
    la = math.log(2 * math.pi * 1e8)
    ratio = (sf_delay(b).closed_form / b.tau_R) / (sf_delay(a).closed_form / a.tau_R)
    assert ratio == pytest.approx(((la + 1) / la) ** 2, rel=1e-12)


@pytest.mark.parametrize("N_T", [1e4, 1e6, 1e8, 1e10, 1e12])
def test_delay_routes_agree(N_T):
    assert 0.5 <= sf_delay(_sample(N_T)).ratio <= 2.0


def test_delay_needs_atoms():
    with pytest.raises(DomainError):
        sf_delay(_sample(0.5))
