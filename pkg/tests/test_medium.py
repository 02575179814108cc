import json
import math
import warnings

import mpmath
import pytest

from qsnp import DomainError, ParameterError
from qsnp.constants import C_LIGHT, HBAR, SI_TO_CGS
from qsnp.medium import (
    MediumParams,
    PulseParams,
    TransitionSpec,
    advance_chain_normalized,
    collective_dispersion,
    dipole_from_oscillator_strength,
    gain_coefficient,
    group_velocity,
    load_parameters,
    omega_p_squared_from_tau_R,
    refractive_index,
    regime_report,
    timescales,
)

from conftest import DIPOLE, OMEGA0, medium_with_wp

WP = 1.2e11


# --- refractive index ------------------------------------------------------


@pytest.mark.parametrize("mode", ["multilevel-sum", "two-level-real", "two-level-complex", "far-detuned"])
@pytest.mark.parametrize("omega", [1e14, OMEGA0 * 0.999, OMEGA0 * 1.5])
def test_empty_medium_has_unit_index(mode, omega):
    m = MediumParams(TransitionSpec(OMEGA0, dipole_d=DIPOLE), 0.0, 1.0, 1.0, 1.0)
    assert refractive_index(m, omega, mode) == 1.0


@pytest.mark.parametrize("mode", ["multilevel-sum", "two-level-real", "far-detuned"])
def test_inversion_sign_flips_index_excess(mode):
    up = medium_with_wp(WP, w=1.0, beta=1e9)
    down = up.replace(inversion_w=-1.0)
    omega = OMEGA0 - 5e10
    a = refractive_index(up, omega, mode) - 1.0
    b = refractive_index(down, omega, mode) - 1.0
    # n is stored as 1 + (n - 1), so the excess carries one rounding of 1
    assert a == pytest.approx(-b, rel=4e-16 / abs(a))


def test_far_detuned_index_value():
    m = medium_with_wp(WP)
    delta = m.omega_p_squared / (4 * OMEGA0 * 1e-3)
    n = refractive_index(m, OMEGA0 - delta, "far-detuned")
    assert n == pytest.approx(0.999, rel=1e-14)


def test_far_detuned_warns_when_not_far():
    m = medium_with_wp(WP)
    delta = m.omega_p_squared / (4 * OMEGA0)  # ratio 1
    with pytest.warns(RuntimeWarning):
        refractive_index(m, OMEGA0 - delta, "far-detuned")


def test_resonance_singularity_is_domain_error():
    m = medium_with_wp(WP, beta=0.0)
    with pytest.raises(DomainError):
        refractive_index(m, OMEGA0, "two-level-real")


def test_complex_mode_real_part_matches_damped_real_mode():
    m = medium_with_wp(WP, beta=3e9)
    for omega in (OMEGA0 - 1e10, OMEGA0 + 2e9, OMEGA0):
        nc = refractive_index(m, omega, "two-level-complex")
        nr = refractive_index(m, omega, "two-level-real")
        assert nc.real == pytest.approx(nr, rel=1e-15)


def test_unknown_mode_rejected():
    with pytest.raises(ParameterError):
        refractive_index(medium_with_wp(WP), 1e15, "lorentz")


def test_nonpositive_frequency_rejected():
    with pytest.raises(ParameterError):
        refractive_index(medium_with_wp(WP), 0.0)


# --- group velocity --------------------------------------------------------


def test_vacuum_group_velocity_is_c():
    m = MediumParams(TransitionSpec(OMEGA0, dipole_d=DIPOLE), 0.0, 1.0, 1.0, 1.0)
    gv = group_velocity(m, 1e10)
    assert gv.v_g == C_LIGHT and gv.excess == 0.0 and not gv.superluminal


def test_half_strength_doubles_group_velocity():
    m = medium_with_wp(WP)
    delta = m.omega_p / math.sqrt(2.0)
    gv = group_velocity(m, delta)
    assert gv.v_g == pytest.approx(2 * C_LIGHT, rel=1e-13)
    assert gv.superluminal


def test_absorber_is_subluminal():
    m = medium_with_wp(WP, w=-1.0)
    gv = group_velocity(m, m.omega_p / math.sqrt(2.0))
    assert gv.v_g == pytest.approx(2 * C_LIGHT / 3, rel=1e-13)
    assert not gv.superluminal


def test_group_velocity_pole():
    m = medium_with_wp(WP)
    with pytest.raises(DomainError, match="group-velocity divergence"):
        group_velocity(m, m.omega_p / 2.0)


def test_excess_matches_high_precision_oracle():
    m = medium_with_wp(WP)
    for x in (1e-6, 1e-4, 1e-2, 0.3, 0.9):
        delta = math.sqrt(m.omega_p_squared / (4 * x))
        gv = group_velocity(m, delta)
        xs = mpmath.mpf(m.omega_p_squared) / (4 * mpmath.mpf(delta) ** 2)
        exact = xs / (1 - xs)
        assert abs(gv.excess - float(exact)) <= 1e-12 * float(exact)
        if x >= 1e-3:  # the naive difference is only this accurate above ~1e-3
            naive = (gv.v_g - C_LIGHT) / C_LIGHT
            assert gv.excess == pytest.approx(naive, rel=1e-12)


# --- collective roots------------------------------------------------------------


def test_collective_uninverted_roots():
    m = medium_with_wp(WP, w=0.0)
    K = 7.0
    assert collective_dispersion(m, K) == (0j, complex(K * C_LIGHT))


def test_collective_zero_wavenumber_roots():
    m = medium_with_wp(WP)
    lo, hi = collective_dispersion(m, 0.0)
    assert lo == pytest.approx(-0.5j * m.omega_p, rel=1e-14)
    assert hi == pytest.approx(0.5j * m.omega_p, rel=1e-14)


def test_collective_slope_matches_group_velocity():
    m = medium_with_wp(WP)
    K = 10 * m.omega_p / C_LIGHT
    h = 1e-6 * K
    _, om = collective_dispersion(m, K)
    slope = (collective_dispersion(m, K + h)[1].real - collective_dispersion(m, K - h)[1].real) / (2 * h)
    assert om.imag == 0.0
    assert slope == pytest.approx(group_velocity(m, om.real).v_g, rel=1e-6)


@pytest.mark.parametrize("K", [-30.0, -1.0, 0.0, 0.5, 3.0, 100.0])
def test_collective_residual(K):
    m = medium_with_wp(WP)
    kc = K * C_LIGHT
    for om in collective_dispersion(m, K):
        res = abs(om * om - kc * om + 0.25 * m.omega_p_squared)
        assert res < 1e-10 * (kc * kc + m.omega_p_squared)


# --- gain ----------------------------------------------------------------------


def test_gain_vanishes_far_from_resonance():
    m = medium_with_wp(WP, beta=1e9)
    assert gain_coefficient(m, 1e30).g < 1e-30 * gain_coefficient(m, 0.0).g


def test_gain_on_resonance():
    m = medium_with_wp(WP)  # radiative damping
    ts = timescales(m)
    N_S = m.density_N * m.area_S
    g0 = gain_coefficient(m, 0.0).g
    assert g0 == pytest.approx(2 * N_S / (ts.tau_RAD * m.beta), rel=1e-12)
    assert g0 == pytest.approx(4 * N_S, rel=1e-12)  # 2 beta = 1 / tau_RAD


def test_gain_velocity_identity_with_lineshape_factor():
    m = medium_with_wp(WP, beta=2e9)
    beta = m.beta
    for k in range(-3, 12):
        delta = beta * 10.0**k
        r = gain_coefficient(m, delta)
        assert r.g * (delta**2 + beta**2) / delta**2 == pytest.approx(r.g_from_velocity, rel=1e-12)
        if delta >= 1e5 * beta:
            assert r.relative_gap < 1e-10


# --- timescales -------------------------------------------------------------------


def _medium_for_tau(tau_R: float, N_T: float) -> MediumParams:
    tau_rad = tau_R * N_T
    S = tau_rad * 2 * math.pi * DIPOLE**2 * OMEGA0 / (HBAR * C_LIGHT)
    L = 1.0
    return MediumParams(TransitionSpec(OMEGA0, dipole_d=DIPOLE), N_T / (S * L), 1.0, L, S)


def test_delay_time_value():
    ts = timescales(_medium_for_tau(1.0, 1e8))
    assert ts.tau_R == pytest.approx(1.0, rel=1e-12)
    assert ts.tau_D == pytest.approx((math.log(2 * math.pi * 1e8) / 4) ** 2, rel=1e-12)
    assert round(ts.tau_D, 2) == 25.65


def test_tau_rad_linear_in_area():
    m = medium_with_wp(WP)
    m2 = m.replace(area_S=2 * m.area_S)
    assert timescales(m2).tau_RAD == pytest.approx(2 * timescales(m).tau_RAD, rel=1e-15)


def test_plasma_frequency_identity():
    for wp in (1e8, WP, 1e13):
        m = medium_with_wp(wp, L=0.37, S=2e-4)
        assert omega_p_squared_from_tau_R(m) == pytest.approx(m.omega_p_squared, rel=1e-12)


def test_delay_undefined_for_tiny_sample():
    m = _medium_for_tau(1.0, 0.1)
    with pytest.raises(DomainError):
        timescales(m)


# --- regime flags ---------------------------------------------------------------------


def _pulse(m, tau_p, delta=1e12):
    return PulseParams.for_medium(m, 1.0, tau_p, delta)


def test_excess_advance_flag_false_without_medium():
    m = MediumParams(TransitionSpec(OMEGA0, dipole_d=DIPOLE), 0.0, 1.0, 1.0, 1e-3)
    for T in (1e-9, 1.0, 1e9):
        assert not regime_report(m, _pulse(m, 1e-12), T)["excess-advance"].ok


def test_short_pulse_flag_at_half_tau_R():
    m = _medium_for_tau(1e-9, 1e8)
    rep = regime_report(m, _pulse(m, 0.5e-9), 1e-6)
    assert rep["short-pulse"].ok and rep["short-pulse"].margin == pytest.approx(2.0)


def test_hierarchy_false_at_tau_rad():
    m = _medium_for_tau(1e-9, 1e8)
    T = timescales(m).tau_RAD
    rep = regime_report(m, _pulse(m, 1e-12), T)
    assert not rep["hierarchy"].ok
    assert rep["hierarchy"].margin == pytest.approx(1.0)


def test_report_lists_all_flags():
    m = _medium_for_tau(1e-9, 1e8)
    names = set(regime_report(m, _pulse(m, 1e-12), 1e-8).as_dict())
    assert names == {"lab-advance", "excess-advance", "hierarchy", "SF-safety", "short-pulse", "detuning-clear", "small-gain"}


def test_pulse_carrier_consistency():
    m = medium_with_wp(WP)
    p = PulseParams.for_medium(m, 1.0, 1e-12, 3e11)
    assert p.carrier_omega == OMEGA0 - 3e11
    bad = PulseParams(1.0, 1e-12, 3e11, OMEGA0)
    with pytest.raises(ParameterError):
        bad.check_against(m)


def test_spectral_clearance_flag():
    m = medium_with_wp(WP)
    assert PulseParams.for_medium(m, 1.0, 1e-9, 1e10).spectrally_clear
    assert not PulseParams.for_medium(m, 1.0, 1e-12, 1e10).spectrally_clear


def test_normalized_chain():
    f1, f2 = advance_chain_normalized(1.0, 1e4, 5.0, 0.5)
    assert f1.ok and f2.ok
    assert f1.margin == pytest.approx(1e4 / 50)
    assert f2.margin == pytest.approx(10.0)


# --- parameters -------------------------------------------------------------------------


def test_oscillator_strength_round_trip():
    d = dipole_from_oscillator_strength(0.5, OMEGA0)
    tr = TransitionSpec(OMEGA0, oscillator_strength_f=0.5)
    assert tr.dipole_d == d
    assert TransitionSpec(OMEGA0, dipole_d=d).oscillator_strength_f == pytest.approx(0.5, rel=1e-14)


def test_oscillator_form_matches_dipole_form_of_plasma_frequency():
    from qsnp.constants import ELECTRON_CHARGE, ELECTRON_MASS

    tr = TransitionSpec(OMEGA0, oscillator_strength_f=0.3)
    m = MediumParams(tr, 1e12, 1.0, 1.0, 1.0)
    assert m.omega_p_squared == pytest.approx(4 * math.pi * 1e12 * ELECTRON_CHARGE**2 * 0.3 / ELECTRON_MASS, rel=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [dict(inversion_w=1.5), dict(density_N=-1.0), dict(length_L=0.0), dict(area_S=math.nan)],
)
def test_medium_validation(kwargs):
    base = dict(transition=TransitionSpec(OMEGA0, dipole_d=DIPOLE), density_N=1.0, inversion_w=1.0, length_L=1.0, area_S=1.0)
    base.update(kwargs)
    with pytest.raises(ParameterError):
        MediumParams(**base)


def _doc(units="cgs"):
    return {
        "units": units,
        "transition": {"omega0": OMEGA0, "dipole_d": DIPOLE},
        "medium": {"density_N": 1e12, "inversion_w": 1.0, "length_L": 2.0, "area_S": 1e-3},
        "pulse": {"photon_number_q": 1.0, "duration_tau_p": 1e-12, "detuning_Delta": 1e12},
        "observation_T": 1e-9,
    }


def test_load_cgs_document(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps(_doc()))
    ps = load_parameters(p)
    assert ps.medium.length_L == 2.0 and ps.pulse.detuning_Delta == 1e12 and ps.observation_T == 1e-9


def test_si_document_is_converted():
    si = _doc("si")
    si["transition"]["dipole_d"] = DIPOLE / SI_TO_CGS["dipole"]
    si["medium"].update(density_N=1e18, length_L=0.02, area_S=1e-7)
    m = load_parameters(si).medium
    ref = load_parameters(_doc()).medium
    assert m.dipole_d == pytest.approx(ref.dipole_d, rel=1e-15)
    assert m.density_N == pytest.approx(1e12) and m.length_L == pytest.approx(2.0) and m.area_S == pytest.approx(1e-3)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("units"),
        lambda d: d.__setitem__("units", "furlongs"),
        lambda d: d["medium"].__setitem__("colour", 1),
        lambda d: d.__setitem__("extra", 1),
        lambda d: d["medium"].pop("area_S"),
        lambda d: d["pulse"].pop("duration_tau_p"),
    ],
)
def test_invalid_documents(mutate):
    d = _doc()
    mutate(d)
    with pytest.raises(ParameterError):
        load_parameters(d)


def test_malformed_json_text():
    with pytest.raises(ParameterError, match="malformed"):
        load_parameters('{"units": "cgs",')
