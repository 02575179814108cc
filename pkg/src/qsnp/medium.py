"""Static description of the inverted two-level gas and its optical response.

Everything here is a pure function of frozen dataclasses.  Units are
Gaussian CGS throughout: frequencies in rad/s, lengths in cm, dipole moments
in statC cm.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .constants import C_LIGHT, ELECTRON_CHARGE, ELECTRON_MASS, HBAR, SI_TO_CGS
from .errors import DomainError, ParameterError

# ratio used to read "much greater than" in the observability conditions
MUCH_GREATER = 10.0

_EPS = 2.220446049250313e-16


def _finite(name, value, *, positive=False, nonneg=False):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value}")
    if positive and value <= 0.0:
        raise ParameterError(f"{name} must be > 0, got {value}")
    if nonneg and value < 0.0:
        raise ParameterError(f"{name} must be >= 0, got {value}")
    return value


def dipole_from_oscillator_strength(f: float, omega0: float) -> float:
    """Dipole moment d for oscillator strength f, from 4 pi N e^2 f / m = 8 pi N d^2 omega0 / hbar."""
    return math.sqrt(f * ELECTRON_CHARGE**2 * HBAR / (2.0 * ELECTRON_MASS * omega0))


def oscillator_strength_from_dipole(d: float, omega0: float) -> float:
    return 2.0 * ELECTRON_MASS * omega0 * d * d / (HBAR * ELECTRON_CHARGE**2)


@dataclass(frozen=True)
class TransitionSpec:
    """Two-level transition.

    The dipole moment is canonical.  When only ``oscillator_strength_f`` is
    given the dipole is derived from it once; when only the dipole is given
    the oscillator strength is filled in for reference.  If both are given
    they are kept as supplied and no consistency is enforced.

    ``beta`` is the dipole damping rate.  ``None`` means "radiatively
    broadened": the owning :class:`MediumParams` then supplies
    beta = pi d^2 omega0 / (S hbar c), which depends on the cross-section.
    """

    omega0: float
    dipole_d: float | None = None
    oscillator_strength_f: float | None = None
    beta: float | None = None

    def __post_init__(self):
        omega0 = _finite("omega0", self.omega0, positive=True)
        object.__setattr__(self, "omega0", omega0)
        d, f = self.dipole_d, self.oscillator_strength_f
        if d is None and f is None:
            raise ParameterError("transition needs dipole_d or oscillator_strength_f")
        if d is not None:
            d = _finite("dipole_d", d, nonneg=True)
        if f is not None:
            f = _finite("oscillator_strength_f", f, nonneg=True)
        if d is None:
            d = dipole_from_oscillator_strength(f, omega0)
        elif f is None:
            f = oscillator_strength_from_dipole(d, omega0)
        object.__setattr__(self, "dipole_d", d)
        object.__setattr__(self, "oscillator_strength_f", f)
        if self.beta is not None:
            object.__setattr__(self, "beta", _finite("beta", self.beta, nonneg=True))


@dataclass(frozen=True)
class MediumParams:
    """Homogeneous inverted gas filling a slab of length L and cross-section S.

    ``density_N`` may be zero (the empty-medium limit, n = 1).
    """

    transition: TransitionSpec
    density_N: float
    inversion_w: float
    length_L: float
    area_S: float

    def __post_init__(self):
        if not isinstance(self.transition, TransitionSpec):
            raise ParameterError("transition must be a TransitionSpec")
        object.__setattr__(self, "density_N", _finite("density_N", self.density_N, nonneg=True))
        w = _finite("inversion_w", self.inversion_w)
        if not -1.0 <= w <= 1.0:
            raise ParameterError(f"inversion_w must lie in [-1, 1], got {w}")
        object.__setattr__(self, "inversion_w", w)
        object.__setattr__(self, "length_L", _finite("length_L", self.length_L, positive=True))
        object.__setattr__(self, "area_S", _finite("area_S", self.area_S, positive=True))

    @property
    def omega0(self) -> float:
        return self.transition.omega0

    @property
    def dipole_d(self) -> float:
        return self.transition.dipole_d

    @property
    def atom_count_NT(self) -> float:
        return self.density_N * self.area_S * self.length_L

    @property
    def radiative_beta(self) -> float:
        """beta = pi d^2 omega0 / (S hbar c), i.e. 2 beta = 1 / tau_RAD."""
        d = self.dipole_d
        return math.pi * d * d * self.omega0 / (self.area_S * HBAR * C_LIGHT)

    @property
    def beta(self) -> float:
        b = self.transition.beta
        return self.radiative_beta if b is None else b

    @property
    def omega_p_squared(self) -> float:
        """Plasma frequency squared, 8 pi N d^2 omega0 / hbar."""
        d = self.dipole_d
        return 8.0 * math.pi * self.density_N * d * d * self.omega0 / HBAR

    @property
    def omega_p(self) -> float:
        return math.sqrt(self.omega_p_squared)

    def replace(self, **changes) -> "MediumParams":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class PulseParams:
    """Incident Gaussian pulse.  Build with :meth:`for_medium` so that
    ``carrier_omega == omega0 - detuning_Delta`` holds exactly."""

    photon_number_q: float
    duration_tau_p: float
    detuning_Delta: float
    carrier_omega: float

    def __post_init__(self):
        for name in ("photon_number_q", "duration_tau_p", "carrier_omega"):
            object.__setattr__(self, name, _finite(name, getattr(self, name), positive=True))
        object.__setattr__(self, "detuning_Delta", _finite("detuning_Delta", self.detuning_Delta))

    @classmethod
    def for_medium(cls, medium: MediumParams, q: float, tau_p: float, Delta: float) -> "PulseParams":
        Delta = _finite("detuning_Delta", Delta)
        return cls(q, tau_p, Delta, medium.omega0 - Delta)

    def check_against(self, medium: MediumParams) -> None:
        if self.carrier_omega != medium.omega0 - self.detuning_Delta:
            raise ParameterError("pulse carrier_omega must equal omega0 - detuning_Delta")

    @property
    def spectrally_clear(self) -> bool:
        """|Delta| tau_p > 1: the pulse has no significant content at resonance."""
        return abs(self.detuning_Delta) * self.duration_tau_p > 1.0


@dataclass(frozen=True)
class Timescales:
    tau_RAD: float
    tau_R: float
    tau_D: float
    transit_L_over_c: float


# ---------------------------------------------------------------------------
# dispersion


REFRACTIVE_MODES = ("multilevel-sum", "two-level-real", "two-level-complex", "far-detuned")


def refractive_index(medium: MediumParams, omega, mode: str = "two-level-real"):
    """Refractive index n(omega) of the two-level gas.

    Modes
    -----
    ``multilevel-sum``
        oscillator form 1 - (wp^2 w / 2) / (omega0^2 - omega^2)
    ``two-level-real``
        damped near-resonance real part 1 - (wp^2 w / 4 omega0) Delta / (Delta^2 + beta^2)
    ``two-level-complex``
        complex damped form 1 - (wp^2 w / 4 omega0) / (Delta - i beta)
    ``far-detuned``
        1 - wp^2 w / (4 omega0 Delta)

    with Delta = omega0 - omega.
    """
    omega = _finite("omega", omega, positive=True)
    w0 = medium.omega0
    strength = medium.omega_p_squared * medium.inversion_w
    delta = w0 - omega
    if strength == 0.0:
        return 1.0 + 0.0j if mode == "two-level-complex" else 1.0
    if mode == "multilevel-sum":
        den = w0 * w0 - omega * omega
        if den == 0.0:
            raise DomainError("refractive index: resonance singularity at omega = omega0")
        return 1.0 - 0.5 * strength / den
    if mode == "two-level-real":
        beta = medium.beta
        den = delta * delta + beta * beta
        if den == 0.0:
            raise DomainError("refractive index: resonance singularity (beta = 0, omega = omega0)")
        return 1.0 - strength / (4.0 * w0) * delta / den
    if mode == "two-level-complex":
        beta = medium.beta
        z = complex(delta, -beta)
        if z == 0:
            raise DomainError("refractive index: resonance singularity (beta = 0, omega = omega0)")
        return 1.0 - strength / (4.0 * w0) / z
    if mode == "far-detuned":
        if delta == 0.0:
            raise DomainError("refractive index: far-detuned form is singular at Delta = 0")
        if abs(strength) / (4.0 * w0) * MUCH_GREATER > abs(delta):
            warnings.warn(
                "far-detuned refractive index used with wp^2/(4 omega0) not << |Delta|",
                RuntimeWarning,
                stacklevel=2,
            )
        return 1.0 - strength / (4.0 * w0 * delta)
    raise ParameterError(f"unknown refractive index mode {mode!r}; choose from {REFRACTIVE_MODES}")


def dispersion_strength(medium: MediumParams, detuning_Delta: float) -> float:
    """x = wp^2 w / (4 Delta^2), the dimensionless coupling behind v_g."""
    delta = _finite("detuning_Delta", detuning_Delta)
    if delta == 0.0:
        raise DomainError("dispersion strength diverges at Delta = 0")
    return medium.omega_p_squared * medium.inversion_w / (4.0 * delta * delta)


@dataclass(frozen=True)
class GroupVelocity:
    v_g: float
    excess: float  # v_g / c - 1
    strength: float  # x = wp^2 w / 4 Delta^2

    @property
    def superluminal(self) -> bool:
        return 0.0 < self.strength < 1.0


def group_velocity(medium: MediumParams, detuning_Delta: float) -> GroupVelocity:
    """v_g = c / (1 - x) with x = wp^2 w / 4 Delta^2.

    The excess v_g/c - 1 is returned as x / (1 - x), which avoids the
    cancellation in (v_g - c)/c when x is tiny.
    """
    x = dispersion_strength(medium, detuning_Delta)
    one_minus = 1.0 - x
    if abs(one_minus) <= 4.0 * _EPS:
        raise DomainError("group-velocity divergence: wp^2 w = 4 Delta^2")
    return GroupVelocity(C_LIGHT / one_minus, x / one_minus, x)


def collective_dispersion(medium: MediumParams, K: float) -> tuple[complex, complex]:
    """Both roots Omega of Omega^2 - K c Omega + w wp^2 / 4 = 0.

    Roots are sorted by real part, then imaginary part.
    """
    K = _finite("K", K)
    b = -K * C_LIGHT
    cc = 0.25 * medium.inversion_w * medium.omega_p_squared
    disc = b * b - 4.0 * cc
    if disc >= 0.0:
        sq = math.sqrt(disc)
        q = -0.5 * (b + math.copysign(sq, b))
        if q == 0.0:
            roots = [0.0, 0.0]
        else:
            roots = [q, cc / q]
        roots = [complex(r, 0.0) for r in roots]
    else:
        im = 0.5 * math.sqrt(-disc)
        re = -0.5 * b
        roots = [complex(re, -im), complex(re, im)]
    roots.sort(key=lambda z: (z.real, z.imag))
    return roots[0], roots[1]


@dataclass(frozen=True)
class GainResult:
    g: float
    g_from_velocity: float  # 2 beta (1/c - 1/v_g)
    relative_gap: float


def gain_coefficient(medium: MediumParams, detuning_Delta: float) -> GainResult:
    """Gain coefficient g = (4 pi N d^2 omega0 / hbar c) w beta / (Delta^2 + beta^2).

    Also returns 2 beta (1/c - 1/v_g).  The two agree up to the factor
    Delta^2 / (Delta^2 + beta^2), so they coincide only for |Delta| >> beta.
    """
    delta = _finite("detuning_Delta", detuning_Delta)
    beta = medium.beta
    strength = medium.omega_p_squared * medium.inversion_w
    den = delta * delta + beta * beta
    g = 0.0 if strength == 0.0 else strength / (2.0 * C_LIGHT) * beta / den
    if delta == 0.0:
        g_v = math.inf if strength * beta != 0.0 else 0.0
    else:
        # 1/c - 1/v_g = x / c exactly
        g_v = 2.0 * beta * dispersion_strength(medium, delta) / C_LIGHT
    if g == g_v:
        gap = 0.0
    elif math.isinf(g_v):
        gap = math.inf
    else:
        gap = abs(g - g_v) / max(abs(g), abs(g_v))
    return GainResult(g, g_v, gap)


def _radiative_times(medium: MediumParams) -> tuple[float, float]:
    d = medium.dipole_d
    if d == 0.0:
        raise DomainError("timescales: zero dipole moment gives infinite radiative lifetime")
    nt = medium.atom_count_NT
    if nt <= 0.0:
        raise DomainError("timescales: empty medium has no collective timescale")
    tau_rad = medium.area_S * HBAR * C_LIGHT / (2.0 * math.pi * d * d * medium.omega0)
    return tau_rad, tau_rad / nt


def timescales(medium: MediumParams) -> Timescales:
    """tau_RAD = S hbar c / (2 pi d^2 omega0), tau_R = tau_RAD / N_T,
    tau_D = tau_R [ln(2 pi N_T) / 4]^2."""
    tau_rad, tau_r = _radiative_times(medium)
    nt = medium.atom_count_NT
    log_arg = 2.0 * math.pi * nt
    if log_arg <= 1.0:
        raise DomainError("timescales: tau_D undefined for N_T <= 1/(2 pi)")
    tau_d = tau_r * (0.25 * math.log(log_arg)) ** 2
    return Timescales(tau_rad, tau_r, tau_d, medium.length_L / C_LIGHT)


def omega_p_squared_from_tau_R(medium: MediumParams) -> float:
    """Second route to the plasma frequency: (4 / tau_R)(c / L).

    Defined for any N_T > 0, including samples too small for tau_D."""
    _, tau_r = _radiative_times(medium)
    return 4.0 / tau_r * C_LIGHT / medium.length_L


# ---------------------------------------------------------------------------
# regime report


@dataclass(frozen=True)
class Flag:
    name: str
    ok: bool
    margin: float
    detail: str = ""


@dataclass(frozen=True)
class RegimeReport:
    flags: tuple[Flag, ...]
    threshold: float = MUCH_GREATER

    def __getitem__(self, name: str) -> Flag:
        for f in self.flags:
            if f.name == name:
                return f
        raise KeyError(name)

    def as_dict(self) -> dict[str, dict[str, Any]]:
        return {f.name: {"ok": f.ok, "margin": f.margin, "detail": f.detail} for f in self.flags}


def _ratio(a, b):
    if b == 0.0:
        return math.inf if a > 0 else 0.0
    return a / b


def regime_report(
    medium: MediumParams, pulse: PulseParams, observation_T: float, threshold: float = MUCH_GREATER
) -> RegimeReport:
    """Observability and validity flags, each with its numeric margin.

    Every "much greater than" is read as ratio >= ``threshold``; plain
    inequalities are strict.  Margins are the ratios themselves.
    """
    T = _finite("observation_T", observation_T, nonneg=True)
    pulse.check_against(medium)
    tau_p = pulse.duration_tau_p
    x = dispersion_strength(medium, pulse.detuning_Delta)
    one_minus = 1.0 - x
    flags = []

    adv_lab = _ratio(T / one_minus, tau_p) if one_minus != 0 else math.inf
    flags.append(Flag("lab-advance", adv_lab >= threshold, adv_lab, "v_g T / c vs tau_p"))
    adv_excess = _ratio(x * T / one_minus, tau_p) if one_minus != 0 else math.inf
    flags.append(Flag("excess-advance", adv_excess >= threshold, adv_excess, "(v_g/c - 1) T vs tau_p"))

    try:
        ts = timescales(medium)
    except DomainError:
        ts = None
    if ts is not None:
        r1 = _ratio(ts.tau_RAD, T)
        r2 = _ratio(T, tau_p)
        flags.append(
            Flag("hierarchy", r1 >= threshold and r2 >= threshold, min(r1, r2), "tau_RAD >> T >> tau_p")
        )
        m1 = _ratio(ts.tau_R, tau_p)
        m2 = _ratio(ts.tau_R, ts.transit_L_over_c)
        m3 = _ratio(ts.tau_D, ts.tau_R)
        flags.append(Flag("SF-safety", m1 > 1 and m2 > 1 and m3 > 1, min(m1, m2, m3), "tau_p, L/c < tau_R < tau_D"))
        short = _ratio(ts.tau_R, tau_p)
        flags.append(Flag("short-pulse", short >= 1.0, short, "tau_p <= tau_R"))
    else:
        flags.append(Flag("hierarchy", False, 0.0, "timescales undefined"))
        flags.append(Flag("SF-safety", False, 0.0, "timescales undefined"))
        flags.append(Flag("short-pulse", False, 0.0, "timescales undefined"))

    dtp = abs(pulse.detuning_Delta) * tau_p
    flags.append(Flag("detuning-clear", dtp > 1.0, dtp, "|Delta| tau_p > 1"))
    g = gain_coefficient(medium, pulse.detuning_Delta).g
    gl = g * medium.length_L
    flags.append(Flag("small-gain", gl * threshold <= 1.0, _ratio(1.0, gl), "g L << 1"))
    return RegimeReport(tuple(flags), threshold)


def advance_chain_normalized(mass_m: float, T: float, k0: float, delta_k: float, threshold: float = MUCH_GREATER):
    """The chain m^2 T >> k0^2 / dk >> k0 in normalized units (c = 1).

    The chain mixes dimensions unless c = 1, so it is only offered in the
    normalized convention of the wavepacket module.
    """
    a = mass_m * mass_m * T
    b = k0 * k0 / delta_k
    r1, r2 = _ratio(a, b), _ratio(b, abs(k0))
    return (
        Flag("m^2 T >> k0^2/dk", r1 >= threshold, r1, "normalized units, c = 1"),
        Flag("k0^2/dk >> k0", r2 >= threshold, r2, "normalized units, c = 1"),
    )


# ---------------------------------------------------------------------------
# JSON loading

_TRANSITION_KEYS = {"omega0", "dipole_d", "oscillator_strength_f", "beta"}
_MEDIUM_KEYS = {"density_N", "inversion_w", "length_L", "area_S"}
_PULSE_KEYS = {"photon_number_q", "duration_tau_p", "detuning_Delta"}
_TOP_KEYS = {"units", "transition", "medium", "pulse", "observation_T"}


@dataclass(frozen=True)
class ParameterSet:
    medium: MediumParams
    pulse: PulseParams | None = None
    observation_T: float | None = None
    extra: Mapping[str, Any] = field(default_factory=dict)


def _check_keys(section: str, doc: Mapping, allowed: set):
    if not isinstance(doc, Mapping):
        raise ParameterError(f"{section} must be a JSON object")
    unknown = set(doc) - allowed
    if unknown:
        raise ParameterError(f"unknown keys in {section}: {sorted(unknown)}")


def parameters_from_dict(doc: Mapping[str, Any]) -> ParameterSet:
    """Build parameters from a decoded JSON document.

    ``units`` is required and must be ``"cgs"`` or ``"si"``.  SI inputs are
    converted to CGS here: lengths m -> cm, areas m^2 -> cm^2, densities
    m^-3 -> cm^-3, dipoles C m -> statC cm.  Rates and times are unchanged.
    """
    _check_keys("document", doc, _TOP_KEYS)
    units = doc.get("units")
    if units not in ("cgs", "si"):
        raise ParameterError("'units' must be 'cgs' or 'si'")
    if "transition" not in doc or "medium" not in doc:
        raise ParameterError("document needs 'transition' and 'medium' sections")
    tr = dict(doc["transition"])
    _check_keys("transition", tr, _TRANSITION_KEYS)
    md = dict(doc["medium"])
    _check_keys("medium", md, _MEDIUM_KEYS)
    missing = _MEDIUM_KEYS - set(md)
    if missing:
        raise ParameterError(f"medium section missing {sorted(missing)}")
    if "omega0" not in tr:
        raise ParameterError("transition section missing 'omega0'")
    if units == "si":
        if tr.get("dipole_d") is not None:
            tr["dipole_d"] = _finite("dipole_d", tr["dipole_d"]) * SI_TO_CGS["dipole"]
        md["density_N"] = _finite("density_N", md["density_N"]) * SI_TO_CGS["density"]
        md["length_L"] = _finite("length_L", md["length_L"]) * SI_TO_CGS["length"]
        md["area_S"] = _finite("area_S", md["area_S"]) * SI_TO_CGS["area"]
    medium = MediumParams(TransitionSpec(**tr), **md)
    pulse = None
    if "pulse" in doc:
        pd = doc["pulse"]
        _check_keys("pulse", pd, _PULSE_KEYS)
        missing = _PULSE_KEYS - set(pd)
        if missing:
            raise ParameterError(f"pulse section missing {sorted(missing)}")
        pulse = PulseParams.for_medium(medium, pd["photon_number_q"], pd["duration_tau_p"], pd["detuning_Delta"])
    T = doc.get("observation_T")
    if T is not None:
        T = _finite("observation_T", T, positive=True)
    return ParameterSet(medium, pulse, T)


def load_parameters(source: str | Path | Mapping[str, Any]) -> ParameterSet:
    """Load a :class:`ParameterSet` from a JSON file path, JSON text or dict."""
    if isinstance(source, Mapping):
        return parameters_from_dict(source)
    text = str(source)
    p = Path(text)
    try:
        if not text.lstrip().startswith("{") and p.exists():
            text = p.read_text()
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"malformed JSON: {exc}") from None
    except OSError as exc:
        raise ParameterError(f"cannot read parameters: {exc}") from None
    return parameters_from_dict(doc)
