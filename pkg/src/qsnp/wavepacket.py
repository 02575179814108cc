"""Single-branch wavepackets under the tachyonic dispersion omega_k = c sqrt(k^2 - m^2).

Conventions (normalized units are typical, c = m = 1, but nothing here
assumes them):

* x-grid  x_j = x_min + j dx, j = 0..N-1, periodic with length N dx
* k-grid  k_n = 2 pi fftfreq(N, dx)  (numpy FFT order)
* spectral density  g(k_n) = (dx / 2 pi) e^{-i k_n x_min} FFT[psi]_n
* synthesis         psi_j = dk sum_n g(k_n) e^{i k_n x_j} = (2 pi / dx) IFFT[g e^{i k x_min}]_j

so that psi(x) = int g(k) e^{ikx} dk in the continuum limit and
sum |psi|^2 dx = 2 pi sum |g|^2 dk.
"""

from __future__ import annotations

import enum
import io
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import signal as sp_signal

from ._ddft import dft_bins_dd
from .errors import DomainError, OverflowGuardError, ParameterError

AMPLITUDE_CAP = 1e300
SAFE_SUPPORT_FRACTION = 1e-12


class BranchRule(str, enum.Enum):
    """How omega_k is continued into the unstable band |k| < m."""

    OSCILLATORY = "oscillatory-only"
    GROWING = "growing-branch"
    DECAYING = "decaying-branch"

    @classmethod
    def parse(cls, value) -> "BranchRule":
        if isinstance(value, cls):
            return value
        for member in cls:
            if value in (member.value, member.name, member.name.lower()):
                return member
        raise ParameterError(f"unknown branch rule {value!r}")


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    dx: float
    n_points: int

    def __post_init__(self):
        n = int(self.n_points)
        if n != self.n_points or n < 16 or n & (n - 1):
            raise ParameterError(f"n_points must be a power of two >= 16, got {self.n_points}")
        object.__setattr__(self, "n_points", n)
        dx = float(self.dx)
        if not (dx > 0.0 and math.isfinite(dx)):
            raise ParameterError(f"dx must be positive, got {self.dx}")
        object.__setattr__(self, "dx", dx)
        xm = float(self.x_min)
        if not math.isfinite(xm):
            raise ParameterError("x_min must be finite")
        object.__setattr__(self, "x_min", xm)

    @classmethod
    def centered(cls, length: float, n_points: int) -> "Grid1D":
        """Grid of total length ``length`` with x = 0 on a sample point."""
        dx = length / n_points
        return cls(-(n_points // 2) * dx, dx, n_points)

    @property
    def length(self) -> float:
        return self.n_points * self.dx

    @property
    def x(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_points) * self.dx

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, self.dx)

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / self.length

    def contains(self, x: float) -> bool:
        return self.x_min <= x <= self.x_min + (self.n_points - 1) * self.dx

    def index_of(self, x: float) -> int:
        return int(round((x - self.x_min) / self.dx))


def check_padding(grid: Grid1D, T: float, v_g: float, c: float = 1.0) -> None:
    """The periodic domain must be at least 4 (v_g + c) T long."""
    need = 4.0 * (abs(v_g) + abs(c)) * abs(T)
    if grid.length < need:
        raise ParameterError(
            f"grid length {grid.length:g} too short for T = {T:g}: need at least 4 (v_g + c) T = {need:g}"
        )


def omega_k(k, mass_m: float, c: float = 1.0, branch: BranchRule | str = BranchRule.GROWING) -> np.ndarray:
    """Dispersion omega_k = sgn(k) c sqrt(k^2 - m^2) for |k| > m.

    Inside the band the growing branch gives +i c sqrt(m^2 - k^2) (growth
    under e^{-i omega t}), the decaying branch its conjugate, and the
    oscillatory-only rule returns 0 there (those amplitudes are discarded).
    """
    branch = BranchRule.parse(branch)
    k = np.asarray(k, dtype=float)
    k2 = k * k - mass_m * mass_m
    out = np.where(k2 >= 0.0, np.sign(k) * c * np.sqrt(np.maximum(k2, 0.0)), 0.0).astype(complex)
    inside = k2 < 0.0
    if branch is BranchRule.GROWING:
        out[inside] = 1j * c * np.sqrt(-k2[inside])
    elif branch is BranchRule.DECAYING:
        out[inside] = -1j * c * np.sqrt(-k2[inside])
    return out


def group_velocity_normalized(k0: float, mass_m: float, c: float = 1.0) -> float:
    """d omega / dk = k0 c / sqrt(k0^2 - m^2) on the oscillatory branch."""
    if abs(k0) <= mass_m:
        raise DomainError("group velocity undefined inside the unstable band")
    return abs(k0) * c / math.sqrt(k0 * k0 - mass_m * mass_m)


def _multiplier(k, mass_m, c, branch, t):
    branch = BranchRule.parse(branch)
    w = omega_k(k, mass_m, c, branch)
    expo = -1j * w * t
    if np.max(expo.real, initial=-np.inf) > math.log(AMPLITUDE_CAP):
        raise OverflowGuardError("unstable-mode overflow; reduce t")
    mult = np.exp(expo)
    if branch is BranchRule.OSCILLATORY:
        mult[np.abs(k) < mass_m] = 0.0
    return mult


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class SpectralPacket:
    grid: Grid1D
    g_of_k: np.ndarray
    branch: BranchRule
    mass_m: float
    c: float = 1.0
    # closed-form description of psi(x, 0) when known: ("gaussian", k0, sigma_k, x0, amplitude)
    profile: tuple | None = None

    def __post_init__(self):
        g = np.asarray(self.g_of_k, dtype=complex)
        if g.shape != (self.grid.n_points,):
            raise ParameterError("g_of_k must have one value per k-bin")
        object.__setattr__(self, "g_of_k", g)
        object.__setattr__(self, "branch", BranchRule.parse(self.branch))
        if self.mass_m < 0 or self.c <= 0:
            raise ParameterError("mass_m must be >= 0 and c > 0")

    @property
    def k(self) -> np.ndarray:
        return self.grid.k

    @property
    def band_fraction(self) -> float:
        p = np.abs(self.g_of_k) ** 2
        tot = p.sum()
        return 0.0 if tot == 0 else float(p[np.abs(self.k) < self.mass_m].sum() / tot)

    @property
    def safe_support(self) -> bool:
        return self.band_fraction < SAFE_SUPPORT_FRACTION

    @property
    def norm_squared(self) -> float:
        return float(2.0 * np.pi * np.sum(np.abs(self.g_of_k) ** 2) * self.grid.dk)


@dataclass(frozen=True)
class GridField:
    grid: Grid1D
    samples: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.shape != (self.grid.n_points,):
            raise ParameterError("samples must have length n_points")
        object.__setattr__(self, "samples", s)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def norm(self, mask=None) -> float:
        s = self.samples if mask is None else self.samples[mask]
        return float(math.sqrt(np.sum(np.abs(s) ** 2) * self.grid.dx))

    def with_samples(self, samples, time=None) -> "GridField":
        return GridField(self.grid, samples, self.time if time is None else time)

    # -- serialization ------------------------------------------------------

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("x,re,im,abs2\n")
        s = np.asarray(self.samples, dtype=complex)
        for xv, v in zip(self.x.tolist(), s.tolist()):
            buf.write(f"{xv!r},{v.real!r},{v.imag!r},{(v.real * v.real + v.imag * v.imag)!r}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_bytes(text.encode())
        return text

    @classmethod
    def from_csv(cls, source, time: float = 0.0) -> "GridField":
        text = Path(source).read_text() if not str(source).startswith("x,") else str(source)
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "x,re,im,abs2":
            raise ParameterError("GridField CSV must start with header x,re,im,abs2")
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        n = data.shape[0]
        x = data[:, 0]
        grid = Grid1D(x[0], (x[-1] - x[0]) / (n - 1), n)
        return cls(grid, data[:, 1] + 1j * data[:, 2], time)

    _HEADER = struct.Struct("<Qddd")

    def to_bytes(self) -> bytes:
        g = self.grid
        head = self._HEADER.pack(g.n_points, g.dx, g.x_min, float(self.time))
        return head + np.asarray(self.samples, dtype="<c16").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "GridField":
        n, dx, x_min, t = cls._HEADER.unpack_from(blob, 0)
        data = np.frombuffer(blob, dtype="<c16", offset=cls._HEADER.size, count=n).astype(complex)
        return cls(Grid1D(x_min, dx, n), data, t)


# ---------------------------------------------------------------------------
# transforms


def _phase(grid: Grid1D) -> np.ndarray:
    return np.exp(1j * grid.k * grid.x_min)


def spectrum(field: GridField) -> np.ndarray:
    """Spectral density g(k) of a sampled field (plain double precision)."""
    g = field.grid
    return g.dx / (2.0 * np.pi) * np.conj(_phase(g)) * np.fft.fft(field.samples)


def _spectrum_parts(field: GridField, band_mass: float | None):
    """Spectrum as (hi, lo) with the band |k| < band_mass in double-double."""
    g = field.grid
    raw = np.fft.fft(np.asarray(field.samples, dtype=complex))
    lo = np.zeros_like(raw)
    if band_mass is not None and band_mass > 0:
        bins = np.nonzero(np.abs(g.k) < band_mass)[0]
        if bins.size:
            h, l = dft_bins_dd(field.samples, bins)
            raw[bins] = h
            lo[bins] = l
    scale = g.dx / (2.0 * np.pi) * np.conj(_phase(g))
    return raw * scale, lo * scale


def _synthesize_from(grid: Grid1D, g_hi, mult, g_lo=None) -> np.ndarray:
    spec = g_hi * mult
    if g_lo is not None:
        spec = spec + g_lo * mult
    return (2.0 * np.pi / grid.dx) * np.fft.ifft(spec * _phase(grid))


def make_gaussian_packet(
    grid: Grid1D,
    k0: float,
    sigma_k: float,
    x0: float,
    mass_m: float,
    branch: BranchRule | str = BranchRule.GROWING,
    c: float = 1.0,
) -> SpectralPacket:
    """Gaussian spectral packet g(k) ~ exp(-(k - k0)^2 / 2 sigma_k^2) exp(-i k x0).

    Normalized so that sum |psi(x, 0)|^2 dx = 1 on the grid.  A centre
    inside the unstable band only warns; the packet is still built.
    """
    if not sigma_k > 0:
        raise ParameterError("sigma_k must be > 0")
    if not grid.contains(x0):
        raise ParameterError(f"x0 = {x0} lies outside the grid")
    if abs(k0) < mass_m:
        warnings.warn("packet centred inside the unstable band |k| < m", RuntimeWarning, stacklevel=2)
    k = grid.k
    g = np.exp(-((k - k0) ** 2) / (2.0 * sigma_k * sigma_k)) * np.exp(-1j * k * x0)
    branch = BranchRule.parse(branch)
    if branch is BranchRule.OSCILLATORY:
        g[np.abs(k) < mass_m] = 0.0
    norm2 = 2.0 * np.pi * np.sum(np.abs(g) ** 2) * grid.dk
    if norm2 == 0.0:
        raise ParameterError("packet has no support on the grid")
    scale = 1.0 / math.sqrt(norm2)
    g *= scale
    return SpectralPacket(grid, g, branch, mass_m, c, ("gaussian", k0, sigma_k, x0, scale))


def initial_field(packet: SpectralPacket) -> GridField:
    """psi(x, 0) on the grid.

    For packets with a closed-form profile the samples are evaluated
    directly, which keeps their error relative to the local amplitude.  An
    inverse FFT would instead leave an absolute roundoff floor of order
    eps * max|psi| everywhere, and the unstable modes amplify that floor by
    up to e^{c m t}.  Without a profile this falls back to :func:`synthesize`.
    """
    prof = packet.profile
    if prof is None or prof[0] != "gaussian" or packet.branch is BranchRule.OSCILLATORY:
        return synthesize(packet, 0.0)
    _, k0, sk, x0, amp = prof
    u = packet.grid.x - x0
    vals = amp * sk * math.sqrt(2.0 * math.pi) * np.exp(-0.5 * (sk * u) ** 2 + 1j * k0 * u)
    return GridField(packet.grid, vals, 0.0)


def synthesize(packet: SpectralPacket, t: float) -> GridField:
    """psi(x, t) = sum_k g(k) exp(i(kx - omega_k t)) dk on the grid.

    Negative t is accepted only for the oscillatory-only rule.
    """
    t = float(t)
    if t < 0.0 and packet.branch is not BranchRule.OSCILLATORY:
        raise DomainError("synthesize needs t >= 0 when unstable modes are kept")
    mult = _multiplier(packet.k, packet.mass_m, packet.c, packet.branch, t)
    return GridField(packet.grid, _synthesize_from(packet.grid, packet.g_of_k, mult), t)


def truncate_split(field: GridField, cut_x: float) -> tuple[GridField, GridField]:
    """Split at ``cut_x``: phi0 keeps x >= cut_x (the sample on the cut
    included), r0 keeps the rest.  phi0 + r0 reproduces the field exactly."""
    x = field.grid.x
    keep = x >= cut_x
    zero = np.zeros((), dtype=field.samples.dtype)
    phi = np.where(keep, field.samples, zero)
    res = np.where(keep, zero, field.samples)
    return field.with_samples(phi), field.with_samples(res)


def evolve_truncated(
    field: GridField,
    mass_m: float,
    t: float,
    branch: BranchRule | str = BranchRule.GROWING,
    c: float = 1.0,
    precision: str = "extended",
) -> GridField:
    """Transform a (truncated) field to its spectrum, evolve each mode with
    e^{-i omega_k t} and synthesize again.

    ``precision="extended"`` recomputes the unstable-band bins of the
    forward transform in double-double arithmetic (see :mod:`qsnp._ddft`);
    ``"double"`` uses the plain FFT throughout.
    """
    t = float(t)
    if t < 0.0:
        raise DomainError("evolve_truncated needs t >= 0")
    branch = BranchRule.parse(branch)
    if t == 0.0:
        return field.with_samples(np.array(field.samples, dtype=complex, copy=True), field.time)
    grid = field.grid
    mult = _multiplier(grid.k, mass_m, c, branch, t)
    if precision == "extended" and branch is not BranchRule.OSCILLATORY:
        hi, lo = _spectrum_parts(field, mass_m)
    elif precision in ("extended", "double"):
        hi, lo = _spectrum_parts(field, None)
    else:
        raise ParameterError("precision must be 'extended' or 'double'")
    return GridField(grid, _synthesize_from(grid, hi, mult, lo), field.time + t)


# ---------------------------------------------------------------------------
# Plemelj amplitudes


def _hilbert_kernel(n: int) -> np.ndarray:
    d = np.arange(-(n - 1), n)
    h = np.zeros(d.size)
    odd = (d % 2) != 0
    h[odd] = 2.0 / d[odd]
    return h


def principal_value_sum(values: np.ndarray) -> np.ndarray:
    """PV int f(k') / (k - k') dk' on a uniform grid sorted by k.

    Odd-offset rule: only points an odd number of steps away contribute,
    each with weight 2 dk, so the singular point gets zero weight and the
    rule stays odd-symmetric.  The dk factors cancel against 1/(k - k').
    """
    values = np.asarray(values, dtype=complex)
    n = values.size
    h = _hilbert_kernel(n)
    full = sp_signal.fftconvolve(values, h, mode="full")
    return full[n - 1 : 2 * n - 1]


def plemelj_amplitudes(packet: SpectralPacket) -> tuple[np.ndarray, np.ndarray]:
    """zeta(k) = g/2 - (i / 2 pi) PV int g(k') / (k - k') dk' and xi = g - zeta.

    zeta is the spectrum of the packet truncated to x >= 0, xi that of the
    remainder.  Arrays are returned in the grid's FFT order.
    """
    g = packet.g_of_k
    order = np.argsort(packet.k, kind="stable")
    gs = g[order]
    pv = principal_value_sum(gs)
    zs = 0.5 * gs - 1j / (2.0 * np.pi) * pv
    zeta = np.empty_like(g)
    zeta[order] = zs
    xi = g - zeta
    return zeta, xi


def zeta_from_truncation(packet: SpectralPacket, cut_x: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Second route: synthesize at t = 0, truncate, transform back."""
    psi0 = synthesize(packet, 0.0)
    phi0, r0 = truncate_split(psi0, cut_x)
    return spectrum(phi0), spectrum(r0)


# ---------------------------------------------------------------------------
# luminal / superluminal split


@dataclass(frozen=True)
class SLSplit:
    superluminal: GridField
    luminal: GridField
    norm_S: float
    norm_L: float


def classify_SL(field: GridField, t: float, c: float = 1.0) -> SLSplit:
    """Superluminal part x > c t and luminal part x <= c t, with L2 norms."""
    x = field.grid.x
    s_mask = x > c * t
    zero = np.zeros((), dtype=field.samples.dtype)
    s = field.with_samples(np.where(s_mask, field.samples, zero))
    l = field.with_samples(np.where(s_mask, zero, field.samples))
    return SLSplit(s, l, s.norm(), l.norm())


@dataclass(frozen=True)
class CancellationReport:
    T: float
    norm_phi_L: float
    norm_r_L: float
    norm_psi_L: float
    residual: float  # ||Phi^L + R^L - Psi^L|| / ||Phi^L||
    growth_ratio: float  # ||Phi^L|| / ||Psi^L||
    reconstruction_error: float  # ||Phi^S - Psi^S|| / ||Psi^S||
    residual_leak: float  # ||R^S|| / ||R||
    fields: dict = field(default_factory=dict, repr=False)


def decompose(packet: SpectralPacket, cut_x: float, T: float, precision: str = "extended", oracle: str = "spectral"):
    """Evolve the complete, truncated and residual packets to time T.

    ``oracle="spectral"`` takes the complete packet from :func:`synthesize`
    (the packet's own g(k)); ``oracle="samples"`` evolves the sampled
    initial field with the same operator as the two pieces.
    Returns a dict of GridFields at t = 0 and t = T.
    """
    psi0 = initial_field(packet)
    phi0, r0 = truncate_split(psi0, cut_x)
    phi = evolve_truncated(phi0, packet.mass_m, T, BranchRule.GROWING, packet.c, precision)
    res = evolve_truncated(r0, packet.mass_m, T, BranchRule.GROWING, packet.c, precision)
    if oracle == "spectral":
        psi = synthesize(SpectralPacket(packet.grid, packet.g_of_k, BranchRule.GROWING, packet.mass_m, packet.c), T)
    elif oracle == "samples":
        psi = evolve_truncated(psi0, packet.mass_m, T, BranchRule.GROWING, packet.c, precision)
    else:
        raise ParameterError("oracle must be 'spectral' or 'samples'")
    return {"psi0": psi0, "phi0": phi0, "r0": r0, "psi": psi, "phi": phi, "r": res}


def cancellation_check(
    packet: SpectralPacket,
    cut_x: float,
    T: float,
    precision: str = "extended",
    oracle: str = "samples",
    min_growth: float = 10.0,
) -> CancellationReport:
    """Check that the exponentially growing luminal parts of the truncated and
    residual packets cancel, leaving the (small) luminal part of the complete
    packet.  Raises :class:`DomainError` when T is too small for the growth
    ratio ||Phi^L|| / ||Psi^L|| to reach ``min_growth``; T = 0 is the trivial
    partition and is always accepted.
    """
    c = packet.c
    if not packet.safe_support:
        warnings.warn("cancellation check on a packet without safe support", RuntimeWarning, stacklevel=2)
    f = decompose(packet, cut_x, T, precision, oracle) if T > 0 else None
    if f is None:
        psi0 = initial_field(packet)
        phi0, r0 = truncate_split(psi0, cut_x)
        f = {"psi0": psi0, "phi0": phi0, "r0": r0, "psi": psi0, "phi": phi0, "r": r0}
    sp, sr, ss = (classify_SL(f[k], T, c) for k in ("phi", "r", "psi"))
    lum = sp.luminal.samples + sr.luminal.samples - ss.luminal.samples
    dx = packet.grid.dx
    lum_norm = math.sqrt(np.sum(np.abs(lum) ** 2) * dx)
    residual = 0.0 if sp.norm_L == 0 else lum_norm / sp.norm_L
    growth = math.inf if ss.norm_L == 0 else sp.norm_L / ss.norm_L
    diff = sp.superluminal.samples - ss.superluminal.samples
    recon = math.sqrt(np.sum(np.abs(diff) ** 2) * dx) / ss.norm_S if ss.norm_S > 0 else 0.0
    rn = f["r"].norm()
    leak = 0.0 if rn == 0 else sr.norm_S / rn
    if T > 0 and growth < min_growth:
        raise DomainError("T too small: growth factor below threshold")
    return CancellationReport(T, sp.norm_L, sr.norm_L, ss.norm_L, residual, growth, recon, leak, f)


def growth_rate(packet: SpectralPacket, cut_x: float, times: Sequence[float], precision: str = "extended"):
    """Least-squares slope of log ||Phi^L(t)|| against t (amplitude e-folding rate)."""
    psi0 = initial_field(packet)
    phi0, _ = truncate_split(psi0, cut_x)
    logs = []
    for t in times:
        phi = evolve_truncated(phi0, packet.mass_m, t, BranchRule.GROWING, packet.c, precision)
        logs.append(math.log(classify_SL(phi, t, packet.c).norm_L))
    slope, _ = np.polyfit(np.asarray(times, float), np.asarray(logs), 1)
    return float(slope), np.asarray(logs)


# ---------------------------------------------------------------------------
# finite-difference route


@dataclass(frozen=True)
class FDState:
    grid: Grid1D
    field_now: np.ndarray
    field_prev: np.ndarray
    dt: float
    mass_m: float
    c: float = 1.0
    time: float = 0.0

    def __post_init__(self):
        cfl = self.c * self.dt / self.grid.dx
        if not self.dt > 0:
            raise ParameterError("dt must be > 0")
        if cfl > 1.0 + 1e-12:
            raise ParameterError(f"CFL violation: c dt / dx = {cfl:.6g} > 1")
        for name in ("field_now", "field_prev"):
            a = np.asarray(getattr(self, name))
            if a.shape != (self.grid.n_points,):
                raise ParameterError(f"{name} must have length n_points")
            object.__setattr__(self, name, a)

    @property
    def cfl(self) -> float:
        return self.c * self.dt / self.grid.dx

    def as_field(self) -> GridField:
        return GridField(self.grid, self.field_now, self.time)


def fd_initial_state(packet: SpectralPacket, dt: float) -> FDState:
    """E(0) from the packet and E(-dt) from its single-branch evolution,
    keeping only the oscillatory modes so that the forward branch is selected."""
    osc = SpectralPacket(packet.grid, packet.g_of_k, BranchRule.OSCILLATORY, packet.mass_m, packet.c)
    now = synthesize(osc, 0.0).samples
    prev = synthesize(osc, -dt).samples
    return FDState(packet.grid, now, prev, dt, packet.mass_m, packet.c)


def fd_propagate(state: FDState, n_steps: int) -> FDState:
    """Leapfrog for E_tt = c^2 E_xx + c^2 m^2 E on the periodic grid.

    Each step reads only nearest neighbours, so the numerical domain of
    dependence widens by exactly one cell per step.
    """
    lam2 = state.cfl ** 2
    mass_term = (state.c * state.mass_m * state.dt) ** 2
    now = np.array(state.field_now, copy=True)
    prev = np.array(state.field_prev, copy=True)
    for _ in range(int(n_steps)):
        lap = np.roll(now, 1) - 2.0 * now + np.roll(now, -1)
        nxt = 2.0 * now - prev + lam2 * lap + mass_term * now
        prev, now = now, nxt
    return FDState(state.grid, now, prev, state.dt, state.mass_m, state.c, state.time + n_steps * state.dt)


def fd_discrete_frequency(k: float, mass_m: float, c: float, dx: float, dt: float) -> float:
    """Frequency the leapfrog stencil assigns to a plane wave of wavenumber k."""
    s = (c * dt / dx) ** 2 * math.sin(0.5 * k * dx) ** 2 - (c * mass_m * dt / 2.0) ** 2
    if s < 0 or s > 1:
        raise DomainError("plane wave outside the stencil's oscillatory range")
    return 2.0 / dt * math.asin(math.sqrt(s))


# ---------------------------------------------------------------------------
# arrival measurement


@dataclass(frozen=True)
class ArrivalFit:
    velocity: float
    intercept: float
    residual: float
    positions: np.ndarray
    times: np.ndarray


def _centroid(f: GridField) -> float:
    w = np.abs(f.samples) ** 2
    tot = w.sum()
    if tot == 0 or not np.isfinite(tot):
        raise DomainError("degenerate field: zero intensity")
    return float(np.sum(f.grid.x * w) / tot)


def _front(f: GridField, threshold: float) -> float:
    w = np.abs(f.samples) ** 2
    peak = w.max()
    if peak == 0 or not np.isfinite(peak):
        raise DomainError("degenerate field: zero intensity")
    level = threshold * peak
    idx = np.nonzero(w >= level)[0][-1]
    x = f.grid.x
    if idx + 1 >= w.size:
        return float(x[idx])
    # linear interpolation of the crossing to the right of the last sample above level
    a, b = w[idx], w[idx + 1]
    frac = (a - level) / (a - b) if a != b else 0.0
    return float(x[idx] + frac * f.grid.dx)


def measure_arrival(fields: Sequence[GridField], mode: str = "centroid", threshold: float = 0.5) -> ArrivalFit:
    """Fit position against time.  ``centroid`` uses the intensity-weighted
    mean position; ``threshold`` tracks the leading point where the intensity
    falls through ``threshold`` times its peak."""
    if len(fields) < 3:
        raise ParameterError("measure_arrival needs at least 3 time samples")
    times = np.array([f.time for f in fields], dtype=float)
    if mode == "centroid":
        pos = np.array([_centroid(f) for f in fields])
    elif mode == "threshold":
        pos = np.array([_front(f, threshold) for f in fields])
    else:
        raise ParameterError("mode must be 'centroid' or 'threshold'")
    A = np.vstack([times, np.ones_like(times)]).T
    (v, b), *_ = np.linalg.lstsq(A, pos, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([v, b]) - pos) ** 2)))
    return ArrivalFit(float(v), float(b), resid, pos, times)
