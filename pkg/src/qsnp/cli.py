"""Command-line front end: ``qsnp <subcommand> ...``.

Every subcommand computes all of its results in memory first and writes
files only once nothing can fail any more, so an error never leaves
partial outputs behind.  Exit codes: 0 success, 1 selftest failure,
2 configuration error, 3 numerical-domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .constants import C_LIGHT
from .errors import DomainError, ParameterError

NORMALIZED_PACKET_KEYS = {"k0", "sigma_k", "x0", "mass_m", "c", "n_points", "dx", "length", "times", "T", "cut_x", "branch"}

DEFAULT_AMPLIFIER_DOC = {
    "units": "cgs",
    "transition": {"omega0": 3e15, "dipole_d": 2.5e-18},
    "medium": {"density_N": 1e12, "inversion_w": 1.0, "length_L": 1.0, "area_S": 1e-3},
}
DEFAULT_SF_DOC = {
    "units": "cgs",
    "transition": {"omega0": 3e15, "dipole_d": 2.5e-18},
    "medium": {"density_N": 1e10, "inversion_w": 1.0, "length_L": 1.0, "area_S": 1e-3},
}


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def csv_bytes(header: Sequence[str], rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue().encode("utf-8")


class Outputs:
    """Collects artifacts and writes them only on :meth:`commit`."""

    def __init__(self):
        self.items: dict[Path, bytes] = {}

    def add(self, path: str | None, data: bytes | str) -> None:
        if path is None:
            return
        if isinstance(data, str):
            data = data.encode("utf-8")
        self.items[Path(path)] = data

    @staticmethod
    def check_writable(*paths: str | None) -> None:
        for p in paths:
            if p is None:
                continue
            parent = Path(p).resolve().parent
            if not parent.is_dir():
                raise ParameterError(f"output directory does not exist: {parent}")

    def commit(self) -> None:
        staged = []
        try:
            for path, data in self.items.items():
                fd, tmp = tempfile.mkstemp(dir=path.resolve().parent, prefix=".qsnp-")
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                staged.append((tmp, path))
            for tmp, path in staged:
                os.replace(tmp, path)
        except BaseException:
            for tmp, _ in staged:
                if os.path.exists(tmp):
                    os.unlink(tmp)
            raise


def _read_json(path: str | None) -> dict | None:
    if path is None:
        return None
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read config: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ParameterError("config must be a JSON object")
    return doc


def _medium_params(path: str | None, default: Mapping[str, Any]):
    from .medium import parameters_from_dict

    doc = _read_json(path)
    if doc is not None and doc.get("units") == "normalized":
        raise ParameterError("this subcommand needs a physical (cgs or si) parameter document")
    return parameters_from_dict(doc if doc is not None else default)


def _packet_settings(args, defaults: Mapping[str, Any]) -> dict:
    doc = _read_json(args.config) or {}
    if doc:
        if doc.get("units") != "normalized":
            raise ParameterError("wave-packet subcommands take a document with units 'normalized'")
        unknown = set(doc) - {"units", "packet"}
        if unknown:
            raise ParameterError(f"unknown keys in document: {sorted(unknown)}")
        pk = doc.get("packet", {})
        if not isinstance(pk, dict):
            raise ParameterError("packet must be a JSON object")
        unknown = set(pk) - NORMALIZED_PACKET_KEYS
        if unknown:
            raise ParameterError(f"unknown keys in packet: {sorted(unknown)}")
    else:
        pk = {}
    out = dict(defaults)
    out.update(pk)
    for key in defaults:
        v = getattr(args, key, None)
        if v is not None:
            out[key] = v
    return out


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _sweep(text: str):
    try:
        name, lo, hi, n = text.split(":")
        return name, float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError("sweep must look like param:lo:hi:n") from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_dispersion(args, out: Outputs) -> int:
    from .medium import gain_coefficient, group_velocity, refractive_index
    from .svg import PlotStyle, emit_svg

    ps = _medium_params(args.config, DEFAULT_AMPLIFIER_DOC)
    med = ps.medium
    wp = med.omega_p
    if args.points < 2:
        raise ParameterError("--points must be >= 2")
    rows = []
    for r in np.linspace(args.delta_min, args.delta_max, args.points):
        delta = float(r) * wp
        gv = group_velocity(med, delta)
        n_real = refractive_index(med, med.omega0 - delta, "two-level-real")
        n_far = refractive_index(med, med.omega0 - delta, "far-detuned") if delta != 0 else math.nan
        rows.append((delta, float(r), n_real, n_far, gv.v_g / C_LIGHT, gv.excess, gain_coefficient(med, delta).g))
    header = ("delta", "delta_over_omega_p", "n_two_level", "n_far_detuned", "v_g_over_c", "excess", "gain_g")
    out.add(args.out, csv_bytes(header, rows))
    if args.svg:
        x = [r[1] for r in rows]
        out.add(
            args.svg,
            emit_svg({"v_g / c": (x, [r[4] for r in rows])}, PlotStyle("group velocity", "Delta / omega_p", "v_g / c")),
        )
    print(f"omega_p = {wp:.6g} rad/s; {len(rows)} detunings")
    return 0


def cmd_propagate(args, out: Outputs) -> int:
    from .wavepacket import Grid1D, group_velocity_normalized, make_gaussian_packet, measure_arrival, synthesize
    from .svg import PlotStyle, emit_svg

    s = _packet_settings(
        args,
        {"k0": 5.0, "sigma_k": 0.5, "x0": -100.0, "mass_m": 1.0, "c": 1.0, "n_points": 2**14, "dx": 0.05,
         "times": [0.0, 10.0, 20.0, 30.0], "branch": "growing-branch"},
    )
    n = int(s["n_points"])
    grid = Grid1D(float(s["x0"]) - 0.25 * n * float(s["dx"]), float(s["dx"]), n)
    pk = make_gaussian_packet(grid, s["k0"], s["sigma_k"], s["x0"], s["mass_m"], s["branch"], s["c"])
    fields = [synthesize(pk, t) for t in s["times"]]
    fit = measure_arrival(fields)
    expect = group_velocity_normalized(s["k0"], s["mass_m"], s["c"])
    rows = [(f.time, p) for f, p in zip(fields, fit.positions)]
    out.add(args.out, csv_bytes(("t", "centroid"), rows))
    if args.field_out:
        out.add(args.field_out, fields[-1].to_csv())
    if args.svg:
        series = {f"t = {f.time:g}": (grid.x, np.abs(f.samples) ** 2) for f in fields}
        out.add(args.svg, emit_svg(series, PlotStyle("packet intensity", "x", "|psi|^2")))
    print(f"centroid velocity {fit.velocity:.8f}; k0 c / sqrt(k0^2 - m^2) = {expect:.8f}; rel err {abs(fit.velocity / expect - 1):.3e}")
    return 0


def _load_field(path: str):
    from .wavepacket import GridField

    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise ParameterError(f"cannot read field: {exc}") from None
    if p.suffix == ".csv":
        return GridField.from_csv(data.decode("utf-8"))
    return GridField.from_bytes(data)


def cmd_decompose(args, out: Outputs) -> int:
    from .wavepacket import (
        BranchRule,
        Grid1D,
        cancellation_check,
        classify_SL,
        evolve_truncated,
        make_gaussian_packet,
        truncate_split,
    )
    from .svg import PlotStyle, emit_svg

    s = _packet_settings(
        args,
        {"k0": 5.0, "sigma_k": 0.5, "x0": 10.0, "mass_m": 1.0, "c": 1.0, "n_points": 4096, "length": 480.0,
         "T": 30.0, "cut_x": 0.0},
    )
    T = float(s["T"])
    c = float(s["c"])
    if args.input:
        psi0 = _load_field(args.input)
        phi0, r0 = truncate_split(psi0, s["cut_x"])
        f = {"psi0": psi0, "phi0": phi0, "r0": r0}
        for key, src in (("psi", psi0), ("phi", phi0), ("r", r0)):
            f[key] = evolve_truncated(src, s["mass_m"], T, BranchRule.GROWING, c)
        sp, ss = classify_SL(f["phi"], T, c), classify_SL(f["psi"], T, c)
        diff = sp.superluminal.samples - ss.superluminal.samples
        recon = math.sqrt(np.sum(np.abs(diff) ** 2) * psi0.grid.dx) / ss.norm_S if ss.norm_S else 0.0
        print(f"tail reconstruction error {recon:.3e}")
    else:
        grid = Grid1D.centered(float(s["length"]), int(s["n_points"]))
        pk = make_gaussian_packet(grid, s["k0"], s["sigma_k"], s["x0"], s["mass_m"], "growing-branch", c)
        rep = cancellation_check(pk, s["cut_x"], T, oracle="samples")
        f = rep.fields
        print(
            f"tail reconstruction error {rep.reconstruction_error:.3e}; luminal residual {rep.residual:.3e}; "
            f"growth ratio {rep.growth_ratio:.3e}; residual leak {rep.residual_leak:.3e}"
        )
    x = f["psi0"].grid.x
    cols = {
        "incident": np.abs(f["psi0"].samples) ** 2,
        "transmitted": np.abs(f["psi"].samples) ** 2,
        "truncated": np.abs(f["phi"].samples) ** 2,
        "residual": np.abs(f["r"].samples) ** 2,
    }
    header = ("x",) + tuple(f"{k}_abs2" for k in cols)
    out.add(args.out, csv_bytes(header, zip(x, *cols.values())))
    if args.svg:
        style = PlotStyle(
            f"decomposition at T = {T:g}", "x", "|field|^2", log_y=True, shaded=((c * T, float(x[-1])),), shade_label="x > cT"
        )
        out.add(args.svg, emit_svg({k: (x, v) for k, v in cols.items()}, style))
    if args.dump:
        for key in ("psi0", "psi", "phi", "r"):
            out.add(f"{args.dump}.{key}.bin", f[key].to_bytes())
    return 0


def cmd_sf(args, out: Outputs) -> int:
    from .medium import timescales
    from .superfluorescence import SFContext, sf_delay, sf_intensity, sf_intensity_asymptotic, sf_intensity_short_time
    from .svg import PlotStyle, emit_svg

    ps = _medium_params(args.config, DEFAULT_SF_DOC)
    ctx = SFContext(ps.medium)
    ts = timescales(ps.medium)
    if args.points < 2 or not args.t_max > 0:
        raise ParameterError("--points must be >= 2 and --t-max > 0")
    rows = []
    for u in np.linspace(args.t_max / args.points, args.t_max, args.points):
        t = float(u) * ts.tau_R
        rows.append((t, float(u), sf_intensity(ctx, t), sf_intensity_short_time(ctx, t), sf_intensity_asymptotic(ctx, t)))
    out.add(args.out, csv_bytes(("t", "t_over_tau_R", "intensity", "short_time", "asymptotic"), rows))
    if args.svg:
        u = [r[1] for r in rows]
        series = {"quadrature": (u, [r[2] for r in rows]), "asymptotic": (u, [r[4] for r in rows])}
        out.add(args.svg, emit_svg(series, PlotStyle("SF output intensity", "t / tau_R", "<F+F>", log_y=True)))
    d = sf_delay(ctx)
    print(f"tau_R = {ts.tau_R:.6g} s; delay closed form {d.closed_form:.6g} s, root solve {d.root_solve:.6g} s, ratio {d.ratio:.4f}")
    return 0


def cmd_snr(args, out: Outputs) -> int:
    from .amplifier_snr import SNRInputs, snr, snr_bounds
    from .medium import PulseParams, group_velocity, timescales
    from .svg import PlotStyle, emit_svg

    ps = _medium_params(args.config, DEFAULT_AMPLIFIER_DOC)
    base = ps.medium
    if args.units == "normalized":
        t_unit = timescales(base).tau_R
        d_unit = base.omega_p
        l_unit = base.length_L
    else:
        t_unit = d_unit = l_unit = 1.0
    point = {"q": args.q, "tau_p": args.tau_p, "delta": args.delta, "length": args.length}
    if args.sweep:
        name, lo, hi, n = args.sweep
        if name not in point:
            raise ParameterError(f"unknown sweep parameter {name!r}; use one of {sorted(point)}")
        if n < 2:
            raise ParameterError("sweep needs at least 2 points")
        values = np.linspace(lo, hi, n)
    else:
        name, values = None, [None]
    rows = []
    for v in values:
        p = dict(point)
        if name is not None:
            p[name] = float(v)
        Delta = p["delta"] * d_unit
        tau_p = p["tau_p"] * t_unit
        if args.advance is not None:
            excess = group_velocity(base, Delta).excess
            if excess <= 0:
                raise DomainError("--advance needs v_g > c")
            L = args.advance * tau_p * C_LIGHT / excess
        else:
            L = p["length"] * l_unit
        med = base.replace(length_L=L)
        inp = SNRInputs(med, PulseParams.for_medium(med, p["q"], tau_p, Delta))
        forms = snr(inp, inp.peak_time, check_tol=args.check_tol, with_flags=False)
        b = snr_bounds(inp)
        rows.append(
            (p[name] if name else 0.0, p["q"], Delta, tau_p, L, inp.v_g / C_LIGHT, forms.form_photon_ratio, forms.form_cooperative,
             forms.form_advance, b.detuning_bound, b.detuning_bound_valid, b.frequency_independent_bound, b.separation_ratio)
        )
    header = ("param", "q", "delta", "tau_p", "length", "v_g_over_c", "snr_photon_ratio", "peak_snr", "snr_advance_form",
              "detuning_bound", "detuning_bound_valid", "freq_independent_bound", "separation_ratio")
    out.add(args.out, csv_bytes(header, rows))
    if args.svg and name:
        out.add(args.svg, emit_svg({"peak SNR": ([r[0] for r in rows], [r[7] for r in rows])},
                                   PlotStyle("peak SNR", name, "SNR", log_y=True)))
    if not args.out:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return 0


def cmd_mb_ensemble(args, out: Outputs) -> int:
    from . import checks
    from .amplifier_snr import SNRInputs, noise_intensity
    from .maxwell_bloch import MBGrid, ensemble_statistics, run_realizations
    from .medium import PulseParams
    from .superfluorescence import SFContext, sf_intensity
    from .svg import PlotStyle, emit_svg

    if args.realizations < 2:
        raise ParameterError("--realizations must be >= 2")
    if args.config:
        ps = _medium_params(args.config, DEFAULT_SF_DOC)
        med, pulse = ps.medium, ps.pulse
    elif args.mode == "sf":
        med, pulse = checks.coupled_medium(3.0), None
    else:
        med = checks.coupled_medium(0.05, 0.01)
        T0 = med.length_L / C_LIGHT
        pulse = PulseParams.for_medium(med, 1.0, 0.5 * T0, 10.0 / T0)
    L = med.length_L
    T0 = L / C_LIGHT
    if args.mode == "amplifier":
        if pulse is None:
            raise ParameterError("amplifier mode needs a pulse section in the config")
        inp = SNRInputs(med, pulse)
        t_max = args.t_max * T0 if args.t_max else inp.peak_time
    else:
        t_max = (args.t_max or 6.0) * T0
    n_z = args.n_z or (128 if args.mode == "sf" else 400)
    grid = MBGrid.for_window(n_z, L, t_max)
    times = grid.output_times
    levels = np.nonzero(times > 0)[0]
    if levels.size > args.max_rows:
        levels = levels[np.linspace(0, levels.size - 1, args.max_rows).round().astype(int)]
    hist = run_realizations(grid, med, args.seed, range(args.realizations), args.mode, pulse, method=args.method,
                            workers=args.threads, levels=levels)
    st = ensemble_statistics(hist)
    ref = []
    if args.mode == "sf":
        ctx = SFContext(med)
        ref = [sf_intensity(ctx, times[i]) for i in levels]
    else:
        ref = [noise_intensity(inp, times[i]) if times[i] <= inp.peak_time * (1 + 1e-12) else math.nan for i in levels]
    rows = list(zip(times[levels], st.mean_intensity, st.intensity_stderr, ref))
    out.add(args.out, csv_bytes(("t", "mean_intensity", "stderr", "analytic_reference"), rows))
    if args.svg:
        t = times[levels]
        out.add(args.svg, emit_svg({"ensemble": (t, st.mean_intensity), "analytic": (t, ref)},
                                   PlotStyle(f"{args.mode} noise, M = {args.realizations}", "t [s]", "<F+F>")))
    # the first few samples see only a handful of cells inside the light
    # cone, where the discretization bias is of order dz / (c t)
    resolved = times[levels] >= 20.0 * grid.dz / C_LIGHT
    z = np.abs(st.mean_intensity - np.asarray(ref)) / st.intensity_stderr
    z = z[resolved & np.isfinite(z)]
    zmax = float(z.max()) if z.size else math.nan
    print(f"{args.realizations} realizations, {len(levels)} times; max |z| over t >= 20 dz/c: {zmax:.3f}")
    return 0


def cmd_selftest(args, out: Outputs) -> int:
    from .checks import run_all

    results = run_all(quick=args.quick)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsnp", description="Superluminal pulses, quantum noise and superfluorescence in inverted media.")
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: $QSNP_THREADS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dispersion", help="refractive index, group velocity and gain versus detuning")
    d.add_argument("--config")
    d.add_argument("--delta-min", type=float, default=1.0, help="in units of omega_p")
    d.add_argument("--delta-max", type=float, default=20.0)
    d.add_argument("--points", type=int, default=200)
    d.add_argument("--out")
    d.add_argument("--svg")
    d.set_defaults(func=cmd_dispersion, outputs=("out", "svg"))

    pr = sub.add_parser("propagate", help="spectral propagation of a Gaussian packet (normalized units)")
    pr.add_argument("--config")
    pr.add_argument("--k0", type=float)
    pr.add_argument("--sigma-k", dest="sigma_k", type=float)
    pr.add_argument("--x0", type=float)
    pr.add_argument("--mass", dest="mass_m", type=float)
    pr.add_argument("--n-points", dest="n_points", type=int)
    pr.add_argument("--dx", type=float)
    pr.add_argument("--times", type=_float_list)
    pr.add_argument("--branch", choices=("oscillatory-only", "growing-branch", "decaying-branch"))
    pr.add_argument("--out")
    pr.add_argument("--field-out")
    pr.add_argument("--svg")
    pr.set_defaults(func=cmd_propagate, outputs=("out", "field_out", "svg"))

    dc = sub.add_parser("decompose", help="incident / transmitted / truncated / residual panels")
    dc.add_argument("--config")
    dc.add_argument("--input", help="initial field (.bin dump or .csv)")
    dc.add_argument("--k0", type=float)
    dc.add_argument("--sigma-k", dest="sigma_k", type=float)
    dc.add_argument("--x0", type=float)
    dc.add_argument("--mass", dest="mass_m", type=float)
    dc.add_argument("--n-points", dest="n_points", type=int)
    dc.add_argument("--length", type=float)
    dc.add_argument("--T", dest="T", type=float)
    dc.add_argument("--cut", dest="cut_x", type=float)
    dc.add_argument("--out")
    dc.add_argument("--svg")
    dc.add_argument("--dump", help="prefix for binary field dumps")
    dc.set_defaults(func=cmd_decompose, outputs=("out", "svg", "dump"))

    sf = sub.add_parser("sf", help="superfluorescence intensity and delay")
    sf.add_argument("--config")
    sf.add_argument("--t-max", type=float, default=100.0, help="in units of tau_R")
    sf.add_argument("--points", type=int, default=200)
    sf.add_argument("--out")
    sf.add_argument("--svg")
    sf.set_defaults(func=cmd_sf, outputs=("out", "svg"))

    sn = sub.add_parser("snr", help="peak signal-to-noise ratio and bounds")
    sn.add_argument("--config")
    sn.add_argument("--units", choices=("normalized", "cgs"), default="normalized",
                    help="normalized: tau_p in tau_R, delta in omega_p, length in the configured L")
    sn.add_argument("--q", type=float, default=1.0)
    sn.add_argument("--tau-p", type=float, default=1.0)
    sn.add_argument("--delta", type=float, default=2.0)
    sn.add_argument("--length", type=float, default=1.0)
    sn.add_argument("--advance", type=float, default=None,
                    help="hold (v_g/c - 1) L/c at this many pulse durations by adjusting L")
    sn.add_argument("--sweep", type=_sweep)
    sn.add_argument("--check-tol", type=float, default=1e-10)
    sn.add_argument("--out")
    sn.add_argument("--svg")
    sn.set_defaults(func=cmd_snr, outputs=("out", "svg"))

    mb = sub.add_parser("mb-ensemble", help="Monte-Carlo ensemble of stochastic envelope integrations")
    mb.add_argument("--config")
    mb.add_argument("--realizations", type=int, default=1000)
    mb.add_argument("--seed", type=int, default=0)
    mb.add_argument("--mode", choices=("sf", "amplifier"), default="sf")
    mb.add_argument("--method", choices=("response", "direct"), default="response")
    mb.add_argument("--n-z", type=int)
    mb.add_argument("--t-max", type=float, help="in units of L/c")
    mb.add_argument("--max-rows", type=int, default=400)
    mb.add_argument("--out")
    mb.add_argument("--svg")
    mb.set_defaults(func=cmd_mb_ensemble, outputs=("out", "svg"))

    st = sub.add_parser("selftest", help="run the acceptance checks")
    st.add_argument("--quick", action="store_true", help="fewer replicates in the Monte-Carlo slope check")
    st.set_defaults(func=cmd_selftest, outputs=())
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
    out = Outputs()
    try:
        if args.threads is None and hasattr(args, "threads"):
            from .maxwell_bloch import worker_count

            args.threads = worker_count()
        Outputs.check_writable(*(getattr(args, k) for k in args.outputs if k != "dump"))
        if getattr(args, "dump", None):
            Outputs.check_writable(args.dump + ".x")
        code = args.func(args, out)
        out.commit()
        return code
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
