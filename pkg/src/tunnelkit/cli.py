"""Command-line front end: spectra, scans, fits, and CSV/JSON export.

Subcommands and their CSV schemas (all values in scientific notation at
the requested digit count; the effective configuration is echoed in a
leading comment line):

  spectrum      level,sector,parity,energy,M,digits
  shoot         level,parity,energy,digits        (--scan: E,parity,m_value)
  wkb           key,value
  splitting     g,dE_num,dE_wkb,rel_diff
  fit           coefficient,value,stderr          (+ residual/points rows)
  band          theta,energy
  delta-c       g,delta_c,E0,E1,E2,ratio
  wavefunction  x,psi0,psi1,...
  gy-check      T,numeric,closed_form,ratio

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import mpmath as mp
from mpmath import mpf

from . import analysis, fock, instanton, numerics, planewave, shooting
from .potentials import anharmonic_quartic, cosine, double_well, triple_well


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    options: dict
    output: str | None
    fmt: str
    threads: int
    digits: int

    def echo(self) -> str:
        # threads is deliberately absent: it may change wall time but never a
        # result, and output files must be byte-identical across thread counts.
        items = [f"command={self.command}", f"format={self.fmt}", f"digits={self.digits}"]
        items += [f"{k}={v}" for k, v in sorted(self.options.items()) if v is not None]
        return " ".join(items)


def format_sci(x, digits: int) -> str:
    """Sign, digit-count-explicit mantissa, explicit exponent."""
    x = mpf(x)
    if x == 0:
        return "0." + "0" * (digits - 1) + "e+0"
    sign = "-" if x < 0 else ""
    ax = abs(x)
    e = int(mp.floor(mp.log10(ax)))
    for _ in range(3):
        mant = ax / mpf(10) ** e
        s = mp.nstr(mant, digits, strip_zeros=False)
        if s.startswith("10."):
            e += 1
            continue
        if s.startswith("0."):
            e -= 1
            continue
        break
    if "." not in s:
        s += "." + "0" * (digits - 1)
    frac = s.split(".", 1)[1]
    if len(frac) < digits - 1:
        s += "0" * (digits - 1 - len(frac))
    return f"{sign}{s}e{e:+d}"


def _write_rows(config: RunConfig, header: list, rows: list) -> None:
    """Emit CSV or JSON; file output goes through a same-directory
    temp file and an atomic rename."""
    if config.fmt == "json":
        payload = {
            "config": config.echo(),
            "columns": header,
            "rows": [dict(zip(header, row)) for row in rows],
        }
        text = json.dumps(payload, indent=1) + "\n"
    else:
        lines = ["# config: " + config.echo(), ",".join(header)]
        lines += [",".join(str(v) for v in row) for row in rows]
        text = "\n".join(lines) + "\n"
    if config.output is None:
        sys.stdout.write(text)
        return
    tmp = f"{config.output}.tmp-{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, config.output)


def _spec_from(options: dict):
    family = options.get("family")
    if family == "anharmonic":
        return anharmonic_quartic(options.get("eps", "1"), options["g"], options.get("c", "0"))
    if family == "double_well":
        return double_well(options["g"])
    if family == "triple_well":
        return triple_well(options["g"], delta=options.get("delta", "0"))
    if family == "cosine":
        k = options.get("K")
        return cosine(options["g"], boundary=int(k) if k else "line")
    raise ConfigError(f"unknown family {family!r}")


def _band_worker(K, k, g, cutoff):
    h = planewave.build_sector(K, k, g, cutoff)
    e = planewave.sector_lowest(h, 1).eigenvalues[0]
    return (float(h.sector.theta), h.sector.theta._mpf_, e._mpf_)


def _delta_worker(g_str, window, tol, M):
    dc, levels = analysis.find_delta_c(g_str, window, tol, M)
    return (dc._mpf_, tuple(e._mpf_ for e in levels))


def cmd_spectrum(config: RunConfig) -> int:
    opts = config.options
    levels = opts["levels"]
    if levels < 1:
        raise ConfigError("levels must be >= 1")
    spec = _spec_from(opts)
    rows = []
    with numerics.precision(config.digits):
        if opts["family"] == "cosine" and opts.get("K"):
            K = int(opts["K"])
            cutoff = opts.get("cutoff") or planewave.default_cutoff(spec.g)
            merged = []
            for k in range(K):
                h = planewave.build_sector(K, k, spec.g, cutoff)
                for lam in planewave.sector_lowest(h, levels).eigenvalues:
                    merged.append((lam, k))
            merged.sort(key=lambda t: (t[0], t[1]))
            for i, (lam, k) in enumerate(merged[:levels]):
                rows.append([i, k, "none", format_sci(lam, config.digits), cutoff, config.digits])
        else:
            m_used = opts.get("M") or max(40, analysis.fock_cutoff(spec.g))
            build = fock._build_for(spec, spec.g, m_used)
            s = fock.lowest_eigenvalues(build, levels)
            for i, lam in enumerate(s.eigenvalues):
                rows.append([i, "-", s.meta["parities"][i], format_sci(lam, config.digits), m_used, config.digits])
    _write_rows(config, ["level", "sector", "parity", "energy", "M", "digits"], rows)
    return 0


def cmd_shoot(config: RunConfig) -> int:
    opts = config.options
    spec = _spec_from(opts)
    window = (opts.get("e_lo", "0"), opts["e_hi"])
    parity = opts.get("parity", "both")
    rows = []
    with numerics.precision(config.digits):
        h = mpf(opts["h"]) if opts.get("h") else None
        if opts.get("scan"):
            n = int(opts["scan"])
            lo, hi = mpf(str(window[0])), mpf(str(window[1]))
            for par in ("even", "odd") if parity == "both" else (parity,):
                for i in range(n + 1):
                    e = lo + (hi - lo) * i / n
                    mval = shooting.m_function(spec, e, par, h)
                    rows.append([format_sci(e, config.digits), par, format_sci(mval, config.digits)])
            _write_rows(config, ["E", "parity", "m_value"], rows)
            return 0
        tol = mpf(opts.get("tol", "1e-7"))
        labelled = []
        for par in ("even", "odd") if parity == "both" else (parity,):
            labelled += [(e, par) for e in shooting.find_levels(spec, window, par, h, tol)]
        labelled.sort(key=lambda t: t[0])
        for i, (e, par) in enumerate(labelled):
            rows.append([i, par, format_sci(e, config.digits), config.digits])
    _write_rows(config, ["level", "parity", "energy", "digits"], rows)
    return 0


def cmd_wkb(config: RunConfig) -> int:
    opts = config.options
    spec = _spec_from(opts)
    rows = []
    with numerics.precision(config.digits):
        pred = instanton.predict(spec, convention=opts.get("convention", "weighted"))
        d = config.digits
        rows.append(["S0", format_sci(pred.S0, d)])
        rows.append(["A", format_sci(pred.A, d)])
        rows.append(["prefactor", format_sci(pred.prefactor, d)])
        rows.append(["splitting", format_sci(pred.splitting, d)])
        for i, (e, deg) in enumerate(pred.levels):
            rows.append([f"E{i}", format_sci(e, d)])
            rows.append([f"E{i}_degeneracy", deg])
        for site in sorted(pred.amplitudes):
            for i, a in enumerate(pred.amplitudes[site]):
                rows.append([f"amp[{site}][E{i}]", format_sci(a, d)])
    _write_rows(config, ["key", "value"], rows)
    return 0


def cmd_splitting(config: RunConfig) -> int:
    opts = config.options
    grid = opts["g_grid"]
    points = analysis.splitting_scan(
        opts["family"], grid, K=int(opts.get("K") or 2), threads=config.threads
    )
    rows = []
    for p in points:
        if p.error is not None:
            rows.append([str(p.g), "", "", ""])
            continue
        rows.append(
            [
                format_sci(p.g, config.digits),
                format_sci(p.delta_e_num, config.digits),
                format_sci(p.delta_e_wkb, config.digits),
                format_sci(p.rel_diff, config.digits),
            ]
        )
    _write_rows(config, ["g", "dE_num", "dE_wkb", "rel_diff"], rows)
    return 0


def cmd_fit(config: RunConfig) -> int:
    opts = config.options
    grid = opts["g_grid"]
    rows = []
    d = config.digits
    if opts.get("law") == "exp":
        pairs = analysis.side_pair_splittings(grid, opts.get("delta", "0"), threads=config.threads)
        C, s = analysis.exp_law_fit(pairs)
        rows.append(["C", format_sci(C, d), ""])
        rows.append(["s", format_sci(s, d), ""])
        rows.append(["points", len(pairs), ""])
    else:
        points = analysis.splitting_scan(
            opts["family"], grid, K=int(opts.get("K") or 2), threads=config.threads
        )
        fit = analysis.fit_corrections(points, degree=int(opts.get("degree") or 3))
        names = ["alpha", "beta", "gamma"]
        for name, c, e in zip(names, fit.coefficients, fit.errors):
            rows.append([name, format_sci(c, d), format_sci(e, d)])
        rows.append(["residual_norm", format_sci(fit.residual_norm, d), ""])
        rows.append(["points", fit.points_used, ""])
    _write_rows(config, ["coefficient", "value", "stderr"], rows)
    return 0


def cmd_band(config: RunConfig) -> int:
    opts = config.options
    K = int(opts["K"])
    g_str = opts["g"]
    cutoff = opts.get("cutoff")
    args = [(config.digits, K, k, g_str, cutoff) for k in range(K // 2 + 1)]
    results = analysis._run_indexed(_band_set_digits, args, config.threads)
    rows = []
    for _, theta_t, e_t in results:
        rows.append(
            [
                format_sci(mp.make_mpf(theta_t), config.digits),
                format_sci(mp.make_mpf(e_t), config.digits),
            ]
        )
    _write_rows(config, ["theta", "energy"], rows)
    return 0


def _band_set_digits(digits, K, k, g, cutoff):
    with numerics.precision(digits):
        return _band_worker(K, k, g, cutoff)


def cmd_delta_c(config: RunConfig) -> int:
    opts = config.options
    grid = opts["g_grid"]
    window = (opts.get("delta_lo", "0"), opts.get("delta_hi", "0.3"))
    tol = opts.get("tol", "1e-6")
    args = [(g, window, tol, opts.get("M")) for g in grid]
    results = analysis._run_indexed(_delta_worker, args, config.threads)
    rows = []
    d = config.digits
    for (g, *_), (dc_t, level_ts) in zip(args, results):
        dc = mp.make_mpf(dc_t)
        e0, e1, e2 = (mp.make_mpf(t) for t in level_ts)
        ratio = (e2 - e1) / (e1 - e0)
        rows.append(
            [
                format_sci(mpf(str(analysis._num(g))), d),
                format_sci(dc, d),
                format_sci(e0, d),
                format_sci(e1, d),
                format_sci(e2, d),
                format_sci(ratio, d),
            ]
        )
    _write_rows(config, ["g", "delta_c", "E0", "E1", "E2", "ratio"], rows)
    return 0


def cmd_wavefunction(config: RunConfig) -> int:
    opts = config.options
    levels = int(opts.get("levels") or 1)
    if levels < 1:
        raise ConfigError("levels must be >= 1")
    spec = _spec_from(opts)
    if opts["family"] == "cosine":
        raise ConfigError("wavefunction export covers the oscillator-basis families")
    n_pts = int(opts.get("points") or 201)
    with numerics.precision(config.digits):
        m_used = opts.get("M") or max(40, analysis.fock_cutoff(spec.g))
        x_lo = mpf(opts.get("x_lo", "-10"))
        x_hi = mpf(opts.get("x_hi", "10"))
        grid = [x_lo + (x_hi - x_lo) * i / (n_pts - 1) for i in range(n_pts)]
        build = fock._build_for(spec, spec.g, m_used)
        s = fock.lowest_eigenvalues(build, levels, with_vectors=True)
        columns = [fock.wavefunction(v, grid) for v in s.vectors]
        rows = []
        for i, x in enumerate(grid):
            rows.append([format_sci(x, config.digits)] + [format_sci(col[i], config.digits) for col in columns])
    _write_rows(config, ["x"] + [f"psi{j}" for j in range(levels)], rows)
    return 0


def cmd_gy_check(config: RunConfig) -> int:
    opts = config.options
    spec = _spec_from(opts)
    rows = []
    with numerics.precision(config.digits):
        for t_str in opts["T_list"]:
            num, closed = instanton.gelfand_yaglom_check(spec, mpf(str(t_str)), int(opts.get("grid") or 4001))
            rows.append(
                [
                    format_sci(mpf(str(t_str)), config.digits),
                    format_sci(num, config.digits),
                    format_sci(closed, config.digits),
                    format_sci(num / closed, config.digits),
                ]
            )
    _write_rows(config, ["T", "numeric", "closed_form", "ratio"], rows)
    return 0


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "shoot": cmd_shoot,
    "wkb": cmd_wkb,
    "splitting": cmd_splitting,
    "fit": cmd_fit,
    "band": cmd_band,
    "delta-c": cmd_delta_c,
    "wavefunction": cmd_wavefunction,
    "gy-check": cmd_gy_check,
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tunnelkit", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--digits", type=int, default=None, help="working/display precision (>= 20)")
        sp.add_argument("--config", default=None, help="JSON config file; flags take precedence")
        sp.add_argument("--output", "-o", default=None, help="output path (default stdout)")
        sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None)
        sp.add_argument("--threads", type=int, default=None)

    sp = sub.add_parser("spectrum", help="lowest eigenvalues (CSV: level,sector,parity,energy,M,digits)")
    sp.add_argument("--family", required=True, choices=("anharmonic", "double_well", "triple_well", "cosine"))
    sp.add_argument("--eps", default="1")
    sp.add_argument("--g", required=True)
    sp.add_argument("--c", default="0")
    sp.add_argument("--delta", default="0")
    sp.add_argument("--K", default=None)
    sp.add_argument("--M", type=int, default=None)
    sp.add_argument("--cutoff", type=int, default=None)
    sp.add_argument("--levels", type=int, required=True)
    common(sp)

    sp = sub.add_parser("shoot", help="shooting levels or m(E) scan")
    sp.add_argument("--family", required=True, choices=("anharmonic", "double_well", "triple_well", "cosine"))
    sp.add_argument("--eps", default="1")
    sp.add_argument("--g", required=True)
    sp.add_argument("--c", default="0")
    sp.add_argument("--delta", default="0")
    sp.add_argument("--e-lo", dest="e_lo", default="0")
    sp.add_argument("--e-hi", dest="e_hi", required=True)
    sp.add_argument("--parity", choices=("even", "odd", "both"), default="both")
    sp.add_argument("--h", default=None, help="integrator step (default policy)")
    sp.add_argument("--tol", default="1e-7")
    sp.add_argument("--scan", type=int, default=None, help="dump m(E) on an N-point grid instead")
    common(sp)

    sp = sub.add_parser("wkb", help="semiclassical prediction table (key,value)")
    sp.add_argument("--family", required=True, choices=("double_well", "triple_well", "cosine"))
    sp.add_argument("--g", required=True)
    sp.add_argument("--delta", default="0")
    sp.add_argument("--K", default=None)
    sp.add_argument("--convention", choices=("weighted", "product"), default="weighted")
    common(sp)

    sp = sub.add_parser("splitting", help="exact vs WKB splittings (CSV: g,dE_num,dE_wkb,rel_diff)")
    sp.add_argument("--family", required=True, choices=("double_well", "cosine"))
    sp.add_argument("--g-grid", dest="g_grid", required=True, help="comma-separated ascending g values")
    sp.add_argument("--K", default=None)
    common(sp)

    sp = sub.add_parser("fit", help="correction-polynomial or exponential-law fit")
    sp.add_argument("--family", default="double_well", choices=("double_well", "cosine", "triple_well"))
    sp.add_argument("--g-grid", dest="g_grid", required=True)
    sp.add_argument("--K", default=None)
    sp.add_argument("--degree", default="3")
    sp.add_argument("--law", choices=("corrections", "exp"), default="corrections")
    sp.add_argument("--delta", default="0")
    common(sp)

    sp = sub.add_parser("band", help="lowest band profile (CSV: theta,energy)")
    sp.add_argument("--K", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--cutoff", type=int, default=None)
    common(sp)

    sp = sub.add_parser("delta-c", help="triple-well resonance offset per g")
    sp.add_argument("--g-grid", dest="g_grid", required=True)
    sp.add_argument("--delta-lo", dest="delta_lo", default="0")
    sp.add_argument("--delta-hi", dest="delta_hi", default="0.3")
    sp.add_argument("--tol", default="1e-6")
    sp.add_argument("--M", type=int, default=None)
    common(sp)

    sp = sub.add_parser("wavefunction", help="position-space eigenfunctions (CSV: x,psi0,...)")
    sp.add_argument("--family", required=True, choices=("anharmonic", "double_well", "triple_well"))
    sp.add_argument("--eps", default="1")
    sp.add_argument("--g", required=True)
    sp.add_argument("--c", default="0")
    sp.add_argument("--delta", default="0")
    sp.add_argument("--M", type=int, default=None)
    sp.add_argument("--levels", type=int, default=1)
    sp.add_argument("--x-lo", dest="x_lo", default="-10")
    sp.add_argument("--x-hi", dest="x_hi", default="10")
    sp.add_argument("--points", type=int, default=201)
    common(sp)

    sp = sub.add_parser("gy-check", help="fluctuation determinant vs closed form")
    sp.add_argument("--family", required=True, choices=("double_well", "cosine"))
    sp.add_argument("--g", required=True)
    sp.add_argument("--T", dest="T_list", action="append", required=True, help="horizon; repeatable")
    sp.add_argument("--grid", type=int, default=4001)
    common(sp)

    return p


def _effective_config(ns: argparse.Namespace) -> RunConfig:
    file_cfg = {}
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")

    def pick(name, default):
        flag = getattr(ns, name, None)
        if flag is not None:
            return flag
        if name in file_cfg:
            return file_cfg[name]
        return default

    env_digits = os.environ.get("TUNNELKIT_DIGITS")
    digits = pick("digits", int(env_digits) if env_digits else 30)
    digits = int(digits)
    if digits < 20:
        raise ConfigError("digits must be >= 20")
    threads = int(pick("threads", 1))
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    fmt = pick("fmt", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    options = {}
    for key, val in vars(ns).items():
        if key in ("digits", "config", "output", "fmt", "threads", "command"):
            continue
        options[key] = val if val is not None else file_cfg.get(key)
    if "g_grid" in options and options["g_grid"] is not None:
        if isinstance(options["g_grid"], str):
            options["g_grid"] = [s.strip() for s in options["g_grid"].split(",") if s.strip()]
        if not options["g_grid"]:
            raise ConfigError("g-grid must be nonempty")
    return RunConfig(
        command=ns.command,
        options=options,
        output=pick("output", None),
        fmt=fmt,
        threads=threads,
        digits=digits,
    )


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        config = _effective_config(ns)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[config.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
