"""Command-line surface: dispersion tables, Monte Carlo bounds, figure data,
exponent curves and the acceptance verifier.

Output discipline: CSV ('.' decimal, 9 significant digits, mandatory header,
leading `# manifest:` comment) or JSON validating against the shipped schema.
Files are written atomically (a `.partial` suffix until complete) next to a
`<out>.manifest.json` run manifest; equal manifests reproduce equal bytes.

Exit codes: 0 success, 2 usage error, 3 computational failure (JSON error
body on stderr).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import click
import numpy as np

from . import __version__
from ._kernels import BACKEND
from .errors import ConstraintError, DomainError, IcFadingError
from .fading import (
    Awgn,
    FadingModel,
    GaussAr1,
    GaussArma,
    Iid,
    Nakagami,
    TabulatedPdf,
    rayleigh,
)
from .mimo import (
    MimoConfig,
    bdut_optimize,
    mimo_capacity_fdt,
    mimo_dispersion_fdt,
    mimo_vs_parallel_gaps,
    parallel_capacity_dispersion,
)
from .montecarlo import (
    dt_bound,
    lattice_typicality_bound,
    log_chi2_tv_error,
    sphere_packing_bound,
)
from .numerics import trigamma
from .sampling import McConfig, set_thread_count
from .scalar import (
    achievable_nld,
    capacity_dispersion_complex,
    capacity_dispersion_real,
    memory_dispersion,
    power_constrained_dispersion,
)
from .exponents import ic_exponent_scalar, mimo_gallager_exponent

EXIT_COMPUTE_FAILURE = 3
_SEED_ENV = "ICFADING_SEED"


# ---------------------------------------------------------------------------
# formatting / manifest helpers
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.9g}"
    if v is None:
        return ""
    return str(v)


def _manifest_id(command: str, params: dict, seed) -> str:
    canonical = json.dumps(
        {"command": command, "params": params, "seed": seed, "version": __version__},
        sort_keys=True, default=str,
    )
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


@dataclass
class RunOutput:
    command: str
    params: dict
    rows: list[dict]
    meta: dict

    def render_csv(self) -> str:
        mid = _manifest_id(self.command, self.params, self.params.get("seed"))
        lines = [f"# manifest: {mid}"]
        for key in sorted(self.meta):
            lines.append(f"# {key}: {_fmt(self.meta[key])}")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.rows:
            cols = list(self.rows[0].keys())
            writer.writerow(cols)
            for row in self.rows:
                writer.writerow([_fmt(row.get(c)) for c in cols])
        return "\n".join(lines) + "\n" + buf.getvalue()

    def render_json(self) -> str:
        mid = _manifest_id(self.command, self.params, self.params.get("seed"))
        doc = {
            "command": self.command,
            "manifest_id": mid,
            "meta": self.meta,
            "rows": self.rows,
        }
        return json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"

    def write(self, out: str | None, fmt: str):
        text = self.render_csv() if fmt == "csv" else self.render_json()
        if out is None:
            click.echo(text, nl=False)
            return
        partial = out + ".partial"
        with open(partial, "w") as fh:
            fh.write(text)
        os.replace(partial, out)
        manifest = {
            "command": self.command,
            "params": self.params,
            "seed": self.params.get("seed"),
            "version": __version__,
            "backend": BACKEND,
            "manifest_id": _manifest_id(self.command, self.params, self.params.get("seed")),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "outputs": [out],
        }
        mpath = out + ".manifest.json"
        with open(mpath + ".partial", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(mpath + ".partial", mpath)


def _fail_compute(exc: Exception):
    body = {"error": type(exc).__name__, "detail": str(exc)}
    click.echo(json.dumps(body), err=True)
    sys.exit(EXIT_COMPUTE_FAILURE)


def _apply_config(ctx: click.Context, config_path: str | None):
    """Fill parameters from a flat `key = value` file; explicit flags win."""
    if not config_path:
        return
    values = {}
    with open(config_path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise click.UsageError(f"bad config line (need key = value): {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = val
    for param in ctx.command.params:
        name = param.name
        if name in values and ctx.get_parameter_source(name) == click.core.ParameterSource.DEFAULT:
            ctx.params[name] = param.type_cast_value(ctx, values[name])


def _count(value: str) -> int:
    """Sample counts accept scientific notation (`1e6`)."""
    return int(float(value))


# ---------------------------------------------------------------------------
# shared option groups
# ---------------------------------------------------------------------------


def io_options(f):
    f = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     default=None, help="flat key = value config merged under explicit flags")(f)
    f = click.option("--out", type=click.Path(dir_okay=False), default=None,
                     help="output path (atomic write + manifest); stdout if omitted")(f)
    f = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
                     show_default=True)(f)
    return f


def mc_options(f):
    f = click.option("--threads", type=int, default=1, show_default=True,
                     help="batch-level parallelism")(f)
    f = click.option("--batches", type=int, default=16, show_default=True)(f)
    f = click.option("--seed", type=int, default=0, envvar=_SEED_ENV, show_default=True,
                     help=f"RNG seed (env {_SEED_ENV})")(f)
    f = click.option("--samples", type=_count, default="100000", show_default=True,
                     help="Monte Carlo samples (scientific notation ok)")(f)
    return f


def model_options(f):
    f = click.option("--sigma2", type=float, default=1.0, show_default=True)(f)
    f = click.option("--tabulated-csv", type=click.Path(exists=True, dir_okay=False),
                     default=None, help="two-column (h, density) CSV, header optional")(f)
    f = click.option("--m", "nakagami_m", type=float, default=1.0, show_default=True,
                     help="Nakagami shape (with --fading nakagami)")(f)
    f = click.option("--fading", type=click.Choice(["awgn", "rayleigh", "nakagami", "tabulated"]),
                     default="rayleigh", show_default=True)(f)
    return f


def _build_model(fading: str, nakagami_m: float, tabulated_csv: str | None) -> FadingModel:
    if fading == "awgn":
        return Awgn()
    if fading == "rayleigh":
        return rayleigh()
    if fading == "nakagami":
        return Nakagami(nakagami_m)
    if tabulated_csv is None:
        raise click.UsageError("--fading tabulated requires --tabulated-csv")
    rows = []
    with open(tabulated_csv) as fh:
        for line in fh:
            parts = line.replace(",", " ").split()
            if len(parts) < 2:
                continue
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                continue  # header line
    if len(rows) < 2:
        raise click.UsageError(f"no numeric (h, density) rows in {tabulated_csv}")
    h, dens = zip(*rows)
    return TabulatedPdf(h, dens)


def _mc(samples, seed, batches, threads) -> McConfig:
    set_thread_count(threads)
    return McConfig(samples=samples, seed=seed, batches=batches)


def _parse_list(text: str | None, cast=float) -> list:
    if not text:
        return []
    return [cast(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


@click.group()
@click.version_option(__version__)
def main():
    """Finite-blocklength analysis of infinite constellations on fading channels."""


@main.command("dispersion")
@click.option("--domain", type=click.Choice(["real", "complex", "mimo", "parallel", "memory"]),
              default="real", show_default=True)
@model_options
@click.option("--t", "t_antennas", type=int, default=1, show_default=True)
@click.option("--r", "r_antennas", type=int, default=1, show_default=True)
@click.option("--l", "l_channels", type=int, default=1, show_default=True)
@click.option("--process", type=click.Choice(["iid", "ar1", "arma"]), default="iid",
              show_default=True, help="fading process (memory domain)")
@click.option("--a", "ar1_a", type=float, default=0.5, show_default=True,
              help="AR(1) coefficient (memory domain)")
@click.option("--ar", "ar_coeffs", type=str, default=None, help="ARMA AR coefficients c1,c2,...")
@click.option("--ma", "ma_coeffs", type=str, default=None, help="ARMA MA coefficients")
@click.option("--n", "n_list", type=str, default=None, help="block lengths, comma separated")
@click.option("--eps", "eps_list", type=str, default=None, help="error targets, comma separated")
@click.option("--ml-conjecture", is_flag=True,
              help="add the (unproven) +ln(n)/(2n) ML-decoder column")
@mc_options
@io_options
@click.pass_context
def cmd_dispersion(ctx, domain, fading, nakagami_m, tabulated_csv, sigma2, t_antennas,
                   r_antennas, l_channels, process, ar1_a, ar_coeffs, ma_coeffs,
                   n_list, eps_list, ml_conjecture, samples, seed, batches, threads,
                   fmt, out, config_path):
    """Capacity/dispersion table with optional finite-n NLD and VNR columns."""
    _apply_config(ctx, config_path)
    p = ctx.params
    try:
        rows = _dispersion_rows(p)
    except (ConstraintError, DomainError) as exc:
        # invalid parameter combination, not a computational failure
        raise click.UsageError(str(exc))
    except IcFadingError as exc:
        _fail_compute(exc)
    params = {k: v for k, v in p.items() if k not in ("fmt", "out", "config_path")}
    RunOutput("dispersion", params, rows, {"version": __version__}).write(p["out"], p["fmt"])


def _dispersion_rows(p) -> list[dict]:
    domain = p["domain"]
    model = _build_model(p["fading"], p["nakagami_m"], p["tabulated_csv"])
    sigma2 = p["sigma2"]
    ns = _parse_list(p["n_list"], int)
    epss = _parse_list(p["eps_list"], float)
    v_std_err = None

    if domain == "real":
        dr = capacity_dispersion_real(model, sigma2)
        vnr_scale = 2.0
        params_desc = p["fading"]
    elif domain == "complex":
        dr = capacity_dispersion_complex(model, sigma2)
        vnr_scale = 1.0
        params_desc = p["fading"]
    elif domain == "mimo":
        cfg = MimoConfig(p["t_antennas"], p["r_antennas"], sigma2)
        from .scalar import DispersionResult

        dr = DispersionResult(mimo_capacity_fdt(cfg), mimo_dispersion_fdt(cfg),
                              "mimo_fdt", sigma2)
        vnr_scale = 1.0 / cfg.t
        params_desc = f"t={cfg.t};r={cfg.r}"
    elif domain == "parallel":
        dr = parallel_capacity_dispersion(p["l_channels"], sigma2)
        vnr_scale = 1.0 / p["l_channels"]
        params_desc = f"L={p['l_channels']}"
    else:  # memory
        proc = _build_process(p)
        mc = _mc(p["samples"], p["seed"], p["batches"], p["threads"])
        dr, v_est = memory_dispersion(proc, sigma2, mc)
        v_std_err = v_est.std_err
        vnr_scale = 2.0
        params_desc = p["process"]

    base = {
        "domain": domain,
        "params": params_desc,
        "sigma2": sigma2,
        "delta_star": dr.delta_star,
        "v": dr.v,
    }
    if v_std_err is not None:
        base["v_std_err"] = v_std_err
    if not ns or not epss:
        return [base]
    rows = []
    for n in ns:
        for eps in epss:
            point = achievable_nld(dr, n, eps)
            row = dict(base)
            row.update({
                "n": n,
                "eps": eps,
                "nld": point.nld,
                "vnr": math.exp(vnr_scale * (dr.delta_star - point.nld)),
            })
            if p["ml_conjecture"]:
                row["nld_ml_conjecture"] = point.nld + math.log(n) / (2.0 * n)
            rows.append(row)
    return rows


def _build_process(p):
    if p["process"] == "iid":
        return Iid(_build_model(p["fading"], p["nakagami_m"], p["tabulated_csv"]))
    if p["process"] == "ar1":
        return GaussAr1(p["ar1_a"])
    return GaussArma(_parse_list(p["ar_coeffs"]), _parse_list(p["ma_coeffs"]))


@main.command("bounds")
@click.option("--bound", type=click.Choice(["sp", "dt", "typicality"]), required=True)
@model_options
@click.option("--complex", "complex_domain", is_flag=True, help="scalar complex channel (sp)")
@click.option("--t", "t_antennas", type=int, default=None, help="MIMO transmit antennas (sp)")
@click.option("--r", "r_antennas", type=int, default=None, help="MIMO receive antennas (sp)")
@click.option("--n", "blocklength", type=int, required=True)
@click.option("--delta", type=float, default=None, help="NLD in nats (sp, typicality)")
@click.option("--big-m", "--M", "codewords", type=_count, default=None,
              help="codebook size (dt)")
@click.option("--a-over-sigma", type=float, default=1e4, show_default=True,
              help="cube side over noise std (dt)")
@click.option("--r-decode", type=float, default=None, help="decoding radius (typicality)")
@click.option("--eps", type=float, default=None, help="tuned-radius target (typicality)")
@mc_options
@io_options
@click.pass_context
def cmd_bounds(ctx, bound, fading, nakagami_m, tabulated_csv, sigma2, complex_domain,
               t_antennas, r_antennas, blocklength, delta, codewords, a_over_sigma,
               r_decode, eps, samples, seed, batches, threads, fmt, out, config_path):
    """Monte Carlo bound estimates with standard errors and seed provenance."""
    _apply_config(ctx, config_path)
    p = ctx.params
    mc = _mc(p["samples"], p["seed"], p["batches"], p["threads"])
    n = p["blocklength"]
    try:
        if bound == "sp":
            if p["delta"] is None:
                raise click.UsageError("--bound sp requires --delta")
            if p["t_antennas"] is not None:
                target = MimoConfig(p["t_antennas"], p["r_antennas"] or p["t_antennas"],
                                    p["sigma2"])
            else:
                target = _build_model(p["fading"], p["nakagami_m"], p["tabulated_csv"])
            est = sphere_packing_bound(target, n, p["delta"], p["sigma2"], mc,
                                       complex_domain=p["complex_domain"])
        elif bound == "dt":
            if p["codewords"] is None:
                raise click.UsageError("--bound dt requires --M")
            model = _build_model(p["fading"], p["nakagami_m"], p["tabulated_csv"])
            est = dt_bound(model, n, p["a_over_sigma"] * math.sqrt(p["sigma2"]),
                           p["codewords"], p["sigma2"], mc)
        else:
            if p["delta"] is None:
                raise click.UsageError("--bound typicality requires --delta")
            if p["r_decode"] is None and p["eps"] is None:
                raise click.UsageError(
                    "--bound typicality requires --r-decode or --eps (tuned radius)"
                )
            model = _build_model(p["fading"], p["nakagami_m"], p["tabulated_csv"])
            est = lattice_typicality_bound(model, n, p["delta"], p["sigma2"], mc,
                                           r_decode=p["r_decode"], eps=p["eps"])
    except click.UsageError:
        raise
    except IcFadingError as exc:
        _fail_compute(exc)
    row = {"bound": bound, "n": n, "estimate": est.mean, "std_err": est.std_err,
           "ci_half_width": est.ci_half_width, "samples": mc.samples, "seed": mc.seed}
    for key in ("analytic", "raw_mean", "term_noise", "term_density"):
        if key in est.extras:
            row[key] = est.extras[key]
    params = {k: v for k, v in p.items() if k not in ("fmt", "out", "config_path")}
    RunOutput("bounds", params, [row], {"backend": BACKEND}).write(p["out"], p["fmt"])


# ---------------------------------------------------------------------------
# figures registry
# ---------------------------------------------------------------------------


def _fig_nakagami_dispersion(p):
    rows = [{"m": m, "v": 0.5 + 0.25 * trigamma(m)}
            for m in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0)]
    return rows, {"endpoint_v16": 0.5 + 0.25 * trigamma(16.0)}


def _fig_power_constrained(p):
    model = rayleigh()
    limit = capacity_dispersion_real(model, 1.0).v
    rows = []
    for snr_db in range(-10, 65, 5):
        snr = 10.0 ** (snr_db / 10.0)
        rows.append({"snr_db": float(snr_db),
                     "v": power_constrained_dispersion(model, snr),
                     "v_unconstrained": limit})
    return rows, {"limit": limit}


def _fig_ar1_dispersion(p):
    from .fading import dispersion_sum

    mc = _mc(p["samples"], p["seed"], p["batches"], p["threads"])
    rows = []
    for a in (0.0, 0.2, 0.4, 0.6, 0.8):
        est = dispersion_sum(GaussAr1(a), mc)
        rows.append({"a": a, "v": est.mean, "std_err": est.std_err,
                     "lags": est.extras.get("lags", 0)})
    return rows, {"samples": mc.samples, "seed": mc.seed}


def _fig_mimo_vs_r(p):
    t = p["t_antennas"] or 2
    rows = []
    for r in range(t, 33):
        cfg = MimoConfig(t, r, p["sigma2"])
        rows.append({"r": r, "delta_star": mimo_capacity_fdt(cfg),
                     "v": mimo_dispersion_fdt(cfg)})
    return rows, {"t": t, "sigma2": p["sigma2"]}


def _fig_parallel_gaps(p):
    rows = []
    for t in range(1, 17):
        dg, vg, db = mimo_vs_parallel_gaps(t)
        rows.append({"t": t, "delta_gap": dg, "v_gap": vg, "vnr_gap_db": db})
    return rows, {}


def _fig_bdut_3x3(p):
    grid = np.geomspace(0.5, 60.0, 61)
    rows = []
    crossovers = None
    for inv in grid:
        cfg = MimoConfig(3, 3, 1.0 / inv)
        res = bdut_optimize(cfg)
        crossovers = res.crossovers
        rows.append({
            "inv_sigma2": float(inv),
            "t_opt": res.t_opt,
            "delta_bdut": res.delta_star,
            "delta_fdt": mimo_capacity_fdt(cfg),
            "v_bdut": res.v,
            "v_fdt": mimo_dispersion_fdt(cfg),
        })
    meta = {f"crossover_{i+1}": c for i, c in enumerate(crossovers or ())}
    return rows, meta


def _fig_log_chi2_error(p):
    ns = [p["chi2_n"]] if p["chi2_n"] else [2, 10, 100, 1000, 10000]
    rows = []
    for n in ns:
        tv, y_peak, mag = log_chi2_tv_error(int(n))
        rows.append({"n": int(n), "tv_error": tv, "approx_2_3_sqrt_pi_n": 2.0 / (3.0 * math.sqrt(math.pi * n)),
                     "peak_y": y_peak, "peak_magnitude": mag})
    return rows, {}


_FIGURES = {
    "nakagami-dispersion": _fig_nakagami_dispersion,
    "power-constrained-dispersion": _fig_power_constrained,
    "ar1-dispersion": _fig_ar1_dispersion,
    "mimo-vs-r": _fig_mimo_vs_r,
    "parallel-gaps": _fig_parallel_gaps,
    "bdut-3x3": _fig_bdut_3x3,
    "log-chi2-error": _fig_log_chi2_error,
}


@main.command("figures")
@click.argument("name")
@click.option("--n", "chi2_n", type=_count, default=None, help="single n (log-chi2-error)")
@click.option("--t", "t_antennas", type=int, default=None, help="transmit antennas (mimo-vs-r)")
@click.option("--sigma2", type=float, default=0.05, show_default=True)
@mc_options
@io_options
@click.pass_context
def cmd_figures(ctx, name, chi2_n, t_antennas, sigma2, samples, seed, batches, threads,
                fmt, out, config_path):
    """Emit plot data (CSV/JSON) for one named figure; no rendering."""
    _apply_config(ctx, config_path)
    if name not in _FIGURES:
        raise click.UsageError(
            f"unknown figure {name!r}; registry: {', '.join(sorted(_FIGURES))}"
        )
    p = ctx.params
    try:
        rows, meta = _FIGURES[name](p)
    except IcFadingError as exc:
        _fail_compute(exc)
    params = {k: v for k, v in p.items() if k not in ("fmt", "out", "config_path")}
    RunOutput(f"figures:{name}", params, rows, meta).write(p["out"], p["fmt"])


@main.command("exponent")
@click.option("--domain", type=click.Choice(["ic-scalar", "mimo"]), required=True)
@model_options
@click.option("--t", "t_antennas", type=int, default=2, show_default=True)
@click.option("--r", "r_antennas", type=int, default=2, show_default=True)
@click.option("--snr", type=float, default=100.0, show_default=True)
@click.option("--grid", "grid_points", type=int, default=64, show_default=True)
@mc_options
@io_options
@click.pass_context
def cmd_exponent(ctx, domain, fading, nakagami_m, tabulated_csv, sigma2, t_antennas,
                 r_antennas, snr, grid_points, samples, seed, batches, threads,
                 fmt, out, config_path):
    """Error-exponent curves: (x_nats, e_r, rho_star) plus critical/capacity metadata."""
    _apply_config(ctx, config_path)
    p = ctx.params
    try:
        if domain == "ic-scalar":
            model = _build_model(p["fading"], p["nakagami_m"], p["tabulated_csv"])
            curve = ic_exponent_scalar(model, p["sigma2"], grid_points=p["grid_points"])
        else:
            cfg = MimoConfig(p["t_antennas"], p["r_antennas"], p["sigma2"])
            mc = _mc(p["samples"], p["seed"], p["batches"], p["threads"])
            curve = mimo_gallager_exponent(cfg, p["snr"], mc=mc,
                                           grid_points=p["grid_points"])
    except IcFadingError as exc:
        _fail_compute(exc)
    rows = [{"x_nats": x, "e_r": e, "rho_star": r} for x, e, r in curve.rows()]
    meta = {"critical_x": curve.critical_x, "capacity_x": curve.capacity_x}
    params = {k: v for k, v in p.items() if k not in ("fmt", "out", "config_path")}
    RunOutput(f"exponent:{domain}", params, rows, meta).write(p["out"], p["fmt"])


@main.command("verify")
@click.option("--fast", is_flag=True, help="reduced sample counts (sanity run)")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
def cmd_verify(fast, out, fmt):
    """Run the acceptance suite and print a pass/fail table."""
    from .acceptance import run_all

    results = run_all(fast=fast)
    width = max(len(r.name) for r in results)
    ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        ok = ok and r.passed
        click.echo(f"[{status}] {r.name:<{width}}  {r.detail}")
    click.echo(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    if out:
        rows = [{"criterion": r.name, "passed": r.passed, "detail": r.detail,
                 "seconds": r.seconds} for r in results]
        RunOutput("verify", {"fast": fast}, rows, {}).write(out, fmt)
    if not ok:
        sys.exit(EXIT_COMPUTE_FAILURE)


if __name__ == "__main__":
    main()
