"""Command-line front end.

Subcommands::

    nonreciprocal spectrum  [options]        eigen-analysis as JSON
    nonreciprocal evolve    [options]        trajectory as long-format CSV/JSON
    nonreciprocal scan --axis gamma|t_r|beta --values v1,v2,...  [options]
    nonreciprocal figure <preset> [options]  evolve with a figure preset

A scenario is assembled from ``--preset`` (or the ``figure`` argument),
then ``--config FILE``, then individual flags, later sources winning.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import dynamics, model, numkernel, spectral
from .scenario import (
    EXP_WINDOW,
    PRESETS,
    POWER_WINDOW,
    ConfigError,
    ScenarioConfig,
    config_from_mapping,
    load_mapping,
    parse_initial,
)

log = logging.getLogger("nonreciprocal")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
SCAN_AXES = {"gamma": "gamma", "t_r": "t_r", "tr": "t_r", "beta": "beta"}
SCAN_COLUMNS = ("max_growth_rate", "defective", "fitted_rate", "power_exponent",
                "peak_time", "peak_value")

_NUMERIC_ERRORS = (
    dynamics.AmplitudeOverflowError,
    numkernel.ConvergenceError,
    numkernel.ExpmOverflowError,
    numkernel.SingularMatrixError,
)


def _fmt(x) -> str:
    # + 0.0 folds -0.0 into 0.0
    return format(float(x) + 0.0, ".17g")


def _json_float(x):
    x = float(x)
    return x if math.isfinite(x) else None


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        write_atomic(path, text)


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def spectrum_document(spec: model.HamiltonianSpec) -> dict:
    """Eigenvalues, structural predicates and growth rate for ``spec``."""
    h = model.build(spec)
    sd = spectral.analyze(h)

    eta_kind, pseudo = None, None
    try:
        eta = model.gauge_metric(spec)
        eta_kind = "gauge"
    except ValueError:
        eta = np.eye(spec.dim) if model.is_hermitian(h) else None
        eta_kind = "identity" if eta is not None else None
    if eta is not None:
        pseudo = model.check_pseudo_hermitian(h, eta)

    return {
        "spec": spec.to_dict(),
        "n": spec.dim,
        "eigenvalues": [{"re": float(z.real), "im": float(z.imag)} for z in sd.eigenvalues],
        "defective": bool(sd.defective),
        "eigvec_condition": _json_float(sd.eigvec_condition),
        "predicates": {
            "hermitian": model.is_hermitian(h),
            "normal": model.is_normal(h),
            "pseudo_hermitian": pseudo,
            "pseudo_hermitian_metric": eta_kind,
            "spectrum_is_real": spectral.spectrum_is_real(sd),
        },
        "max_growth_rate": spectral.max_growth_rate(sd),
    }


def cmd_spectrum(config: ScenarioConfig) -> str:
    return json.dumps(spectrum_document(config.model), indent=2) + "\n"


# ---------------------------------------------------------------------------
# evolve
# ---------------------------------------------------------------------------

def run_trajectory(config: ScenarioConfig, t_max: float | None = None,
                   method: str | None = None) -> dynamics.StateTrajectory:
    h = model.build(config.model)
    times = dynamics.time_grid(t_max if t_max is not None else config.t_max, config.dt)
    psi0 = config.initial_state()
    method = method or config.method
    if config.needs_left:
        return dynamics.propagate_pair(h, psi0, psi0, times, method, spec=config.model)
    return dynamics.propagate(h, psi0, times, method, spec=config.model)


def select_series(obs: dynamics.ObservableSeries, name: str) -> np.ndarray:
    base, _, site = name.partition(":")
    if base == "norm":
        return obs.euclidean_norm
    if base == "left_norm" and obs.left_norm is not None:
        return obs.left_norm
    if base == "bi_norm" and obs.bi_norm is not None:
        return obs.bi_norm.real
    matrix = {"abs_x": obs.per_site_amplitude, "abs_y": obs.left_amplitude}.get(base)
    if matrix is not None and site.isdigit() and 1 <= int(site) <= matrix.shape[1]:
        return matrix[:, int(site) - 1]
    raise ConfigError("fits.series", f"series {name!r} is not available for this run")


def run_fits(config: ScenarioConfig, obs: dynamics.ObservableSeries) -> list[dict]:
    results = []
    for fit in config.fits:
        series = select_series(obs, fit.series)
        func = dynamics.fit_exponential_rate if fit.kind == "exp" else dynamics.fit_power_exponent
        try:
            value = func(obs.times, series, fit.window)
            error = None
        except ValueError as exc:
            value, error = math.nan, str(exc)
        entry = {"series": fit.series, "kind": fit.kind, "window": list(fit.window),
                 "value": _json_float(value)}
        if error:
            entry["error"] = error
        results.append(entry)
    return results


def evolution_csv(config: ScenarioConfig, traj: dynamics.StateTrajectory,
                  obs: dynamics.ObservableSeries) -> str:
    """Long-format table, one row per (t, j)."""
    left = traj.phi is not None and bool({"left"} & config.observe)
    bi = traj.phi is not None and bool({"biorthogonal", "signed_log"} & config.observe)
    slog = traj.phi is not None and "signed_log" in config.observe
    header = ["t", "j", "re_x", "im_x", "abs_x"]
    if left:
        header += ["re_y", "im_y", "abs_y"]
    if bi:
        header += ["re_yx", "im_yx"]
    header.append("norm_euclid")
    if bi:
        header.append("bi_norm")
    if left:
        header.append("norm_left")
    if slog:
        header.append("slog_yx")

    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    n = traj.psi.shape[1]
    for k, t in enumerate(obs.times):
        ts = _fmt(t)
        norm = _fmt(obs.euclidean_norm[k])
        for j in range(n):
            x = traj.psi[k, j]
            row = [ts, str(j + 1), _fmt(x.real), _fmt(x.imag), _fmt(obs.per_site_amplitude[k, j])]
            if left:
                y = traj.phi[k, j]
                row += [_fmt(y.real), _fmt(y.imag), _fmt(obs.left_amplitude[k, j])]
            if bi:
                yx = obs.bi_overlap[k, j]
                row += [_fmt(yx.real), _fmt(yx.imag)]
            row.append(norm)
            if bi:
                row.append(_fmt(obs.bi_norm[k].real))
            if left:
                row.append(_fmt(obs.left_norm[k]))
            if slog:
                row.append(_fmt(obs.signed_log_overlap[k, j]))
            buf.write(",".join(row) + "\n")
    return buf.getvalue()


def evolution_json(config: ScenarioConfig, traj: dynamics.StateTrajectory,
                   obs: dynamics.ObservableSeries, fits: list[dict]) -> str:
    def cplx(a):
        return {"re": np.real(a).tolist(), "im": np.imag(a).tolist()}

    doc = {
        "scenario": config.describe(),
        "times": obs.times.tolist(),
        "psi": cplx(traj.psi),
        "norm_euclid": obs.euclidean_norm.tolist(),
    }
    if traj.phi is not None:
        doc["phi"] = cplx(traj.phi)
        doc["norm_left"] = obs.left_norm.tolist()
        doc["bi_overlap"] = cplx(obs.bi_overlap)
        doc["bi_norm"] = cplx(obs.bi_norm)
        if "signed_log" in config.observe:
            # NaN marks exact zeros
            doc["signed_log_overlap"] = [[_json_float(v) for v in row] for row in obs.signed_log_overlap]
    if fits:
        doc["fits"] = fits
    return json.dumps(doc) + "\n"


def cmd_evolve(config: ScenarioConfig) -> tuple[str, list[dict]]:
    """Return the rendered output and the fit results."""
    traj = run_trajectory(config)
    obs = dynamics.observables(traj)
    fits = run_fits(config, obs)
    if config.format == "json":
        return evolution_json(config, traj, obs, fits), fits
    return evolution_csv(config, traj, obs), fits


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

def _safe(func, *args):
    try:
        return func(*args)
    except ValueError:
        return math.nan


def scan_point(config: ScenarioConfig, axis: str, value: float,
               exp_window=EXP_WINDOW, power_window=POWER_WINDOW) -> dict:
    spec = config.model.replace(**{axis: value})
    point = config.replace(model=spec)
    sd = spectral.analyze(model.build(spec))
    traj = run_trajectory(point.replace(observe=frozenset({"right"})))
    obs = dynamics.observables(traj)
    norm = obs.euclidean_norm
    peak_t, peak_v = dynamics.peak_transient(obs.times, norm)
    return {
        axis: value,
        "max_growth_rate": spectral.max_growth_rate(sd),
        "defective": int(sd.defective),
        "fitted_rate": _safe(dynamics.fit_exponential_rate, obs.times, norm, exp_window),
        "power_exponent": _safe(dynamics.fit_power_exponent, obs.times, norm, power_window),
        "peak_time": peak_t,
        "peak_value": peak_v,
    }


def _scan_task(args):
    return scan_point(*args)


def cmd_scan(config: ScenarioConfig, axis: str, values, jobs: int = 1,
             exp_window=EXP_WINDOW, power_window=POWER_WINDOW) -> tuple[str, list[dict]]:
    if axis not in SCAN_AXES:
        raise ConfigError("axis", f"must be one of {sorted(set(SCAN_AXES.values()))}")
    axis = SCAN_AXES[axis]
    if config.model.family != "chain":
        raise ConfigError("axis", "scans run on the chain family")
    values = [float(v) for v in values]
    if len(values) < 2:
        raise ConfigError("values", "a scan needs at least two points")
    for v in values:
        try:
            config.model.replace(**{axis: v})
        except ValueError as exc:
            raise ConfigError("values", str(exc)) from None

    tasks = [(config, axis, v, exp_window, power_window) for v in values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            rows = list(pool.map(_scan_task, tasks))
    else:
        rows = [_scan_task(t) for t in tasks]

    header = (axis,) + SCAN_COLUMNS
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(row[c]) if c == "defective" else _fmt(row[c]) for c in header))
    return "\n".join(lines) + "\n", rows


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}") from None
    return lo, hi


def _add_common(p: argparse.ArgumentParser, with_preset: bool = True) -> None:
    if with_preset:
        p.add_argument("--preset", choices=sorted(PRESETS), help="start from a figure preset")
    p.add_argument("--config", help="YAML scenario file")
    p.add_argument("--model", dest="family", choices=model.FAMILIES)
    p.add_argument("--n", type=int)
    p.add_argument("--tl", dest="t_l", type=float)
    p.add_argument("--tr", dest="t_r", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma0", type=float, help="pt2 net loss")
    p.add_argument("--g", type=float, help="pt2 gain/loss contrast")
    p.add_argument("--c", type=float, help="pt2 coupling")
    p.add_argument("--init", help="site:<k> or vec:<z1>,<z2>,...")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--method", choices=dynamics.METHODS)
    p.add_argument("--observe", help="comma list of right,left,biorthogonal,signed_log")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nonreciprocal",
        description="Spectra and time evolution of nonreciprocal non-Hermitian chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("spectrum", help="eigen-analysis as JSON"))
    _add_common(sub.add_parser("evolve", help="propagate a state, write CSV/JSON"))

    scan = sub.add_parser("scan", help="sweep gamma, t_r or beta")
    _add_common(scan)
    scan.add_argument("--axis", required=True)
    scan.add_argument("--values", required=True, help="comma-separated axis values")
    scan.add_argument("--exp-window", type=_window, default=EXP_WINDOW)
    scan.add_argument("--power-window", type=_window, default=POWER_WINDOW)

    fig = sub.add_parser("figure", help="run a figure preset")
    fig.add_argument("preset", choices=sorted(PRESETS))
    _add_common(fig, with_preset=False)
    return parser


def resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    preset = getattr(args, "preset", None)
    config = PRESETS[preset] if preset else ScenarioConfig()
    if args.config:
        config = config_from_mapping(load_mapping(args.config), config)

    overrides: dict = {}
    model_keys = ("family", "n", "t_l", "t_r", "gamma", "beta", "gamma0", "g", "c")
    model_over = {k: getattr(args, k) for k in model_keys if getattr(args, k) is not None}
    if model_over:
        overrides["model"] = model_over
    if args.init is not None:
        init = parse_initial(args.init)
        if isinstance(init, int):
            overrides["initial_site"] = init
        else:
            overrides["initial_state"] = [[z.real, z.imag] for z in init]
    for key in ("t_max", "dt", "method", "observe"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    out = {}
    if args.out is not None:
        out["path"] = args.out
    if args.format is not None:
        out["format"] = args.format
    if out:
        overrides["output"] = out
    return config_from_mapping(overrides, config) if overrides else config


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        if args.jobs < 1:
            raise ConfigError("jobs", "must be at least 1")

        if args.command == "spectrum":
            _emit(cmd_spectrum(config), config.output)
        elif args.command == "scan":
            text, _ = cmd_scan(config, args.axis, args.values.split(","), args.jobs,
                               args.exp_window, args.power_window)
            _emit(text, config.output)
        else:
            if args.command == "figure" and config.output is None:
                config = config.replace(output=f"{args.preset}.{config.format}")
            text, fits = cmd_evolve(config)
            _emit(text, config.output)
            if fits:
                stream = sys.stderr if config.output in (None, "-") else sys.stdout
                stream.write(json.dumps({"fits": fits}) + "\n")
            log.info("wrote %s", config.output or "<stdout>")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
