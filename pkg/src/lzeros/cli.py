"""Command-line pipelines: model -> quench -> envelope -> zeros -> comparison.

    lzeros quench|envelope|zeros|compare|gaussian|twoband|heatmap
           --config run.toml [--out DIR] [--seed N] [--mirror-beta]

Configs are TOML (JSON accepted).  Every command writes machine-readable
CSV/JSON plus optional SVG figures into the output directory, along with a
run_report.json carrying diagnostics, checksums, and timing.  Identical
config and seed produce byte-identical data files.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .amplitude import EnergyDistribution, ipr
from .envelope import (Envelope, approximate_zeros, compute_envelope, diagnostics,
                       local_period, monotonicity_check)
from .errors import ConfigError, LzerosError, NonConvergent
from .gaussian import (GaussianSpec, UnboundedAmplitude, build_distribution,
                       delta_center, theta_decay, unbounded_zeros, zero_trajectories)
from .io import (load_config, sha256_file, validate_report, write_delta_eta_csv,
                 write_distribution_csv, write_envelope_json, write_json,
                 write_modes_csv, write_polylines_csv, write_zeroset_csv,
                 write_zeroset_json)
from .spin_models import IsingSpec, mean_energy_shift, quench
from .twoband import (FactorizedAmplitude, bcs_envelope, bcs_populations, bcs_zeros,
                      ising_modes, xy_modes)
from .zerofinder import BoxGrid, SearchWindow, ZeroSet, delta_eta, edge_strip, find_zeros


@dataclass
class ModelBundle:
    """Everything a pipeline needs about the configured model."""

    dist: EnergyDistribution
    evaluator: object
    kind: str
    extras: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)


def _require(cfg: dict, section: str) -> dict:
    if section not in cfg or not isinstance(cfg[section], dict):
        raise ConfigError(f"missing [{section}] section")
    return cfg[section]


def _get(section: dict, key, cast=None, default=KeyError):
    if key not in section:
        if default is KeyError:
            raise ConfigError(f"missing config key {key!r}")
        return default
    val = section[key]
    try:
        return cast(val) if cast else val
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {val!r}") from exc


def build_window(cfg: dict, seed_override=None) -> SearchWindow:
    w = _require(cfg, "window")
    seed = seed_override if seed_override is not None else _get(w, "seed", int, 0)
    try:
        return SearchWindow(
            beta_min=_get(w, "beta_min", float),
            beta_max=_get(w, "beta_max", float),
            t_min=_get(w, "t_min", float),
            t_max=_get(w, "t_max", float),
            grid_k=_get(w, "grid_k", int, 4),
            winding_threshold=_get(w, "winding_threshold", float, 0.2),
            target_resolution=_get(w, "target_resolution", float, None),
            seed=int(seed),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_model(cfg: dict, config_dir: Path | None = None) -> ModelBundle:
    m = _require(cfg, "model")
    name = _get(m, "model", str)
    config_dir = Path(cfg.get("__config_dir__", config_dir or "."))

    if name == "ising":
        alpha = m.get("alpha", 0.0)
        alpha = math.inf if alpha in ("inf", "nn") else float(alpha)
        if math.isinf(alpha):
            name = "ising_nn"  # exact free-fermion route
        else:
            spec_kw = dict(N=_get(m, "N", int), alpha=alpha,
                           sector=_get(m, "sector", str, "even_parity"),
                           units=_get(m, "units", str, None))
            try:
                si = IsingSpec(h=_get(m, "h_i", float), **spec_kw)
                sf = IsingSpec(h=_get(m, "h_f", float), **spec_kw)
                qr = quench(si, sf)
            except (ValueError, LzerosError) as exc:
                if isinstance(exc, NonConvergent):
                    raise
                raise ConfigError(str(exc)) from exc
            dist = qr.to_distribution()
            predicted, actual = mean_energy_shift(qr)
            info = {"mean_energy": qr.mean_energy,
                    "mean_energy_predicted": predicted,
                    "mean_energy_identity_gap": abs(predicted - actual),
                    "esqpt_energy": qr.esqpt_energy,
                    "units": sf.units, "sector": sf.sector}
            return ModelBundle(dist, dist, "ising", {"quench": qr}, info)

    if name == "ising_nn":
        tq = ising_modes(_get(m, "N", int), _get(m, "h_i", float), _get(m, "h_f", float))
        dist = bcs_populations(tq)
        return ModelBundle(dist, FactorizedAmplitude(tq), "twoband",
                           {"twoband": tq}, {"model": "ising_nn", "params": tq.params})

    if name == "xy":
        tq = xy_modes(_get(m, "N", int), _get(m, "gamma_i", float),
                      _get(m, "h_i", float), _get(m, "gamma_f", float),
                      _get(m, "h_f", float))
        dist = bcs_populations(tq)
        return ModelBundle(dist, FactorizedAmplitude(tq), "twoband",
                           {"twoband": tq},
                           {"model": "xy", "params": tq.params,
                            "axis_crossings": list(tq.axis_crossings)})

    if name == "gaussian":
        try:
            spec = GaussianSpec(delta=_get(m, "delta", float),
                                epsilon=_get(m, "epsilon", float),
                                sigma=_get(m, "sigma", float),
                                mu=_get(m, "mu", float, 0.0),
                                j_min=_get(m, "j_min", int),
                                j_max=_get(m, "j_max", int),
                                e_gs=_get(m, "e_gs", float, 0.0))
            dist = build_distribution(spec)
        except (ValueError, LzerosError) as exc:
            raise ConfigError(str(exc)) from exc
        return ModelBundle(dist, dist, "gaussian", {"spec": spec},
                           {"model": "gaussian"})

    if name == "custom":
        from .io import read_distribution_csv

        path = Path(_get(m, "path", str))
        if not path.is_absolute():
            path = config_dir / path
        dist = read_distribution_csv(path)
        return ModelBundle(dist, dist, "custom", {}, {"source": str(path)})

    raise ConfigError(f"unknown model {name!r}")


class _Emitter:
    """Collects written files and their checksums for the run report."""

    def __init__(self, outdir: Path, formats):
        self.outdir = outdir
        self.formats = set(formats)
        self.files = []
        outdir.mkdir(parents=True, exist_ok=True)

    def want(self, fmt: str) -> bool:
        return fmt in self.formats

    def path(self, name: str) -> Path:
        return self.outdir / name

    def record(self, path: Path):
        self.files.append({"name": path.name, "sha256": sha256_file(path),
                           "bytes": path.stat().st_size})

    def write(self, name: str, writer, *args):
        p = self.path(name)
        writer(*args, p)
        self.record(p)


def _envelope_or_none(dist: EnergyDistribution):
    if len(dist) < 2:
        return None
    return compute_envelope(dist)


def _analytic_for(bundle: ModelBundle, window: SearchWindow):
    if bundle.kind == "twoband":
        tq = bundle.extras["twoband"]
        eps_max = max(m.eps_f for m in tq.modes)
        n_hi = int(np.ceil(window.t_max * eps_max / math.pi)) + 1
        zs = bcs_zeros(tq, range(-n_hi, n_hi + 1))
        zs.zeros = [z for z in zs if window.contains(z.beta, z.t)]
        return zs.sort()
    if bundle.kind == "gaussian":
        spec = bundle.extras["spec"]
        try:
            return unbounded_zeros(spec, window)
        except LzerosError:
            return None
    return None


def _base_diagnostics(bundle: ModelBundle, env: Envelope | None):
    diag = dict(bundle.info)
    diag["levels"] = len(bundle.dist)
    diag["ipr"] = ipr(bundle.dist)
    diag["dropped_weight"] = bundle.dist.dropped_weight
    if len(bundle.dist) >= 2:
        lo, hi = edge_strip(bundle.dist)
        diag["edge_strip"] = [lo, hi]
    if env is None:
        diag["trivial_envelope"] = True
    else:
        d = diagnostics(env)
        diag.update(ratio_R=d.ratio_R, max_population_index=d.max_index,
                    multilevel_at_axis=d.multilevel_at_axis,
                    monotonicity_ok=monotonicity_check(env),
                    segment_count=len(env.segments), group_count=len(env.groups))
    return diag


def _finish(emit: _Emitter, command, cfg, seed, window, diag, t0):
    report = {
        "command": command,
        "version": __version__,
        "seed": int(seed if seed is not None else cfg.get("window", {}).get("seed", 0)),
        "config": {k: v for k, v in cfg.items() if not k.startswith("__")},
        "window": None if window is None else {
            "beta_min": window.beta_min, "beta_max": window.beta_max,
            "t_min": window.t_min, "t_max": window.t_max,
            "target_resolution": window.resolution,
        },
        "diagnostics": diag,
        "files": sorted(emit.files, key=lambda f: f["name"]),
        "timing_s": time.perf_counter() - t0,
    }
    validate_report(report)
    write_json(report, emit.path("run_report.json"))
    return report


def _emit_zeroset(emit: _Emitter, stem: str, zs: ZeroSet):
    if emit.want("csv"):
        emit.write(f"{stem}.csv", write_zeroset_csv, zs)
    if emit.want("json"):
        emit.write(f"{stem}.json", write_zeroset_json, zs)


def _emit_common(emit: _Emitter, bundle: ModelBundle, env):
    if emit.want("csv"):
        emit.write("distribution.csv", write_distribution_csv, bundle.dist)
    if env is not None and emit.want("json"):
        emit.write("envelope.json", write_envelope_json, env)


def _maybe_heatmap(emit: _Emitter, bundle, window, zero_sets, mirror):
    if not emit.want("svg"):
        return
    from .figures import render_heatmap

    p = emit.path("heatmap.svg")
    render_heatmap(bundle.evaluator, window, zero_sets, p, mirror_beta=mirror)
    emit.record(p)


# ------------------------------------------------------------------- commands

def cmd_quench(cfg, outdir, seed, mirror):
    t0 = time.perf_counter()
    emit = _Emitter(outdir, cfg.get("outputs", {}).get("formats", ["csv", "json", "svg"]))
    bundle = build_model(cfg)
    window = build_window(cfg, seed)
    env = _envelope_or_none(bundle.dist)

    exact = find_zeros(bundle.evaluator, window)
    approx = approximate_zeros(env, window) if env is not None else ZeroSet()
    analytic = _analytic_for(bundle, window)

    _emit_common(emit, bundle, env)
    _emit_zeroset(emit, "zeros_exact", exact)
    _emit_zeroset(emit, "zeros_approximate", approx)
    if analytic is not None:
        _emit_zeroset(emit, "zeros_analytic", analytic)
    if bundle.kind == "twoband" and emit.want("csv"):
        emit.write("modes.csv", write_modes_csv, bundle.extras["twoband"])
    if bundle.kind == "ising" and emit.want("json"):
        qr = bundle.extras["quench"]
        sidecar = {
            "spec_initial": {"N": qr.spec_initial.N, "h": qr.spec_initial.h,
                             "alpha": qr.spec_initial.alpha,
                             "sector": qr.spec_initial.sector,
                             "units": qr.spec_initial.units},
            "spec_final": {"N": qr.spec_final.N, "h": qr.spec_final.h,
                           "alpha": qr.spec_final.alpha,
                           "sector": qr.spec_final.sector,
                           "units": qr.spec_final.units},
            "mean_energy": qr.mean_energy,
            "esqpt_energy": qr.esqpt_energy,
        }
        emit.write("quench_result.json", write_json, sidecar)

    diag = _base_diagnostics(bundle, env)
    diag.update(exact_zeros=exact.total_multiplicity,
                approximate_zeros=approx.total_multiplicity)
    sets = {"exact": exact, "approximate": approx}
    if analytic is not None:
        sets["analytic"] = analytic
    _maybe_heatmap(emit, bundle, window, sets, mirror)
    return _finish(emit, "quench", cfg, seed, window, diag, t0)


def cmd_envelope(cfg, outdir, seed, mirror):
    t0 = time.perf_counter()
    emit = _Emitter(outdir, cfg.get("outputs", {}).get("formats", ["csv", "json"]))
    bundle = build_model(cfg)
    env = _envelope_or_none(bundle.dist)
    _emit_common(emit, bundle, env)
    diag = _base_diagnostics(bundle, env)
    return _finish(emit, "envelope", cfg, seed, None, diag, t0)


def cmd_zeros(cfg, outdir, seed, mirror):
    t0 = time.perf_counter()
    emit = _Emitter(outdir, cfg.get("outputs", {}).get("formats", ["csv", "json"]))
    bundle = build_model(cfg)
    window = build_window(cfg, seed)
    exact = find_zeros(bundle.evaluator, window)
    _emit_zeroset(emit, "zeros_exact", exact)
    diag = {"exact_zeros": exact.total_multiplicity}
    return _finish(emit, "zeros", cfg, seed, window, diag, t0)


def cmd_compare(cfg, outdir, seed, mirror):
    t0 = time.perf_counter()
    emit = _Emitter(outdir, cfg.get("outputs", {}).get("formats", ["csv", "json", "svg"]))
    bundle = build_model(cfg)
    window = build_window(cfg, seed)
    env = _envelope_or_none(bundle.dist)
    if env is None:
        raise ConfigError("comparison needs a non-trivial envelope (>= 2 levels)")

    comp = cfg.get("compare", {})
    mode = _get(comp, "height_mode", str, "local_spacing")
    if mode == "fixed":
        height = _get(comp, "height", float)
    elif mode == "local_spacing":
        height = local_period(env)
    else:
        raise ConfigError(f"unknown height_mode {mode!r}")
    widths = [float(w) for w in _get(comp, "widths", list, [1.0])]
    n_boxes = _get(comp, "n_boxes", int, 6)
    t_start = _get(comp, "t_start", float, window.t_min)
    beta_center = _get(comp, "beta_center", float, 0.0)

    exact = find_zeros(bundle.evaluator, window)
    approx = approximate_zeros(env, window)
    rows_by_width = {}
    for w in widths:
        grid = BoxGrid.along_time_axis(t_start, n_boxes, height, w, beta_center)
        rows_by_width[w] = delta_eta(exact, approx, grid)

    _emit_zeroset(emit, "zeros_exact", exact)
    _emit_zeroset(emit, "zeros_approximate", approx)
    if emit.want("csv"):
        emit.write("delta_eta.csv", write_delta_eta_csv, rows_by_width)
    if emit.want("svg"):
        from .figures import render_delta_eta

        p = emit.path("compare.svg")
        render_delta_eta(rows_by_width, p)
        emit.record(p)

    diag = _base_diagnostics(bundle, env)
    diag.update(box_height=height, widths=widths, n_boxes=n_boxes,
                exact_zeros=exact.total_multiplicity,
                approximate_zeros=approx.total_multiplicity)
    return _finish(emit, "compare", cfg, seed, window, diag, t0)


def cmd_heatmap(cfg, outdir, seed, mirror):
    t0 = time.perf_counter()
    emit = _Emitter(outdir, ["svg"])
    bundle = build_model(cfg)
    window = build_window(cfg, seed)
    _maybe_heatmap(emit, bundle, window, {}, mirror)
    return _finish(emit, "heatmap", cfg, seed, window, {}, t0)


def cmd_gaussian(cfg, outdir, seed, mirror):
    t0 = time.perf_counter()
    emit = _Emitter(outdir, cfg.get("outputs", {}).get("formats", ["csv", "json", "svg"]))
    bundle = build_model(cfg)
    if bundle.kind != "gaussian":
        raise ConfigError("the gaussian command needs model = 'gaussian'")
    spec: GaussianSpec = bundle.extras["spec"]
    window = build_window(cfg, seed)
    env = _envelope_or_none(bundle.dist)

    exact = find_zeros(bundle.dist, window)
    analytic = unbounded_zeros(spec, window)

    _emit_common(emit, bundle, env)
    _emit_zeroset(emit, "zeros_exact", exact)
    _emit_zeroset(emit, "zeros_unbounded", analytic)
    if emit.want("csv"):
        emit.write("zero_curves.csv", write_polylines_csv,
                   [c for _n, c in analytic.meta.get("curves", [])])

    # decay/crossover table along the real-time axis
    if emit.want("csv"):
        from .io import write_decay_csv

        ts = np.linspace(window.t_min, window.t_max, 400)
        amp = UnboundedAmplitude(spec)
        lm, _ = amp.log_amplitude(1j * ts)
        dec = np.array([theta_decay(spec, complex(0.0, t)) for t in ts])
        emit.write("decay_crossover.csv", write_decay_csv, ts, np.exp(lm), dec)

    # first-order trajectories seeded by the eps = 0 zeros of the first period
    spec0 = GaussianSpec(delta=spec.delta, epsilon=0.0, sigma=spec.sigma,
                         mu=spec.mu, j_min=spec.j_min, j_max=spec.j_max,
                         e_gs=spec.e_gs)
    d0 = build_distribution(spec0)
    lo, hi = edge_strip(d0)
    period = 2 * math.pi / spec.delta
    seed_win = SearchWindow(lo - 0.5, hi + 0.5, window.t_min,
                            min(window.t_min + period, window.t_max),
                            target_resolution=1e-6, seed=window.seed)
    seeds = find_zeros(d0, seed_win)
    n_max = max(1, int(np.floor((window.t_max - window.t_min) / period)))
    trajs = zero_trajectories(spec, [z.z for z in seeds], range(n_max))
    if emit.want("csv"):
        emit.write("trajectories.csv", write_polylines_csv, trajs)
    if emit.want("svg"):
        from .figures import render_polylines

        p = emit.path("trajectories.svg")
        render_polylines(trajs, p, points=exact.points)
        emit.record(p)

    diag = _base_diagnostics(bundle, env)
    diag.update(exact_zeros=exact.total_multiplicity,
                unbounded_zeros=analytic.total_multiplicity,
                delta_center_axis=delta_center(spec, 0.0),
                trajectory_seeds=len(seeds))
    _maybe_heatmap(emit, bundle, window, {"exact": exact, "analytic": analytic}, mirror)
    return _finish(emit, "gaussian", cfg, seed, window, diag, t0)


def cmd_twoband(cfg, outdir, seed, mirror):
    t0 = time.perf_counter()
    emit = _Emitter(outdir, cfg.get("outputs", {}).get("formats", ["csv", "json", "svg"]))
    bundle = build_model(cfg)
    if bundle.kind != "twoband":
        raise ConfigError("the twoband command needs model = 'ising_nn' or 'xy'")
    tq = bundle.extras["twoband"]
    window = build_window(cfg, seed)

    env = bcs_envelope(tq)
    exact = find_zeros(bundle.evaluator, window)
    approx = approximate_zeros(env, window)
    analytic = _analytic_for(bundle, window)

    _emit_common(emit, bundle, env)
    if emit.want("csv"):
        emit.write("modes.csv", write_modes_csv, tq)
    _emit_zeroset(emit, "zeros_exact", exact)
    _emit_zeroset(emit, "zeros_approximate", approx)
    _emit_zeroset(emit, "zeros_analytic", analytic)

    diag = _base_diagnostics(bundle, env)
    diag.update(exact_zeros=exact.total_multiplicity,
                approximate_zeros=approx.total_multiplicity,
                analytic_zeros=analytic.total_multiplicity)
    _maybe_heatmap(emit, bundle, window,
                   {"exact": exact, "approximate": approx, "analytic": analytic},
                   mirror)
    return _finish(emit, "twoband", cfg, seed, window, diag, t0)


_COMMANDS = {
    "quench": cmd_quench,
    "envelope": cmd_envelope,
    "zeros": cmd_zeros,
    "compare": cmd_compare,
    "gaussian": cmd_gaussian,
    "twoband": cmd_twoband,
    "heatmap": cmd_heatmap,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lzeros", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="TOML or JSON run config")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override window seed")
    parser.add_argument("--mirror-beta", action="store_true",
                        help="flip the beta axis in figures")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        cfg["__config_dir__"] = str(Path(args.config).resolve().parent)
        outdir = Path(args.out or cfg.get("outputs", {}).get("directory", "out"))
        mirror = args.mirror_beta or bool(cfg.get("outputs", {}).get("mirror_beta", False))
        report = _COMMANDS[args.command](cfg, outdir, args.seed, mirror)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonConvergent as exc:
        print(f"non-convergent: {exc} (rect={exc.rect})", file=sys.stderr)
        return 3
    print(f"{args.command}: wrote {len(report['files'])} files to {outdir} "
          f"in {report['timing_s']:.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
