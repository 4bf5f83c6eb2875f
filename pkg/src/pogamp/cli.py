"""Command-line front end: ``pogamp {simulate,fit,predict,diagnose} --config run.yaml``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import load_config
from .diagnostics import summarize
from .errors import ConfigError
from .estimators import marginal_density_table
from .geometry import as_locations
from .io import load_dataset, load_latent, read_trace, save_latent, write_table, write_trace
from .mcmc import ChainOutput, initial_state, make_state, run_gibbs
from .model import PogampModel, simulate_replicates
from .nngp import build_index
from .predict import functional_estimate, integrand, predictive_samples, predictive_summary

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _out_dir(cfg):
    path = Path(cfg.io.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _chain_seeds(seed, chains):
    return np.random.SeedSequence(seed).spawn(chains)


def _model(cfg):
    domain = cfg.model.domain.build()
    kernel = cfg.model.kernel.build()
    return PogampModel(domain, kernel, cfg.model.build_f(kernel), cfg.model.intensity.build())


def cmd_simulate(cfg, seed, threads):
    model = _model(cfg)
    sim = cfg.simulate
    sites = as_locations(sim.sites) if sim.sites else model.domain.center[None, :]
    if not np.all(model.domain.contains(sites)):
        raise ConfigError("simulate.sites must lie inside the domain")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    counts, values = simulate_replicates(rng, model, sites, sim.replicates)
    out = _out_dir(cfg)
    table = {"replicate": np.arange(sim.replicates), "n_events": counts}
    table.update({f"y{i}": values[:, i] for i in range(values.shape[1])})
    write_table(out / "simulate_draws.csv", table)
    lambdas = sim.lambdas or [model.intensity.rate if model.intensity.kind == "homogeneous" else 1.0]
    grid = np.linspace(sim.grid.low, sim.grid.high, sim.grid.points)
    dens = marginal_density_table(rng, model, lambdas, sites[:1], sim.density_replicates, grid)
    write_table(out / "density_grid.csv", dens)


def _fit_chain(args):
    cfg, data, seq = args
    domain = cfg.model.domain.build()
    priors = cfg.model.priors.build()
    scfg = cfg.mcmc.build()
    f_init = {"alpha": cfg.model.f.alpha}
    if cfg.model.f.nu is not None:
        f_init["nu"] = cfg.model.f.nu
    if cfg.model.f.kernel is not None:
        f_init.update({"f_" + k: v for k, v in cfg.model.f.kernel.values().items()})
    intensity = None
    if cfg.model.intensity.kind == "parametric":
        intensity = cfg.model.intensity.build()
    state = initial_state(
        domain, data.obs_locs, data.y_o, cfg.model.kernel.family, cfg.model.f.family, priors, scfg,
        kernel_init=cfg.model.kernel.values(), f_init=f_init, intensity=intensity,
    )
    return run_gibbs(np.random.default_rng(seq), state, priors, scfg)


def cmd_fit(cfg, seed, threads):
    if cfg.io.data is None:
        raise ConfigError("io.data is required for fit")
    data = load_dataset(cfg.io.data, cfg.model.domain.build())
    seqs = _chain_seeds(seed, cfg.mcmc.chains)
    jobs = [(cfg, data, s) for s in seqs]
    workers = max(1, min(threads or cfg.mcmc.chains, cfg.mcmc.chains))
    if workers == 1:
        chains = [_fit_chain(j) for j in jobs]
    else:
        with ThreadPoolExecutor(workers) as pool:
            chains = list(pool.map(_fit_chain, jobs))
    out = _out_dir(cfg)
    for c, chain in enumerate(chains):
        write_trace(out / f"trace_chain{c}.csv", chain.columns, chain.trace)
        save_latent(out / f"latent_chain{c}.npz", chain)
    diag = {
        "chains": len(chains),
        "acceptance": [chain.acceptance_rates() for chain in chains],
        "n_events": [
            {"mean": float(chain.column("n_events").mean()) if len(chain) else None,
             "trajectory": chain.column("n_events").astype(int).tolist()}
            for chain in chains
        ],
        "parameters": summarize(chains[0].columns, [c.trace for c in chains]) if len(chains[0]) >= 4 else {},
    }
    with open(out / "diagnostics.json", "w", encoding="utf-8") as fh:
        json.dump(diag, fh, indent=2, sort_keys=True, allow_nan=False, default=_json_default)


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _trace_paths(out):
    paths = sorted(out.glob("trace_chain*.csv"), key=lambda p: int(p.stem.removeprefix("trace_chain")))
    if not paths:
        raise FileNotFoundError(f"no trace files in {out}; run fit first")
    return paths


def load_chains(cfg):
    """Rebuild chain outputs from the trace and latent files written by ``fit``."""
    out = Path(cfg.io.output_dir)
    data = load_dataset(cfg.io.data, cfg.model.domain.build())
    scfg = cfg.mcmc.build()
    domain = cfg.model.domain.build()
    kernel = cfg.model.kernel.model_copy(update={
        k: v for k, v in {"mean": 0.0, "sigma2": 1.0, "phi": 1.0, "tau2": 0.0}.items()
        if getattr(cfg.model.kernel, k) is None
    }).build()
    f = cfg.model.build_f(kernel)
    index = build_index(domain, scfg.mesh_resolution, scfg.m) if scfg.nngp else None
    init = make_state(domain, data.obs_locs, data.y_o, kernel, f, cfg.model.intensity.build(), nngp_index=index)
    chains = []
    for path in _trace_paths(out):
        cols, trace = read_trace(path)
        events, y_n, mesh = load_latent(out / path.name.replace("trace_", "latent_").replace(".csv", ".npz"))
        chains.append(ChainOutput(cols, trace, events, y_n, mesh, {}, np.zeros((0, 2)), init, init, scfg))
    return chains


class _Pooled:
    """Concatenation of several chains exposing the interface used by prediction."""

    def __init__(self, chains):
        self.chains = chains
        self.initial = chains[0].initial
        self._index = [(c, j) for c in chains for j in range(len(c))]

    def __len__(self):
        return len(self._index)

    def draw_state(self, j):
        c, i = self._index[j]
        return c.draw_state(i)


def cmd_predict(cfg, seed, threads):
    if cfg.io.data is None:
        raise ConfigError("io.data is required for predict")
    pooled = _Pooled(load_chains(cfg))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    out = _out_dir(cfg)
    if cfg.predict.sites:
        sites = as_locations(cfg.predict.sites)
        draws = predictive_samples(rng, pooled, sites)
        summ = predictive_summary(draws, cfg.predict.quantiles)
        table = {"x": sites[:, 0], "y": sites[:, 1]}
        table.update(summ)
        write_table(out / "predictive_summary.csv", table)
    if cfg.predict.functionals:
        rows = {"functional": [], "strata": [], "points": [], "estimate": [], "se": []}
        for i, fc in enumerate(cfg.predict.functionals):
            est = functional_estimate(rng, pooled, integrand(fc.integrand, **fc.params()), fc.strata, fc.points)
            rows["functional"].append(i)
            rows["strata"].append(fc.strata)
            rows["points"].append(fc.points)
            rows["estimate"].append(est.value)
            rows["se"].append(est.se)
        write_table(out / "functionals.csv", rows)


def cmd_diagnose(cfg, seed, threads):
    out = Path(cfg.io.output_dir)
    traces, columns = [], None
    for path in _trace_paths(out):
        cols, trace = read_trace(path)
        if columns is not None and cols != columns:
            raise ValueError(f"{path} has different columns")
        columns = cols
        traces.append(trace)
    summary = {"chains": len(traces), "draws": [int(t.shape[0]) for t in traces]}
    summary["parameters"] = summarize(columns, traces) if min(t.shape[0] for t in traces) >= 4 else {}
    with open(out / "diagnose.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=False, default=_json_default)


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "predict": cmd_predict, "diagnose": cmd_diagnose}


def build_parser():
    parser = argparse.ArgumentParser(prog="pogamp", description="Simulate, fit and predict POGAMP models.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override mcmc.seed")
    parser.add_argument("--threads", type=int, default=None, help="worker cap (default: number of chains)")
    return parser


def dispatch(argv=None):
    """Run one subcommand; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be positive")
    except ConfigError as exc:
        print(f"pogamp: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = cfg.mcmc.seed if args.seed is None else args.seed
    try:
        COMMANDS[args.command](cfg, seed, args.threads)
    except ConfigError as exc:
        print(f"pogamp: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"pogamp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
