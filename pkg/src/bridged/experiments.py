"""Experiment runners behind ``bridged run``.

Each runner takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult`; :func:`write_outputs` turns that into files.
"""
import os
from dataclasses import dataclass, field

import numpy as np

import bridged
from bridged import data as bdata
from bridged import kernels
from bridged.config import ExperimentConfig
from bridged.diagnostics import (
    SummaryReport,
    auc_roc,
    clustering_accuracy,
    ks_two_sample,
    spectral_cluster,
)
from bridged.errors import ConfigError
from bridged.inner import INNER_MAX_ITER, INNER_TOL
from bridged.inner.admm import ADMM_TOL, BARRIER_FLOOR
from bridged.models import (
    BMMCModel,
    CoxModel,
    FlowModel,
    GibbsHingeModel,
    HarmonizationModel,
    LQEModel,
    PrecomputedProjectionTable,
    default_grid,
)
from bridged.numerics import GEODESIC_ETA, pairwise_geodesic
from bridged.predictive import bmmc_predict_probs
from bridged.samplers import (
    AdaptationConfig,
    canonical_cox_gibbs,
    discrete_gibbs,
    gibbs_latent_normal,
    mala,
    rw_metropolis,
)

PILOT_ITERS = 500


@dataclass
class ExperimentResult:
    trace: object
    sections: dict = field(default_factory=dict)     # extra summary sections
    tables: dict = field(default_factory=dict)       # file name -> (header, rows)


def adaptation_from(cfg: ExperimentConfig):
    s = cfg.sampler
    kw = {}
    for key, attr in (("target", "target"), ("decay", "decay"),
                      ("window_fraction", "fraction"), ("initial_step", "initial_step")):
        if key in s:
            kw[attr] = s[key]
    return AdaptationConfig(**kw)


def _data_seed(cfg):
    return cfg.data.get("seed", cfg.seed)


def _need_path(cfg):
    path = cfg.data.get("path")
    if not path:
        raise ConfigError(f"[data] source = {cfg.data['source']} needs a path")
    return path


# -- individual studies -------------------------------------------------------------

def run_lqe(cfg):
    if cfg.data["source"] == "synthetic":
        d = bdata.gen_lqe_data(cfg.data["n"], _data_seed(cfg))
        x, y = d.x, d.y
    else:
        header, tab = bdata.load_table(_need_path(cfg))
        if "x" not in header or "y" not in header:
            raise ConfigError("LQE table needs columns x and y")
        x, y = tab[:, header.index("x")], tab[:, header.index("y")]
    method = cfg.sampler["method"]
    iters, burn = cfg.iterations, cfg.burn_in
    if method == "pg_gibbs":
        trace = gibbs_latent_normal(x, y, iters, burn, seed=cfg.seed, adapt=adaptation_from(cfg))
        return ExperimentResult(trace)
    model = LQEModel(x, y, tol=cfg.model.get("tol", INNER_TOL))
    warm = cfg.sampler.get("warm_start", True)
    if method == "rw":
        trace = rw_metropolis(model, model.default_init(), iters, burn,
                              adapt=adaptation_from(cfg), seed=cfg.seed, warm_start=warm)
    else:
        pilot_iters = min(PILOT_ITERS, iters)
        pilot = rw_metropolis(model, model.default_init(), pilot_iters, pilot_iters // 2,
                              adapt=adaptation_from(cfg), seed=cfg.seed, warm_start=warm)
        raw = model.params.to_raw(pilot.samples)
        M = np.var(raw, axis=0)
        M = np.where(M > 0, M, 1.0)
        trace = mala(model, pilot.samples[-1], iters, burn, tau=cfg.sampler.get("tau", 0.5),
                     M=M, seed=cfg.seed + 1, warm_start=warm)
    return ExperimentResult(trace)


def run_bmmc(cfg):
    if cfg.data["source"] == "synthetic":
        d = bdata.gen_bmmc_toy(cfg.data["n_labeled"], cfg.data["n_unlabeled"], _data_seed(cfg))
        X, truth, unl = d.X, d.labels, d.unlabeled
    else:
        hf = bdata.load_heart_failure(_need_path(cfg), cfg.data["label"], cfg.data["group"])
        X, truth = hf.X, np.where(hf.y == 1, 1.0, -1.0)
        unl = bdata.stratified_mask(
            hf.group, {1.0: cfg.data["mask_men"], 0.0: cfg.data["mask_women"]}, _data_seed(cfg))
    iters, burn = cfg.iterations, cfg.burn_in
    if cfg.sampler["method"] == "bmmc":
        model = BMMCModel(X, truth, unl, tol=cfg.model.get("tol", INNER_TOL))
        trace = discrete_gibbs(model, iters, burn, seed=cfg.seed, adapt=adaptation_from(cfg))
        probs = bmmc_predict_probs(trace)
    else:
        labeled = np.setdiff1d(np.arange(X.shape[0]), unl)
        model = GibbsHingeModel(X, truth, labeled)
        trace = rw_metropolis(model, model.default_init(), iters, burn,
                              adapt=adaptation_from(cfg), seed=cfg.seed)
        probs = model.predict_probs(trace.samples, unl)
    y01 = (truth[unl] + 1.0) / 2.0
    sections = {"prediction": {"n_unlabeled": str(unl.size)}}
    if 0 < y01.sum() < y01.size:
        sections["prediction"]["auc"] = repr(auc_roc(probs, y01))
    sections["prediction"]["accuracy"] = repr(float(np.mean((probs > 0.5) == (y01 == 1))))
    rows = [[int(i), float(p), int(t)] for i, p, t in zip(unl, probs, y01)]
    return ExperimentResult(trace, sections, {"predictions.csv": (["index", "prob", "truth"], rows)})


def run_harmonization(cfg):
    groups = None
    if cfg.data["source"] == "synthetic":
        d = bdata.gen_harmonization_synthetic(cfg.data["subjects"], cfg.data["regions"],
                                              seed=_data_seed(cfg))
        L, groups = d.laplacians, d.groups
    else:
        L, _ = bdata.load_laplacians(_need_path(cfg))
    grid = default_grid(cfg.model["grid_size"], cfg.model["grid_max"])
    eta = cfg.model.get("eta", GEODESIC_ETA)
    table = PrecomputedProjectionTable.build(L, grid, eta=eta)
    model = HarmonizationModel(table)
    trace = discrete_gibbs(model, cfg.iterations, cfg.burn_in, seed=cfg.seed)
    smoothed = smoothed_distances(table, trace)
    raw = pairwise_geodesic(L, eta=eta)
    sections = {}
    if groups is not None:
        sections["groups"] = group_separation(raw, smoothed, groups, seed=cfg.seed)
    S = L.shape[0]
    header = [f"s{j}" for j in range(S)]
    return ExperimentResult(trace, sections, {
        "distances_smoothed.csv": (header, smoothed.tolist()),
        "distances_raw.csv": (header, raw.tolist()),
    })


def smoothed_distances(table, trace):
    """Posterior mean of the pairwise distance matrix over the kept draws."""
    lam = trace.samples[:, 2:]
    idx = np.abs(lam[:, :, None] - table.grid[None, None, :]).argmin(axis=2)
    total = np.zeros((table.n_subjects, table.n_subjects))
    for row in idx:
        total += table.distances(row)
    return total / idx.shape[0]


def group_separation(raw, smoothed, groups, seed=0):
    """Within vs between-group KS and clustering accuracy for both matrices."""
    g = np.asarray(groups)
    same = np.triu(g[:, None] == g[None, :], 1)
    diff = np.triu(g[:, None] != g[None, :], 1)
    out = {}
    for tag, D in (("raw", raw), ("smoothed", smoothed)):
        out[f"ks_{tag}"] = repr(ks_two_sample(D[same], D[diff]))
        k = int(np.unique(g).size)
        out[f"cluster_accuracy_{tag}"] = repr(clustering_accuracy(spectral_cluster(D, k, seed), g))
    return out


def run_flow(cfg):
    if cfg.data["source"] != "synthetic":
        raise ConfigError("flow experiment supports only synthetic data")
    d = bdata.gen_flow_network(cfg.data["nodes"], _data_seed(cfg),
                               n_uncertain=cfg.data["n_uncertain"], n_rep=cfg.data["n_rep"])
    model = FlowModel(d.net, d.Y)
    trace = rw_metropolis(model, model.default_init(), cfg.iterations, cfg.burn_in,
                          adapt=adaptation_from(cfg), seed=cfg.seed)
    return ExperimentResult(trace, {"truth": flow_coverage(trace, d.true_capacity)})


def flow_coverage(trace, truth):
    k = truth.size
    lo, hi = np.quantile(trace.samples[:, :k], [0.025, 0.975], axis=0)
    inside = (lo <= truth) & (truth <= hi)
    out = {}
    for j in range(k):
        out[f"{trace.names[j]}_true"] = repr(float(truth[j]))
        out[f"{trace.names[j]}_interval"] = f"{lo[j]!r} {hi[j]!r}"
    out["covered"] = str(int(inside.sum()))
    return out


def run_cox(cfg):
    if cfg.data["source"] != "synthetic":
        header, tab = bdata.load_table(_need_path(cfg))
        if "time" not in header or "x" not in header:
            raise ConfigError("Cox table needs columns time and x")
        times, x = tab[:, header.index("time")], tab[:, header.index("x")]
        boundaries = np.array(bdata.COX_BOUNDARIES)
    else:
        d = bdata.gen_cox_data(cfg.data["n"], _data_seed(cfg), lam0=cfg.data["lam0"])
        times, x, boundaries = d.times, d.x, d.boundaries
    adapt = adaptation_from(cfg)
    if cfg.sampler["method"] == "bridged":
        trace = rw_metropolis(CoxModel(times, x, boundaries), [0.0], cfg.iterations,
                              cfg.burn_in, adapt=adapt, seed=cfg.seed)
    else:
        trace = canonical_cox_gibbs(times, x, boundaries, cfg.iterations, cfg.burn_in,
                                    seed=cfg.seed, adapt=adapt)
    return ExperimentResult(trace)


RUNNERS = {
    "lqe": run_lqe,
    "bmmc": run_bmmc,
    "harmonization": run_harmonization,
    "flow": run_flow,
    "cox": run_cox,
}


# -- output ---------------------------------------------------------------------------

def format_sections(sections):
    """Structured text: ``[section]`` headers followed by ``key = value`` lines."""
    lines = []
    for name, kv in sections.items():
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {v}" for k, v in kv.items())
        lines.append("")
    return "\n".join(lines)


def _stamp(cfg):
    return {"seed": str(cfg.seed), "config_hash": cfg.config_hash}


def manifest_sections(cfg):
    secs = {
        "run": {"experiment": cfg.name, **_stamp(cfg), "code_version": bridged.__version__,
                "kernel_backend": kernels.BACKEND},
        "decisions": {
            "inner_tol": repr(INNER_TOL),
            "inner_max_iter": str(INNER_MAX_ITER),
            "geodesic_eta": repr(cfg.model.get("eta", GEODESIC_ETA)),
            "admm_tol": repr(ADMM_TOL),
            "admm_barrier_floor": repr(BARRIER_FLOOR),
            "adaptation": "robbins-monro on log step, rate t^-decay, frozen after window",
            "subgradient_tiebreak": "zero element of the subdifferential, else limit from below",
            "inner_failure": "proposal rejected and counted",
        },
    }
    for section in ("sampler", "data", "model"):
        values = getattr(cfg, section)
        secs[f"config.{section}"] = {k: str(values[k]) for k in sorted(values)}
    return secs


def write_table(path, header, rows, stamp):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# seed={stamp['seed']} config_hash={stamp['config_hash']}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def write_outputs(cfg, result):
    """Write trace, summary, manifest, timing and any extra tables; return the paths."""
    out = cfg.run_dir
    os.makedirs(out, exist_ok=True)
    stamp = _stamp(cfg)
    trace = result.trace
    paths = {}
    paths["trace"] = os.path.join(out, "trace.csv")
    write_table(paths["trace"], trace.names, [[float(v) for v in r] for r in trace.samples], stamp)
    report = SummaryReport.from_trace(trace, with_ks=True)
    summary = {"run": dict(stamp)}
    summary.update(report.sections())
    summary["chain"]["failures"] = str(trace.failures)
    summary.update(result.sections)
    paths["summary"] = os.path.join(out, "summary.txt")
    with open(paths["summary"], "w", newline="\n") as fh:
        fh.write(format_sections(summary))
    paths["manifest"] = os.path.join(out, "manifest.txt")
    with open(paths["manifest"], "w", newline="\n") as fh:
        fh.write(format_sections(manifest_sections(cfg)))
        fh.write("[config.text]\n")
        fh.write("".join(f"| {line}\n" for line in cfg.text.splitlines()))
    timing = {"run": dict(stamp), "timing": {
        "wall_time_s": repr(trace.wall_time),
        "block_times_s": " ".join(repr(float(t)) for t in trace.block_times)}}
    for j, name in enumerate(report.names):
        timing["timing"][f"ess_per_10s_{name}"] = repr(float(report.ess_per_10s[j]))
    paths["timing"] = os.path.join(out, "timing.txt")
    with open(paths["timing"], "w", newline="\n") as fh:
        fh.write(format_sections(timing))
    for name, (header, rows) in result.tables.items():
        paths[name] = os.path.join(out, name)
        write_table(paths[name], header, rows, stamp)
    return paths


def run_experiment(cfg):
    """Run the configured study and write its outputs."""
    result = RUNNERS[cfg.name](cfg)
    return result, write_outputs(cfg, result)
