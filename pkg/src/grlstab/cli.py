"""Batch experiment runner.

    grlstab run <config.ini>        execute the experiment named in the config
    grlstab plots <dir> <kind>      emit tidy plot-data CSVs from results

Experiment kinds: sample, train, stability, gnn, bounds, compare, srm,
concentration. All randomness flows from the mandatory master seed through
named child streams, so reruns produce byte-identical result CSVs (wall
time lives only in the manifest). Exit codes: 0 success, 1 user error,
2 internal error; errors are reported as JSON on stderr.

The worker count for trial-parallel sweeps comes from GRLSTAB_WORKERS
(default 1; results are aggregated in deterministic order either way).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import bounds as bnd
from . import gnn as gnn_mod
from . import graphs, sampling, srm
from .config import ConfigError, ExperimentConfig, load_config
from .harness import (SgdAlgorithm, estimate_mu, estimate_stability)
from .objectives import make_nonconvex_objective, make_strongly_convex_objective
from .reporting import config_hash, read_csv, write_csv, write_json, write_manifest
from .sgd import SgdConfig, coupled_train, envelope_check, train
from .seeding import child_seed


def _seed_int(master: int, *path) -> int:
    return int(child_seed(master, *path).generate_state(1, np.uint32)[0])


def workers() -> int:
    try:
        return max(1, int(os.environ.get("GRLSTAB_WORKERS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Config-driven builders

GRAPH_KEYS = ("graph.kind", "graph.n", "graph.p", "graph.path")


def certificate_dict(obj) -> dict:
    cert = obj.certificate
    return {
        "objective": obj.kind,
        "smoothness": cert.smoothness,
        "strong_convexity": cert.strong_convexity,
        "lipschitz": cert.lipschitz,
        "gradient_data_lipschitz": cert.gradient_data_lipschitz,
        "loss_bound": cert.loss_bound,
        "sample_diameter": cert.sample_diameter,
        "weight_radius": cert.weight_radius,
    }
SAMPLER_KEYS = ("sampler.kind", "sampler.dim", "sampler.bx", "sampler.by",
                "sampler.coupling", "sampler.field", "sampler.rule",
                "sampler.sweeps", "sampler.feature_dim", "sampler.label_noise")
OBJECTIVE_KEYS = ("objective", "objective.dim", "objective.smoothness",
                  "objective.strong_convexity", "objective.ripple_amplitude",
                  "objective.frequency", "objective.weight_radius")
SGD_KEYS = ("sgd.step_size", "sgd.steps")


def build_graph(cfg: ExperimentConfig) -> graphs.Graph:
    kind = cfg.get_str("graph.kind")
    if kind == "edge-list":
        return graphs.read_edge_list(cfg.get_str("graph.path"), cfg.get_int("graph.n"))
    if kind == "erdos-renyi":
        return graphs.erdos_renyi_graph(
            cfg.get_int("graph.n"), cfg.get_float("graph.p"),
            _seed_int(cfg.seed, "graph"),
        )
    if kind in graphs.GENERATORS:
        return graphs.GENERATORS[kind](cfg.get_int("graph.n"))
    raise ConfigError(f"unknown graph.kind {kind!r}")


def build_sampler(cfg: ExperimentConfig, rf: graphs.ReceptiveFieldMap):
    kind = cfg.get_str("sampler.kind", "iid")
    b_x = cfg.get_float("sampler.bx", 1.0)
    b_y = cfg.get_float("sampler.by", 1.0)
    if kind == "iid":
        return sampling.IidSampler(
            rf=rf, dim=cfg.get_int("sampler.dim", 3), b_x=b_x, b_y=b_y,
            label_noise=cfg.get_float("sampler.label_noise", 0.0),
        )
    if kind == "ising":
        coupling = cfg.get_float("sampler.coupling", 0.2)
        field = cfg.get_float("sampler.field", 0.0)
        spec = sampling.IsingSpec(
            coupling=coupling * mask_offdiag(rf),
            external_field=np.full(rf.n, field),
            rf=rf,
            feature_dim=cfg.get_int("sampler.feature_dim", 3),
            b_x=b_x, b_y=b_y,
            label_rule=cfg.get_str("sampler.rule", "field-mean"),
        )
        sweeps = cfg.get_int("sampler.sweeps", 1000)
        return sampling.IsingSampler(spec=spec, sweeps=sweeps, min_sweeps=min(sweeps, 1000))
    raise ConfigError(f"unknown sampler.kind {kind!r}")


def mask_offdiag(rf: graphs.ReceptiveFieldMap) -> np.ndarray:
    m = graphs.mask_from_fields(rf).astype(float)
    np.fill_diagonal(m, 0.0)
    return m


def build_objective(cfg: ExperimentConfig):
    kind = cfg.get_str("objective", "quadratic")
    dim = cfg.get_int("objective.dim", cfg.get_int("sampler.dim", 3))
    b_x = cfg.get_float("sampler.bx", 1.0)
    b_y = cfg.get_float("sampler.by", 1.0)
    radius = cfg.get_float("objective.weight_radius", 1.0)
    lam = cfg.get_float("objective.smoothness", 1.0)
    if kind == "quadratic":
        return make_strongly_convex_objective(
            dim, lam, cfg.get_float("objective.strong_convexity", 0.5),
            b_x, b_y, radius,
        )
    if kind == "ripple":
        freq = cfg.get_float("objective.frequency", 4.0)
        amp = cfg.get_float("objective.ripple_amplitude", lam / (2 * freq * freq))
        return make_nonconvex_objective(dim, lam, b_x, b_y, amp, radius, freq)
    raise ConfigError(f"unknown objective {kind!r}")


def build_sgd_config(cfg: ExperimentConfig) -> SgdConfig:
    return SgdConfig(
        step_size=cfg.get_float("sgd.step_size", 0.1),
        steps=cfg.get_int("sgd.steps", 100),
        seed=_seed_int(cfg.seed, "sgd"),
    )


def build_bound_params(cfg: ExperimentConfig, obj, rf) -> bnd.SgdBoundParams:
    regime = bnd.STRONGLY_CONVEX if getattr(obj, "strongly_convex", False) else bnd.NON_CONVEX
    return bnd.params_from_sgd_config(obj.certificate, build_sgd_config(cfg),
                                      rf.n, rf.sizes, regime)


# ---------------------------------------------------------------------------
# Experiments


def run_sample(cfg: ExperimentConfig, outdir: Path, chash: str) -> None:
    cfg.validate_keys(GRAPH_KEYS + SAMPLER_KEYS + ("out", "sample.replace", "sample.replace_mode"))
    rf = graphs.one_hop_receptive_fields(build_graph(cfg))
    sampler = build_sampler(cfg, rf)
    z = sampler.sample(_seed_int(cfg.seed, "sampler"))
    if cfg.has("sample.replace"):
        indices = cfg.get_ints("sample.replace")
        mode = cfg.get_str("sample.replace_mode",
                           "fresh-marginal" if isinstance(sampler, sampling.IidSampler)
                           else "fresh-conditional")
        z = sampler.replace(z, indices, _seed_int(cfg.seed, "replace"), mode)
    header = ["vertex"] + [f"x{k}" for k in range(z.dim)] + ["label", "perturbed"]
    rows = [
        [i, *z.features[i].tolist(), z.labels[i], i in z.perturbed]
        for i in range(z.n)
    ]
    write_csv(outdir / "samples.csv", header, rows, chash)


def run_train(cfg: ExperimentConfig, outdir: Path, chash: str) -> None:
    cfg.validate_keys(GRAPH_KEYS + SAMPLER_KEYS + OBJECTIVE_KEYS + SGD_KEYS
                      + ("out", "train.perturb_vertex", "train.runs"))
    rf = graphs.one_hop_receptive_fields(build_graph(cfg))
    sampler = build_sampler(cfg, rf)
    obj = build_objective(cfg)
    sgd_cfg = build_sgd_config(cfg)
    params = build_bound_params(cfg, obj, rf)

    if cfg.has("train.perturb_vertex"):
        vertex = cfg.get_int("train.perturb_vertex")
        runs = cfg.get_int("train.runs", 1)
        sum_delta = np.zeros(sgd_cfg.steps + 1)
        first = None
        for r in range(runs):
            run_cfg = SgdConfig(step_size=sgd_cfg.step_size, steps=sgd_cfg.steps,
                                seed=_seed_int(cfg.seed, "sgd", r))
            z = sampler.sample(_seed_int(cfg.seed, "sampler", r))
            z_i = sampler.replace(z, [vertex], _seed_int(cfg.seed, "replace", r))
            trace = coupled_train(z, z_i, rf, obj, run_cfg)
            sum_delta += trace.delta_norms
            if first is None:
                first = trace
        rows = []
        for t in range(sgd_cfg.steps + 1):
            rows.append([
                t,
                first.base.indices[t - 1] if t else "",
                float(np.linalg.norm(first.base.weights[t])),
                float(first.delta_norms[t]),
                first.case_labels[t - 1] if t else "",
            ])
        write_csv(outdir / "trajectory.csv",
                  ["t", "sampled_vertex", "w_norm", "delta_norm", "case"], rows, chash)
        growth, kick = (bnd.convex_recursion_constants(params, vertex)
                        if params.regime == bnd.STRONGLY_CONVEX
                        else (bnd.nonconvex_growth_constant(params),
                              bnd.nonconvex_kick_constant(params, vertex)))
        stats = [[t, float(sum_delta[t] / runs),
                  kick * bnd.geometric_series(growth, t)]
                 for t in range(sgd_cfg.steps + 1)]
        write_csv(outdir / "delta_stats.csv",
                  ["t", "mean_delta", "expected_envelope"], stats, chash)
        report = envelope_check(first, obj)
        write_json(outdir / "envelope.json", {
            "regime": report.regime,
            "regime_a_active": report.regime_a_active,
            "min_margin": float(report.margins.min()) if report.margins.size else 0.0,
            "ok": report.ok,
        }, chash)
    else:
        z = sampler.sample(_seed_int(cfg.seed, "sampler"))
        traj = train(z, rf, obj, sgd_cfg)
        rows = [[t,
                 traj.indices[t - 1] if t else "",
                 float(np.linalg.norm(traj.weights[t])),
                 "", ""]
                for t in range(sgd_cfg.steps + 1)]
        write_csv(outdir / "trajectory.csv",
                  ["t", "sampled_vertex", "w_norm", "delta_norm", "case"], rows, chash)


HARNESS_KEYS = ("harness.pert_draws", "harness.test_draws", "harness.m", "harness.trials")


def run_stability(cfg: ExperimentConfig, outdir: Path, chash: str) -> None:
    cfg.validate_keys(GRAPH_KEYS + SAMPLER_KEYS + OBJECTIVE_KEYS + SGD_KEYS
                      + HARNESS_KEYS + ("out",))
    rf = graphs.one_hop_receptive_fields(build_graph(cfg))
    sampler = build_sampler(cfg, rf)
    obj = build_objective(cfg)
    alg = SgdAlgorithm(obj, rf, build_sgd_config(cfg))
    k = cfg.get_int("harness.pert_draws", 4)
    kp = cfg.get_int("harness.test_draws", 4)
    est = estimate_stability(alg, sampler, k, kp, _seed_int(cfg.seed, "harness"))
    mu = None
    if cfg.has("harness.m"):
        mu = estimate_mu(alg, sampler, cfg.get_int("harness.m"), k, kp,
                         _seed_int(cfg.seed, "harness"))
    rows = [[i, est.beta1_i[i], est.beta2_i[i], k, kp, est.seed] for i in range(rf.n)]
    write_csv(outdir / "stability.csv",
              ["i", "beta1_i", "beta2_i", "pert_draws", "test_draws", "seed"], rows, chash)
    write_json(outdir / "summary.json", {
        "algorithm": est.algorithm,
        "beta1": est.beta1, "beta2": est.beta2,
        "discrepancy": est.discrepancy, "mu": mu,
        "constants": certificate_dict(obj),
    }, chash)


GNN_KEYS = ("gnn.kind", "gnn.trials", "gnn.eps", "gnn.ridge", "gnn.test_draws",
            "gnn.densities", "gnn.replicates", "gnn.dim", "gnn.bw")


def _gnn_sweep_job(args):
    n, p, rep, trials, kind, eps, seed, extra = args
    rf = gnn_mod.density_mask_fields(n, p, _seed_int(seed, "mask", int(p * 10000), rep))
    res = gnn_mod.gnn_stability_experiment(
        rf, kind, trials, eps, _seed_int(seed, "exp", int(p * 10000), rep), **extra
    )
    return [res.n, res.sup_d, res.inf_d, kind, res.beta1, res.beta2,
            res.discrepancy, trials, res.seed]


def run_gnn(cfg: ExperimentConfig, outdir: Path, chash: str) -> None:
    cfg.validate_keys(GRAPH_KEYS + GNN_KEYS + ("out",))
    kind = cfg.get_str("gnn.kind", "label")
    trials = cfg.get_int("gnn.trials", 4)
    eps = cfg.get_float("gnn.eps", 0.05)
    extra = {
        "ridge": cfg.get_float("gnn.ridge", 1.0),
        "n_test_draws": cfg.get_int("gnn.test_draws", 32),
        "dim": cfg.get_int("gnn.dim", 3),
        "b_w": cfg.get_float("gnn.bw", 1.0),
    }
    header = ["n", "sup_d", "inf_d", "kind", "beta1", "beta2",
              "discrepancy", "trials", "seed"]
    if cfg.has("gnn.densities"):
        n = cfg.get_int("graph.n")
        densities = cfg.get_floats("gnn.densities")
        reps = cfg.get_int("gnn.replicates", 4)
        jobs = [(n, p, rep, trials, kind, eps, cfg.seed, extra)
                for p in densities for rep in range(reps)]
        if workers() > 1:
            from multiprocessing import Pool

            with Pool(workers()) as pool:
                rows = pool.map(_gnn_sweep_job, jobs)
        else:
            rows = [_gnn_sweep_job(job) for job in jobs]
        write_csv(outdir / "results.csv", header, rows, chash)
    else:
        rf = graphs.one_hop_receptive_fields(build_graph(cfg))
        res = gnn_mod.gnn_stability_experiment(
            rf, kind, trials, eps, _seed_int(cfg.seed, "gnn"), **extra)
        rows = [[res.n, res.sup_d, res.inf_d, kind, res.beta1, res.beta2,
                 res.discrepancy, trials, res.seed]]
        write_csv(outdir / "results.csv", header, rows, chash)
        write_csv(outdir / "per_vertex.csv", ["i", "beta1_i", "beta2_i"],
                  [[i, res.beta1_i[i], res.beta2_i[i]] for i in range(res.n)], chash)


def run_bounds(cfg: ExperimentConfig, outdir: Path, chash: str) -> None:
    cfg.validate_keys(GRAPH_KEYS + SAMPLER_KEYS + OBJECTIVE_KEYS + SGD_KEYS
                      + ("out", "delta"))
    rf = graphs.one_hop_receptive_fields(build_graph(cfg))
    obj = build_objective(cfg)
    params = build_bound_params(cfg, obj, rf)
    report = bnd.bound_report(params, cfg.get_float("delta", 0.1))
    write_json(outdir / "report.json", report, chash)


def run_compare(cfg: ExperimentConfig, outdir: Path, chash: str) -> None:
    """Empirical beta2 vs the expected and high-probability bounds."""
    cfg.validate_keys(GRAPH_KEYS + SAMPLER_KEYS + OBJECTIVE_KEYS + SGD_KEYS
                      + HARNESS_KEYS + ("out", "delta"))
    rf = graphs.one_hop_receptive_fields(build_graph(cfg))
    sampler = build_sampler(cfg, rf)
    obj = build_objective(cfg)
    alg = SgdAlgorithm(obj, rf, build_sgd_config(cfg))
    params = build_bound_params(cfg, obj, rf)
    delta = cfg.get_float("delta", 0.1)
    k = cfg.get_int("harness.pert_draws", 2)
    kp = cfg.get_int("harness.test_draws", 2)
    est = estimate_stability(alg, sampler, k, kp, _seed_int(cfg.seed, "harness"))
    highprob = bnd.highprob_stability_bound(params, delta)
    rows = []
    for i in range(rf.n):
        expected = bnd.expected_stability_bound(params, i)
        rows.append([
            i, est.beta2_i[i], expected, highprob,
            expected is not None and est.beta2_i[i] <= expected,
        ])
    write_csv(outdir / "compare.csv",
              ["i", "beta2_empirical", "expected_bound", "highprob_bound",
               "dominated"], rows, chash)
    write_json(outdir / "summary.json", {
        "beta2_empirical": est.beta2,
        "expected_bound": bnd.expected_stability_bound(params),
        "highprob_bound": highprob,
        "delta": delta,
        "dominated": (bnd.expected_stability_bound(params) is not None
                      and est.beta2 <= bnd.expected_stability_bound(params)),
        "constants": certificate_dict(obj),
    }, chash)


SRM_KEYS = ("srm.d_max", "srm.lambdas", "srm.weight_radius", "srm.epsilon",
            "srm.holdout", "srm.beta_pert_draws", "srm.beta_test_draws")


def run_srm(cfg: ExperimentConfig, outdir: Path, chash: str) -> None:
    cfg.validate_keys(GRAPH_KEYS + SAMPLER_KEYS + SRM_KEYS + ("out",))
    rf = graphs.one_hop_receptive_fields(build_graph(cfg))
    sampler = build_sampler(cfg, rf)
    d_max = cfg.get_int("srm.d_max", 3)
    family = srm.DegreeClassFamily(
        rf=rf, d_max=d_max, dim=cfg.get_int("sampler.dim", 3),
        weight_radius=cfg.get_float("srm.weight_radius", 1.0),
        b_x=cfg.get_float("sampler.bx", 1.0), b_y=cfg.get_float("sampler.by", 1.0),
    )
    beta2_by_degree = {}
    for d in range(1, d_max + 1):
        est = estimate_stability(
            srm.SrmClassAlgorithm(family, d), sampler,
            cfg.get_int("srm.beta_pert_draws", 2), cfg.get_int("srm.beta_test_draws", 2),
            _seed_int(cfg.seed, "srm-beta", d),
        )
        beta2_by_degree[d] = est.beta2
    z = sampler.sample(_seed_int(cfg.seed, "srm-train"))
    rows = []
    selections = {}
    for lam in cfg.get_floats("srm.lambdas", "0.0 0.1 1.0"):
        sel = srm.select_sparse(family, z, lam, beta2_by_degree)
        selections[lam] = sel
        for fit in sel.fits:
            rows.append([lam, fit.degree, fit.empirical_risk, fit.penalty,
                         fit.penalized_risk, fit.degree == sel.selected.degree])
    write_csv(outdir / "srm.csv",
              ["lambda", "d", "class_risk", "penalty", "penalized_risk", "selected"],
              rows, chash)
    holdout = [sampler.sample(_seed_int(cfg.seed, "srm-holdout", k))
               for k in range(cfg.get_int("srm.holdout", 4))]
    last = selections[cfg.get_floats("srm.lambdas", "0.0 0.1 1.0")[-1]]
    beta2 = max(beta2_by_degree.values())
    floor = max(0.0, bnd.srm_epsilon_floor(beta2, last.lambda_slack, d_max))
    eps = cfg.get_float("srm.epsilon", floor + 1.0)
    record = srm.srm_report(last, family, holdout, eps, beta1=0.0,
                            n_vertices=rf.n)
    write_json(outdir / "summary.json", {
        "beta2_by_degree": beta2_by_degree,
        "selected_degree": record.selected_degree,
        "holdout_risk_selected": record.holdout_risk_selected,
        "oracle_rhs": record.oracle_rhs,
        "epsilon": record.epsilon,
        "failure_probability": record.failure_probability,
        "satisfied": record.satisfied,
    }, chash)


CONC_KEYS = ("conc.draws", "conc.sweeps", "conc.t_grid")


def run_concentration(cfg: ExperimentConfig, outdir: Path, chash: str) -> None:
    """Empirical tail of a per-coordinate-Lipschitz statistic vs the theory curve.

    The statistic is the number of up spins (sensitivity c_i = 1 per
    coordinate); its mean is computed exactly from the enumerated Gibbs
    measure and the tail bound uses the exact Dobrushin coefficient.
    """
    cfg.validate_keys(GRAPH_KEYS + SAMPLER_KEYS + CONC_KEYS + ("out",))
    rf = graphs.one_hop_receptive_fields(build_graph(cfg))
    sampler = build_sampler(cfg, rf)
    if not isinstance(sampler, sampling.IsingSampler):
        raise ConfigError("concentration experiment needs sampler.kind = ising")
    spec = sampler.spec
    alpha = sampling.dobrushin_exact(spec)
    configs = sampling.enumerate_spin_configs(spec.n)
    probs = sampling.gibbs_probabilities(spec)
    phi_exact = float(probs @ (configs > 0).sum(axis=1))
    draws = cfg.get_int("conc.draws", 20000)
    spins = sampler.sample_spins_batch(draws, _seed_int(cfg.seed, "conc"))
    phi = (spins > 0).sum(axis=1)
    t_grid = cfg.get_floats("conc.t_grid", "0.5 1 1.5 2 2.5 3")
    c = np.ones(spec.n)
    rows = []
    for t in t_grid:
        emp = float(np.mean(phi - phi_exact >= t))
        theory = bnd.concentration_tail(c, alpha, t)
        rows.append([t, emp, theory, emp <= theory])
    write_csv(outdir / "tail.csv",
              ["t", "empirical_exceedance", "theory_bound", "within_bound"],
              rows, chash)
    write_json(outdir / "summary.json", {
        "alpha_exact": alpha,
        "alpha_upper_bound": sampling.dobrushin_upper_bound(spec),
        "phi_mean_exact": phi_exact,
        "draws": draws,
    }, chash)


RUNNERS = {
    "sample": run_sample,
    "train": run_train,
    "stability": run_stability,
    "gnn": run_gnn,
    "bounds": run_bounds,
    "compare": run_compare,
    "srm": run_srm,
    "concentration": run_concentration,
}


# ---------------------------------------------------------------------------
# Plot data


def emit_plot_data(result_dir: Path, kind: str) -> Path:
    """Reshape result files into tidy plot-series CSVs."""
    result_dir = Path(result_dir)
    if kind == "scaling":
        header, rows = read_csv(result_dir / "results.csv")
        sup_i, b2_i = header.index("sup_d"), header.index("beta2")
        out_rows = [
            [r[sup_i], r[b2_i], float(np.log(float(r[sup_i]))), float(np.log(float(r[b2_i])))]
            for r in rows if float(r[b2_i]) > 0
        ]
        out = result_dir / "plot_scaling.csv"
        write_csv(out, ["sup_d", "beta2", "log_sup_d", "log_beta2"], out_rows)
        return out
    if kind == "envelope":
        header, rows = read_csv(result_dir / "delta_stats.csv")
        out = result_dir / "plot_envelope.csv"
        write_csv(out, header, rows)
        return out
    if kind == "tail":
        header, rows = read_csv(result_dir / "tail.csv")
        out = result_dir / "plot_tail.csv"
        write_csv(out, ["t", "empirical_exceedance", "theory_bound"],
                  [r[:3] for r in rows])
        return out
    if kind == "discrepancy":
        out_rows = []
        for path in sorted(result_dir.glob("**/results.csv")):
            header, rows = read_csv(path)
            n_i = header.index("n")
            kind_i = header.index("kind")
            disc_i = header.index("discrepancy")
            for r in rows:
                out_rows.append([r[n_i], r[kind_i], r[disc_i]])
        out = result_dir / "plot_discrepancy.csv"
        write_csv(out, ["n", "kind", "discrepancy"], out_rows)
        return out
    raise ConfigError(f"unknown plot kind {kind!r}")


# ---------------------------------------------------------------------------
# Entrypoint


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="grlstab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", type=Path)
    p_plots = sub.add_parser("plots", help="emit plot-data CSVs from a result dir")
    p_plots.add_argument("dir", type=Path)
    p_plots.add_argument("kind", choices=["scaling", "envelope", "tail", "discrepancy"])
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            started = time.time()
            raw = load_config(args.config)
            cfg = ExperimentConfig(raw)
            if cfg.kind not in RUNNERS:
                raise ConfigError(f"unknown experiment kind {cfg.kind!r}")
            outdir = Path(cfg.get_str("out"))
            outdir.mkdir(parents=True, exist_ok=True)
            RUNNERS[cfg.kind](cfg, outdir, config_hash(raw))
            write_manifest(outdir, raw, started)
        else:
            emit_plot_data(args.dir, args.kind)
        return 0
    except (ConfigError, sampling.CapacityError, FileNotFoundError, ValueError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    except Exception as exc:  # pragma: no cover - internal failures
        json.dump({"error": "internal", "type": type(exc).__name__,
                   "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
