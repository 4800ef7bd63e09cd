import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace

import matplotlib
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from exceptions import InsufficientData, OracleNotConverged
from indicators.Weights import weight_path
from metrics import (
    ErrorKind,
    StatePanel,
    convergence_rate,
    fixed_epsilon_bound,
    lp_norm,
    weighted_bmo_bootstrap,
)
from pricing import jump_compensator_surface, log_gradient_surface, value_surface
from simulate import (
    adapted_time_net,
    check_cutoff,
    hedge_run,
    hedge_runs_frame,
    jump_cutoff,
    mesh_size,
    oracle_path,
    sample_path,
)
from utils import (
    BMO_RESAMPLES,
    BOOTSTRAP_RESAMPLES,
    FINE_GRID,
    MIN_PATHS,
    MIN_RATE_SAMPLES,
    ORACLE_REFINEMENT,
    ORACLE_TOLERANCE,
    PATH_CHUNK,
    write_csv,
    write_json,
)

matplotlib.use("Agg")

logger = logging.getLogger(__name__)

DPI = 300


@dataclass(frozen=True)
class EpsilonRule:
    """ε = n^{-1/(2r)} (``power``), n^{-1/2} (``symmetric``) or a fixed ε (``fixed``)"""

    kind: str = "power"
    r: float = 1.0
    value: float = 0.0

    def __call__(self, n):
        if self.kind == "fixed":
            return float(self.value)
        if self.kind == "symmetric":
            return float(n) ** -0.5
        return float(n) ** (-1.0 / (2.0 * self.r))


def save_plot(points, predicted_slope, stem, title):
    """.dat table, gnuplot script and matplotlib PNG of a log-log error plot"""
    ns = np.array([q.n for q in points], dtype=float)
    errors = np.array([q.error for q in points])
    std_errors = np.array([q.std_error for q in points])
    anchor = errors[0] if len(errors) and errors[0] > 0 else 1.0
    guide = anchor * (ns / ns[0]) ** predicted_slope
    with open(stem + ".dat", "w", encoding="utf-8", newline="\n") as f:
        f.write("# n error std_error predicted\n")
        for row in zip(ns, errors, std_errors, guide):
            f.write("{:.0f} {:.10e} {:.10e} {:.10e}\n".format(*row))
    name = os.path.basename(stem)
    with open(stem + ".gp", "w", encoding="utf-8", newline="\n") as f:
        f.write(
            "set terminal pngcairo size 1200,800\n"
            "set output '{0}_gnuplot.png'\n"
            "set logscale xy\n"
            "set xlabel 'n'\n"
            "set ylabel 'error'\n"
            "set title '{1}'\n"
            "plot '{0}.dat' using 1:2:3 with yerrorbars title 'error', \\\n"
            "     '{0}.dat' using 1:4 with lines title 'slope {2:.4f}'\n".format(name, title, predicted_slope)
        )
    fig, ax = plt.subplots(figsize=(8, 5))
    if np.all(errors > 0):
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.errorbar(ns, errors, yerr=std_errors, fmt="o", color="green", label="error")
    ax.plot(ns, guide, color="grey", label="slope {:.4f}".format(predicted_slope))
    ax.set_xlabel("n")
    ax.set_ylabel("error")
    ax.set_title(title)
    ax.legend()
    fig.savefig(stem + ".png", dpi=DPI)
    plt.close(fig)


class Backtest:
    """
    Rate experiment of the Riemann and jump-corrected hedges of one strategy.

    Every path is simulated once on a fine grid containing the knots of every net, hedged
    on each net and compared with a single fine-grid oracle. Path chunks run on a thread
    pool; results are merged in path order.
    """

    def __init__(
        self,
        triplet,
        strategy,
        maturity,
        n_values,
        paths,
        theta,
        kappa,
        epsilon_rule,
        seed=0,
        grid_size=FINE_GRID,
        delta=None,
        threads=1,
        path_to_save=".",
        digest="",
        error_kind=ErrorKind.L2,
        p=2.0,
        eta=1.0,
        min_paths=MIN_PATHS,
        min_samples=MIN_RATE_SAMPLES,
        oracle_refinement=ORACLE_REFINEMENT,
        oracle_tolerance=ORACLE_TOLERANCE,
        resamples=BOOTSTRAP_RESAMPLES,
        bmo_resamples=BMO_RESAMPLES,
    ):
        self.triplet = triplet
        self.strategy = strategy
        self.maturity = float(maturity)
        self.n_values = [int(n) for n in n_values]
        self.paths = int(paths)
        self.theta = float(theta)
        self.kappa = float(kappa)
        self.epsilon_rule = epsilon_rule
        self.seed = int(seed)
        self.grid_size = int(grid_size)
        self.delta = delta
        self.threads = max(1, int(threads))
        self.path_to_save = path_to_save
        self.digest = digest
        self.error_kind = ErrorKind(error_kind)
        self.p = float(p)
        self.eta = float(eta)
        self.min_paths = int(min_paths)
        self.min_samples = int(min_samples)
        self.oracle_refinement = int(oracle_refinement)
        self.oracle_tolerance = float(oracle_tolerance)
        self.resamples = int(resamples)
        self.bmo_resamples = int(bmo_resamples)
        self.nets = {}
        for n in self.n_values:
            logger.info("Setting the n=%d net", n)
            self.nets[n] = adapted_time_net(n, self.theta, self.maturity)
        self.knots = np.unique(np.concatenate([net.knots for net in self.nets.values()]))
        self.coarse = self.nets[self.n_values[0]].knots[:-1]
        if self.error_kind is ErrorKind.BMO:
            for net in self.nets.values():
                net.index_of(self.coarse)

    def _chunk(self, start, stop):
        runs, states, failures = [], [], 0
        n_ref = max(self.n_values)
        for index in range(start, stop):
            path = sample_path(
                self.triplet, self.maturity, self.grid_size, self.delta, self.seed, index, extra_times=self.knots
            )
            try:
                oracle = oracle_path(path, self.strategy, n_ref, self.oracle_refinement, self.oracle_tolerance, self.knots)
            except OracleNotConverged as err:
                logger.debug("%s", err)
                failures += 1
                oracle = oracle_path(
                    path, self.strategy, n_ref, self.oracle_refinement, self.oracle_tolerance, self.knots, strict=False
                )
            if index == 0:
                for n in self.n_values:
                    check_cutoff(path, self.epsilon_rule(n), self.kappa)
            for n in self.n_values:
                runs.append(hedge_run(path, self.strategy, self.nets[n], self.epsilon_rule(n), self.kappa, oracle))
            if self.error_kind is ErrorKind.BMO:
                weights = weight_path(path, self.eta)
                idx = path.index_of(self.coarse)
                states.append((path.prices()[idx], weights.big_theta[idx], weights.phi_bar[idx]))
        return runs, states, failures

    def _simulate(self):
        chunks = [(s, min(s + PATH_CHUNK, self.paths)) for s in range(0, self.paths, PATH_CHUNK)]
        done = {}
        pool = ThreadPoolExecutor(max_workers=self.threads)
        try:
            futures = {pool.submit(self._chunk, start, stop): start for start, stop in chunks}
            for future in as_completed(futures):
                done[futures[future]] = future.result()
                logger.info("Backtested %d/%d path chunks", len(done), len(chunks))
        except KeyboardInterrupt:
            pool.shutdown(wait=False, cancel_futures=True)
            logger.warning("interrupted, flushing %d finished path chunks", len(done))
            self._save_runs(self._merge(done)[0])
            raise
        pool.shutdown()
        return self._merge(done)

    def _merge(self, done):
        runs, states, failures = [], [], 0
        for start in sorted(done):
            chunk_runs, chunk_states, chunk_failures = done[start]
            runs += chunk_runs
            states += chunk_states
            failures += chunk_failures
        return runs, states, failures

    def _save_runs(self, runs):
        if runs:
            frame = hedge_runs_frame(runs)
            write_csv(frame, os.path.join(self.path_to_save, "hedge_runs.csv"), self.digest)

    def _bmo_runs(self, runs, states):
        prices = np.array([s[0] for s in states])
        running = np.array([s[1] for s in states])
        phi_bar = np.array([s[2] for s in states])
        panel = StatePanel(self.coarse, prices, running)
        estimates = {}
        for n in self.n_values:
            picked = [run for run in runs if run.n == n]
            cols = self.nets[n].index_of(self.coarse)
            left = np.array([np.asarray(run.knot_errors)[cols] for run in picked])
            terminal = np.array([run.e_corr for run in picked])
            estimate = weighted_bmo_bootstrap(
                left, terminal, phi_bar, panel, self.p, resamples=self.bmo_resamples, seed=self.seed, min_paths=self.min_paths
            )
            estimates[n] = (estimate.value, estimate.std_error)
        return estimates

    def run(self):
        """Simulate, hedge and report; artifacts go to ``path_to_save``"""
        logger.info("Starting rate experiment over n=%s with %d paths", self.n_values, self.paths)
        runs, states, failures = self._simulate()
        if failures:
            logger.warning("oracle did not settle on %d of %d paths", failures, self.paths)
        self._save_runs(runs)
        frame = hedge_runs_frame(runs)
        if self.error_kind is ErrorKind.BMO:
            samples = self._bmo_runs(runs, states)
        else:
            samples = {n: frame.loc[frame["n"] == n, "e_corr"].to_numpy() for n in self.n_values}
        bounds = None
        if self.epsilon_rule.kind == "fixed":
            bounds = {
                n: fixed_epsilon_bound(self.epsilon_rule(n), mesh_size(self.nets[n], self.theta), self.epsilon_rule.r)
                for n in self.n_values
            }
        report = convergence_rate(
            samples,
            self.epsilon_rule.r,
            self.error_kind,
            self.p,
            self.resamples,
            self.seed,
            self.min_samples,
            bounds,
        )
        grouped = frame.groupby("n")
        extras = {
            "mean_corrections": {str(n): float(v) for n, v in grouped["n_corrections"].mean().items()},
            "mean_net_size": {str(n): float(v) for n, v in grouped["net_size"].mean().items()},
            "oracle_not_converged": failures,
        }
        try:
            riemann = convergence_rate(
                {n: frame.loc[frame["n"] == n, "e_rm"].to_numpy() for n in self.n_values},
                self.epsilon_rule.r,
                ErrorKind.L2,
                resamples=self.resamples,
                seed=self.seed,
                min_samples=self.min_samples,
            )
            extras["riemann"] = {"slope": riemann.slope, "ci": list(riemann.slope_ci)}
        except InsufficientData as err:
            logger.debug("no Riemann rate: %s", err)
        report = replace(report, extras=extras)
        self._save_report(report, frame)
        return report

    def _save_report(self, report, frame=None):
        rows = {
            "n": [q.n for q in report.points],
            "error": [q.error for q in report.points],
            "std_error": [q.std_error for q in report.points],
        }
        if frame is not None:
            grouped = frame.groupby("n")
            rows["mean_corrections"] = [float(grouped["n_corrections"].mean()[q.n]) for q in report.points]
            rows["mean_net_size"] = [float(grouped["net_size"].mean()[q.n]) for q in report.points]
        if report.fixed_epsilon_bounds is not None:
            rows["fixed_epsilon_bound"] = [report.fixed_epsilon_bounds[q.n] for q in report.points]
        write_csv(pd.DataFrame(rows), os.path.join(self.path_to_save, "rates.csv"), self.digest)
        write_json(report.to_dict(), os.path.join(self.path_to_save, "report.json"), self.digest)
        save_plot(
            report.points,
            report.predicted_slope,
            os.path.join(self.path_to_save, "rates"),
            "{} error, verdict {}".format(report.error_kind, report.verdict.value),
        )

    def replay(self, filename):
        """Rate report from recorded errors, a CSV with columns n and e_corr"""
        logger.info("Replaying errors from %s", filename)
        frame = pd.read_csv(filename, comment="#")
        samples = {int(n): group["e_corr"].to_numpy() for n, group in frame.groupby("n")}
        report = convergence_rate(
            samples, self.epsilon_rule.r, self.error_kind, self.p, self.resamples, self.seed, self.min_samples
        )
        self._save_report(report)
        return report


def representation_check(ev, levels, paths, seed=0, threads=1, path_to_save=None, digest="", **surface_kwargs):
    """L₂ residual of f(X_T) - [F(0, X_0) + ∫∂_xF dX^c + Σ jump kernels - compensator] under P*

    The right-hand side is discretized on fine grids of the given sizes, with F, ∂_xF and the
    jump compensator tabulated once.

    :return: DataFrame (grid_size, residual, std_error, target, relative)
    """
    triplet = ev.triplet
    values = value_surface(ev, **surface_kwargs)
    gradient = log_gradient_surface(ev, **surface_kwargs)
    delta = jump_cutoff(triplet.nu)
    compensator = jump_compensator_surface(values, triplet.nu, delta)
    start_value = float(ev.value(0.0, 1.0).value)

    def residuals(m, first, last):
        out = []
        for index in range(first, last):
            path = sample_path(triplet, ev.maturity, m, delta, seed, index)
            t, x = path.grid, path.log_x
            left_t, left_x = t[:-1], x[:-1]
            continuous = np.diff(x) - path.drift * np.diff(t) - path.jump_at(t[1:])
            stochastic = float(np.sum(gradient(left_t, np.exp(left_x)) * continuous))
            drift = float(np.sum(compensator(left_t, np.exp(left_x)) * np.diff(t)))
            jumps = 0.0
            if len(path.jump_times):
                pre = path.jump_pre_log
                after = values(path.jump_times, np.exp(pre + path.jump_sizes))
                before = values(path.jump_times, np.exp(pre))
                jumps = float(np.sum(after - before))
            target = float(ev.payoff(np.exp(x[-1])))
            out.append((target - (start_value + stochastic + jumps - drift), target))
        return out

    rows = []
    for m in levels:
        logger.info("Representation check on a %d-point grid", m)
        chunks = [(s, min(s + PATH_CHUNK, paths)) for s in range(0, paths, PATH_CHUNK)]
        done = {}
        with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
            futures = {pool.submit(residuals, m, a, b): a for a, b in chunks}
            for future in as_completed(futures):
                done[futures[future]] = future.result()
        pairs = np.array([pair for start in sorted(done) for pair in done[start]])
        residual = lp_norm(pairs[:, 0], 2.0, seed=seed)
        target = lp_norm(pairs[:, 1], 2.0, seed=seed).value
        rows.append(
            {
                "grid_size": int(m),
                "residual": residual.value,
                "std_error": residual.std_error,
                "target": target,
                "relative": residual.value / target if target > 0 else 0.0,
            }
        )
    frame = pd.DataFrame(rows)
    if path_to_save is not None:
        write_csv(frame, os.path.join(path_to_save, "repcheck.csv"), digest)
    return frame
