"""Experiment runners behind the command line subcommands.

Each runner takes an ExperimentConfig, fans the trials out over a thread pool,
collects the result rows in one place and writes them sorted, so the files do not
depend on the number of workers.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Callable
import json
import logging
import math
import time

import numpy as np

from .archive import SingularSystemArchive
from .config import ExperimentConfig
from .iterative import ITERATIVE_ALGORITHMS, IterativeSpec, scale_operator, solve, spectral_norm
from .linalg import SingularSystem, as_vector, cond2, read_matrix_csv, svd, write_matrix_csv
from .problems import (
    GENERATOR_VERSION, BlurSpec, ProblemInstance, blur_operator, load_image_csv,
    make_cs_instance, make_deblur_instance, sparse_signal, trial_seed,
)
from .recovery import SpectralMethod, recover
from .results import ResultRow, summarize, write_results, write_rows, SUMMARY_COLUMNS
from .tuning import (
    AlphaRule, rerror, run_rate_protocol, select_alpha_discrepancy, success, success_probability,
    timed,
)

__all__ = [
    "Failure",
    "Recovery",
    "BenchReport",
    "score",
    "run_algorithm",
    "run_cs_bench",
    "run_deblur_bench",
    "run_success_curve",
    "run_rate_check",
    "recover_single",
]

log = logging.getLogger(__name__)

_ERRORS = (ValueError, ArithmeticError)
"""Errors of a single (algorithm, trial) pair that do not stop an experiment."""


def _version() -> str:
    try:
        return version("spectral-sparse")
    except PackageNotFoundError:
        return "0+unknown"


@dataclass(frozen=True)
class Failure:
    algorithm: str
    trial: int
    message: str

    def __str__(self):
        return f"{self.algorithm} trial {self.trial}: {self.message}"


@dataclass(frozen=True)
class Recovery:
    """Estimate of one algorithm on one instance."""

    x_hat: np.ndarray
    alpha: float
    iterations: int
    time_ms: float
    residual: float


@dataclass
class BenchReport:
    """What an experiment produced."""

    rows: list[dict] = field(default_factory=list)
    failures: list[Failure] = field(default_factory=list)
    files: dict[str, Path] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def score(x_hat, x_true) -> float:
    """ Relative error, or the absolute error ‖x̂‖ against a zero ground truth."""
    if not np.any(as_vector(x_true, "x_true")):
        return float(np.linalg.norm(x_hat))
    return rerror(x_hat, x_true)


def _spectral(system: SingularSystem, K, y, delta, algorithm: str, rule: AlphaRule):
    if algorithm == "naive":
        return recover(system, y, SpectralMethod("naive")), 0.0
    if rule.kind == "discrepancy":
        choice = select_alpha_discrepancy(
            lambda a: recover(system, y, SpectralMethod.parse(algorithm, a)), K, y, delta, rule
        )
        return choice.x_hat, choice.alpha
    alpha = rule.resolve(delta)
    return recover(system, y, SpectralMethod.parse(algorithm, alpha)), alpha


def _iterative(K, y, delta, algorithm: str, rule: AlphaRule, config: ExperimentConfig,
               sigma_max: float):
    cK, c = scale_operator(K, sigma_max)
    cy, cdelta = c * y, c * delta

    def spec(alpha):
        return IterativeSpec(algorithm, alpha, config.max_iters, config.rel_change_tol)

    if rule.kind != "discrepancy":
        alpha = rule.resolve(cdelta)
        x, trace = solve(cK, cy, spec(alpha), sigma_max=c * sigma_max)
        return x, alpha, trace.iterations_run

    # Warm start every grid point from the estimate of the previous, larger α.
    state = {"x": None, "iterations": {}}

    def solver(alpha):
        x, trace = solve(cK, cy, spec(alpha), x0=state["x"], sigma_max=c * sigma_max)
        state["x"] = x
        state["iterations"][alpha] = trace.iterations_run
        return x

    choice = select_alpha_discrepancy(solver, cK, cy, cdelta, rule)
    return choice.x_hat, choice.alpha, state["iterations"][choice.alpha]


def run_algorithm(
    algorithm: str,
    instance: ProblemInstance,
    config: ExperimentConfig,
    system: SingularSystem | None = None,
    svd_ms: float = 0.0,
) -> Recovery:
    """ Recover one instance with one algorithm.

    Args:
        algorithm: Spectral or iterative algorithm name.
        instance: The problem.
        config: Supplies the α rule and the iteration controls.
        system: Singular system of instance.K. Computed and timed if None.
        svd_ms: Time already spent on `system`; added to spectral times.
    """
    K, y, delta = instance.K, instance.y_noisy, instance.delta
    rule = config.rule_for(algorithm)
    if algorithm in ITERATIVE_ALGORITHMS:
        sigma_max = float(system.sigma[0]) if system is not None else spectral_norm(K)
        (x_hat, alpha, iterations), ms = timed(
            _iterative, K, y, delta, algorithm, rule, config, sigma_max
        )
    else:
        if system is None:
            system, svd_ms = timed(svd, K)
        (x_hat, alpha), ms = timed(_spectral, system, K, y, delta, algorithm, rule)
        iterations, ms = 0, ms + svd_ms
    residual = float(np.linalg.norm(K @ x_hat - y))
    return Recovery(x_hat, float(alpha), int(iterations), ms, residual)


def _row(algorithm, instance: ProblemInstance, result: Recovery, config, seed) -> ResultRow:
    error = score(result.x_hat, instance.x_true)
    m, n = instance.K.shape
    return ResultRow(
        algorithm=algorithm,
        m=m,
        n=n,
        s=instance.sparsity,
        snr_db=float(instance.snr_db),
        alpha=result.alpha,
        rerror=error,
        iterations=result.iterations,
        time_ms=result.time_ms if config.timing == "wall" else 0.0,
        success=success(error, config.success_threshold),
        seed=seed,
    )


def _run_trial(
    make: Callable[[], ProblemInstance],
    trial: int,
    config: ExperimentConfig,
    system: SingularSystem | None = None,
    svd_ms: float = 0.0,
) -> tuple[list[tuple[int, ResultRow]], list[Failure]]:
    """ Build one instance and run every configured algorithm on it."""
    try:
        instance = make()
    except _ERRORS as exc:
        return [], [Failure(e, trial, str(exc)) for e in config.algorithms]

    needs_svd = any(e not in ITERATIVE_ALGORITHMS for e in config.algorithms)
    svd_error = None
    if system is None and needs_svd:
        try:
            system, svd_ms = timed(svd, instance.K)
        except _ERRORS as exc:
            svd_error = exc

    rows, failures = [], []
    for algorithm in config.algorithms:
        if svd_error is not None and algorithm not in ITERATIVE_ALGORITHMS:
            failures.append(Failure(algorithm, trial, str(svd_error)))
            continue
        try:
            result = run_algorithm(algorithm, instance, config, system, svd_ms)
            rows.append((trial, _row(algorithm, instance, result, config, instance.seed)))
        except _ERRORS as exc:
            log.warning("%s failed on trial %d: %s", algorithm, trial, exc)
            failures.append(Failure(algorithm, trial, str(exc)))
    return rows, failures


def _collect(tasks: list[Callable], workers: int):
    rows, failures = [], []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for task_rows, task_failures in pool.map(lambda task: task(), tasks):
            rows.extend(task_rows)
            failures.extend(task_failures)
    rows.sort(key=lambda e: (e[1].algorithm, e[1].m, e[1].n, e[1].s, e[0]))
    return [row for _, row in rows], failures


def _write_meta(directory: Path, config: ExperimentConfig, **extra) -> Path:
    clock = time.get_clock_info("perf_counter")
    meta = {
        "tool": "spectral-sparse",
        "version": _version(),
        "generator": GENERATOR_VERSION,
        "config": config.echo(),
        "clock": {
            "timing": config.timing,
            "source": "time.perf_counter",
            "implementation": clock.implementation,
            "resolution": clock.resolution,
        },
        **extra,
    }
    path = directory / "meta.json"
    path.write_text(json.dumps(meta, indent=2), encoding="utf-8")
    return path


def _write_bench(directory: Path, rows, report: BenchReport, prefix: str = ""):
    directory.mkdir(parents=True, exist_ok=True)
    report.files[prefix + "results"] = write_results(directory / "results.csv", rows)
    report.files[prefix + "summary"] = write_rows(
        directory / "summary.csv", summarize(rows), SUMMARY_COLUMNS
    )


def run_cs_bench(config: ExperimentConfig) -> BenchReport:
    """ Compressive sensing benchmark over Gaussian operators of the configured sizes.

    Writes results.csv (one row per algorithm, size and trial), summary.csv with
    medians per algorithm and size, and meta.json.
    """
    tasks = []
    for index, (m, n) in enumerate(config.sizes):
        s = config.sparsity_for(index, m)
        for trial in range(config.trials):
            seed = trial_seed(config.seed, m, n, trial)

            def make(m=m, n=n, s=s, seed=seed):
                return make_cs_instance(m, n, s, config.snr_db, seed)

            tasks.append(lambda make=make, trial=trial: _run_trial(make, trial, config))

    rows, failures = _collect(tasks, config.workers)
    report = BenchReport(rows=rows, failures=failures)
    out = Path(config.output_dir)
    _write_bench(out, rows, report)
    report.files["meta"] = _write_meta(out, config)
    return report


def _blur_system(spec: BlurSpec, K, cache: Path | None) -> tuple[SingularSystem, float]:
    if cache is not None and cache.exists():
        with SingularSystemArchive(cache) as archive:
            if spec.key in archive.keys():
                return archive.get(spec.key), 0.0
        log.info("%s holds no %s; decomposing.", cache, spec.key)
    return timed(svd, K)


def run_deblur_bench(config: ExperimentConfig) -> BenchReport:
    """ Deblurring benchmark over the configured image sizes and blur widths.

    Every (n, τ) pair gets a subdirectory "n{n}-tau{τ}" with results.csv and
    summary.csv; conditioning.csv lists cond(K) per pair. The image of a trial only
    depends on n and the trial, so all τ see the same images.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = BenchReport()
    conditioning = []
    for n in config.image_sizes:
        image = None if config.image_path is None else load_image_csv(config.image_path, n)
        for tau in config.taus:
            spec = BlurSpec(n, config.band, tau)
            K = blur_operator(spec)
            system, svd_ms = _blur_system(spec, K, config.svd_cache)
            conditioning.append(
                {"n": n, "band": spec.band, "tau": tau, "cond": cond2(system), "rank": system.rank}
            )
            tasks = []
            for trial in range(config.trials):
                seed = trial_seed(config.seed, n, trial)

                def make(seed=seed):
                    return make_deblur_instance(
                        spec, image, config.snr_db, seed, config.image_sparsity, K=K
                    )

                tasks.append(
                    lambda make=make, trial=trial: _run_trial(make, trial, config, system, svd_ms)
                )
            rows, failures = _collect(tasks, config.workers)
            report.rows.extend(rows)
            report.failures.extend(failures)
            directory = out / f"n{n}-tau{tau:g}"
            _write_bench(directory, rows, report, prefix=f"{directory.name}/")

    report.files["conditioning"] = write_rows(
        out / "conditioning.csv", conditioning, ["n", "band", "tau", "cond", "rank"]
    )
    report.files["meta"] = _write_meta(out, config)
    return report


def run_success_curve(config: ExperimentConfig) -> BenchReport:
    """ Success rate of each algorithm as the number of nonzeros grows.

    For family "cs" the size is config.sizes[0] and every trial draws a new operator.
    For "deblur" the operator is the blur of image_sizes[0] and taus[0], decomposed
    once. Writes results.csv with every trial and success.csv in long format
    (supp, algorithm, trials, success_rate).
    """
    system, svd_ms = None, 0.0
    if config.family == "deblur":
        spec = BlurSpec(config.image_sizes[0], config.band, config.taus[0])
        K = blur_operator(spec)
        system, svd_ms = _blur_system(spec, K, config.svd_cache)
        length = spec.n * spec.n
    else:
        m, length = config.sizes[0]

    tasks = []
    for supp in config.supports:
        if supp > length:
            raise ValueError(f"Support {supp} exceeds the signal length {length}.")
        for trial in range(config.trials):
            seed = trial_seed(config.seed, supp, trial)
            if config.family == "deblur":
                def make(supp=supp, seed=seed):
                    x = sparse_signal(length, supp, seed)
                    return make_deblur_instance(spec, x, config.snr_db, seed, K=K)
            else:
                def make(supp=supp, seed=seed):
                    return make_cs_instance(m, length, supp, config.snr_db, seed)

            tasks.append(
                lambda make=make, trial=trial: _run_trial(make, trial, config, system, svd_ms)
            )

    rows, failures = _collect(tasks, config.workers)
    report = BenchReport(rows=rows, failures=failures)
    curve = []
    for supp in config.supports:
        for algorithm in config.algorithms:
            members = [e for e in rows if e.s == supp and e.algorithm == algorithm]
            if members:
                curve.append({
                    "supp": supp,
                    "algorithm": algorithm,
                    "trials": len(members),
                    "success_rate": success_probability([e.metrics() for e in members]),
                })
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.files["results"] = write_results(out / "results.csv", rows)
    report.files["success"] = write_rows(
        out / "success.csv", curve, ["supp", "algorithm", "trials", "success_rate"]
    )
    report.files["meta"] = _write_meta(out, config)
    return report


def run_rate_check(config: ExperimentConfig) -> BenchReport:
    """ Error rates of l1-SVD against the noise level on diagonal synthetics.

    Writes rates.csv (regime, rule, delta, alpha, error) and slopes.csv with the
    fitted log-log slope and R² per regime and rule.
    """
    rates, slopes = [], []
    for regime in config.rate_regimes:
        rows, fits = run_rate_protocol(regime, config.seed)
        rates.extend(rows)
        slopes.extend(fits)
        if not any(e["reproduces"] for e in fits):
            log.warning(
                "No rule of regime %s reproduces the slope %.3g.", regime.name, regime.expected_slope
            )
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = BenchReport(rows=slopes)
    report.files["rates"] = write_rows(
        out / "rates.csv", rates, ["regime", "rule", "delta", "alpha", "error"]
    )
    report.files["slopes"] = write_rows(
        out / "slopes.csv", slopes,
        ["regime", "rule", "exponent", "slope", "r_squared", "expected_slope", "reproduces"],
    )
    report.files["meta"] = _write_meta(out, config)
    return report


def recover_single(
    config: ExperimentConfig,
    operator_path: Path | str | None = None,
    data_path: Path | str | None = None,
    instance_dir: Path | str | None = None,
    delta: float | None = None,
) -> BenchReport:
    """ Recover x from a stored operator and data with config.algorithms[0].

    Either `instance_dir` (written by ProblemInstance.save) or both `operator_path`
    and `data_path` must be given. Writes x_hat.csv and x_hat.json with the α used,
    the iterations, the residual and the time.

    Raises:
        ValueError: If a file does not parse, the dimensions disagree, or a rule
            needs a noise level that is not known.
    """
    if instance_dir is not None:
        instance = ProblemInstance.load(instance_dir)
        if delta is not None:
            instance = ProblemInstance(
                instance.K, instance.x_true, instance.y_clean, instance.y_noisy,
                delta, instance.snr_db, instance.seed, instance.meta,
            )
    else:
        if operator_path is None or data_path is None:
            raise ValueError("Give an instance directory or both an operator and a data file.")
        K = read_matrix_csv(operator_path)
        y = read_matrix_csv(data_path)
        if y.shape[1] != 1 and y.shape[0] != 1:
            raise ValueError(f'Data file "{data_path}" must hold a vector, got shape {y.shape}.')
        y = y.reshape(-1)
        if y.shape[0] != K.shape[0]:
            raise ValueError(
                f'Data file "{data_path}" has {y.shape[0]} entries but operator file '
                f'"{operator_path}" has {K.shape[0]} rows.'
            )
        algorithm = config.algorithms[0]
        if delta is None and config.rule_for(algorithm).needs_delta and algorithm != "naive":
            raise ValueError(f"The {config.rule_for(algorithm).kind} rule needs a noise level.")
        zeros = np.zeros(K.shape[1])
        instance = ProblemInstance(K, zeros, y, y, delta or 0.0, math.inf, config.seed)

    algorithm = config.algorithms[0]
    result = run_algorithm(algorithm, instance, config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    sidecar = {
        "algorithm": algorithm,
        "alpha": result.alpha,
        "iterations": result.iterations,
        "residual": result.residual,
        "time_ms": result.time_ms if config.timing == "wall" else 0.0,
        "delta": instance.delta,
    }
    if instance_dir is not None:
        sidecar["rerror"] = score(result.x_hat, instance.x_true)
    write_matrix_csv(out / "x_hat.csv", result.x_hat)
    (out / "x_hat.json").write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
    return BenchReport(
        rows=[sidecar], files={"x_hat": out / "x_hat.csv", "sidecar": out / "x_hat.json"}
    )
