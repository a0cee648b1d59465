"""Test functions, data simulation, error metrics, benchmark drivers,
and dataset ingestion.

Every driver takes an explicit seed and derives all randomness from it
through named spawn points, so a report is exactly reproducible and
independent of worker scheduling.  Wall-clock timings are kept out of
the canonical report payload for the same reason.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtri

from .baselines import estimate_variances, fit_gpr, fit_nystrom, fit_spgp
from .designs import chebyshev_knots, equispaced_knots, next_knot, replication_design, select_knots
from .errors import BadSchema, DimensionMismatch, UnknownFunction
from .estimators import (
    estimate_kernel_params,
    fit_gprr,
    fit_krr,
    fit_replication,
    predict,
)
from .kernels import default_gaussian
from .interpolators import KnotSet

# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------

BOREHOLE_RANGES = {
    "rw": (0.05, 0.15),
    "r": (100.0, 50_000.0),
    "Tu": (63_070.0, 115_600.0),
    "Hu": (990.0, 1110.0),
    "Tl": (63.1, 116.0),
    "Hl": (700.0, 820.0),
    "L": (1120.0, 1680.0),
    "Kw": (1500.0, 15_000.0),
}

_BOREHOLE_LO = np.array([v[0] for v in BOREHOLE_RANGES.values()])
_BOREHOLE_HI = np.array([v[1] for v in BOREHOLE_RANGES.values()])

TEST_FUNCTIONS = ("f1d", "I", "II", "III", "borehole")


def borehole_inputs(X01: np.ndarray) -> np.ndarray:
    """Map unit-cube coordinates to the physical input ranges."""
    return _BOREHOLE_LO + np.asarray(X01, dtype=float) * (_BOREHOLE_HI - _BOREHOLE_LO)


def _f1d(x):
    return np.exp(-1.4 * x) * np.cos(3.5 * np.pi * x)


def _weighted_sphere(X):
    d = X.shape[1]
    return X**2 @ np.arange(1.0, d + 1.0)


def _ackley_printed(X):
    # second exponential acts on the plain coordinate mean, not its cosine
    d = X.shape[1]
    return (
        -20.0 * np.exp(-0.2 * np.sqrt(np.mean(X**2, axis=1)))
        - np.exp(np.mean(2.0 * np.pi * X, axis=1))
        + 20.0
        + math.e
    )


def _ackley_standard(X):
    return (
        -20.0 * np.exp(-0.2 * np.sqrt(np.mean(X**2, axis=1)))
        - np.exp(np.mean(np.cos(2.0 * np.pi * X), axis=1))
        + 20.0
        + math.e
    )


def _yang(X):
    return -np.sum(X, axis=1) * np.exp(-np.sum(X**2, axis=1))


def _borehole(X):
    Z = borehole_inputs(X)
    rw, r, Tu, Hu, Tl, Hl, L, Kw = (Z[:, j] for j in range(8))
    logrr = np.log(r / rw)
    return (
        2.0
        * np.pi
        * Tu
        * (Hu - Hl)
        / (logrr * (1.0 + 2.0 * L * Tu / (logrr * rw**2 * Kw) + Tu / Tl))
    )


def test_function(fid: str, x, ackley_standard: bool = False):
    """Evaluate a benchmark regression function on the unit hypercube.

    ``fid`` is one of f1d, I (weighted sphere), II (Ackley-type; the
    default omits the cosine inside the second exponential, set
    ``ackley_standard`` for the textbook form), III (Yang), borehole.
    """
    x = np.asarray(x, dtype=float)
    if fid == "f1d":
        return _f1d(x if x.ndim <= 1 else x[:, 0])
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if fid == "borehole" and X.shape[1] != 8:
        raise DimensionMismatch("the borehole model takes 8 inputs")
    table = {
        "I": _weighted_sphere,
        "II": _ackley_standard if ackley_standard else _ackley_printed,
        "III": _yang,
        "borehole": _borehole,
    }
    if fid not in table:
        raise UnknownFunction(f"unknown test function {fid!r}; choose from {TEST_FUNCTIONS}")
    vals = table[fid](X)
    return float(vals[0]) if single else vals


def function_dimension(fid: str) -> Optional[int]:
    """Fixed input dimension of a test function, or None if free."""
    return {"f1d": 1, "borehole": 8}.get(fid)


# ---------------------------------------------------------------------------
# simulation, metrics
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    Xtest: Optional[np.ndarray] = None
    ytest: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)


def _normal_from_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    # inverse-CDF transform of the seeded uniform stream; clipping the
    # open-interval edges keeps the quantile finite
    u = np.clip(rng.random(size), 1e-15, 1.0 - 1e-16)
    return ndtri(u)


def simulate(
    fid: str,
    n: int,
    d: Optional[int] = None,
    sigma: float = 1.0,
    seed=None,
    ackley_standard: bool = False,
) -> Dataset:
    """Uniform design on the unit cube plus Gaussian noise, fully seeded."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    fixed = function_dimension(fid)
    if fixed is not None:
        if d is not None and d != fixed:
            raise DimensionMismatch(f"{fid} is {fixed}-dimensional")
        d = fixed
    if d is None:
        raise ValueError("d is required for dimension-free test functions")
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    y = np.asarray(test_function(fid, X, ackley_standard), dtype=float)
    if sigma > 0:
        y = y + sigma * _normal_from_uniform(rng, n)
    return Dataset(X=X, y=y, meta={"function": fid, "sigma": sigma})


def evaluate(model, Xtest, truth_values) -> float:
    """Mean squared prediction error against noiseless truth."""
    preds = predict(model, Xtest)
    truth_values = np.asarray(truth_values, dtype=float).ravel()
    return float(np.mean((preds - truth_values) ** 2))


def mise_1d(model_or_fn, truth_fn, grid_size: int = 1001) -> float:
    """Trapezoid integral of the squared error over the unit interval."""
    grid = np.linspace(0.0, 1.0, grid_size)
    if callable(model_or_fn):
        vals = np.asarray(model_or_fn(grid))
    else:
        vals = predict(model_or_fn, grid[:, None])
    err2 = (vals - np.asarray(truth_fn(grid))) ** 2
    return float(np.trapezoid(err2, grid))


# ---------------------------------------------------------------------------
# configs and reports
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """Desk-scale defaults; full-scale values go through the same fields."""

    function: str = "I"
    d: int = 2
    n: int = 200
    sigma: float = 1.0
    m: Optional[int] = None
    methods: tuple = ("krr", "gpr", "gprr")
    repetitions: int = 20
    inner_draws: int = 10
    test_size: int = 2000
    seed: Optional[int] = None
    lambda_grid: Optional[list] = None
    theta: Optional[float] = 12.5
    estimate_theta: bool = False
    ackley_standard: bool = False
    trials: int = 20_000
    bcd_max_iter: int = 10
    bcd_tol: float = 1e-3
    iterations: int = 15
    sigma_grid: Optional[list] = None
    jobs: int = 1

    def to_dict(self) -> dict:
        out = asdict(self)
        out["methods"] = list(self.methods)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        obj = dict(obj)
        if "methods" in obj and obj["methods"] is not None:
            obj["methods"] = tuple(obj["methods"])
        return cls(**obj)


@dataclass
class BenchmarkReport:
    kind: str
    config: dict
    per_run: list
    summary: dict
    seed: Optional[int]
    knots: Optional[list] = None
    errors: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        """Canonical payload; timings and the worker count are reported
        separately because they do not define the experiment."""
        config = {k: v for k, v in self.config.items() if k != "jobs"}
        return {
            "kind": self.kind,
            "config": config,
            "per_run": self.per_run,
            "summary": self.summary,
            "seed": self.seed,
            "knots": self.knots,
            "errors": self.errors,
        }


def _mean_sd(values) -> dict:
    arr = np.asarray(values, dtype=float)
    out = {"mean": float(np.mean(arr)) if arr.size else math.nan}
    out["sd"] = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    out["count"] = int(arr.size)
    return out


def _spawn_rngs(seed, labels):
    """One child generator per label, all derived from the master seed."""
    children = np.random.SeedSequence(seed).spawn(len(labels))
    return dict(zip(labels, (np.random.default_rng(c) for c in children)))


# ---------------------------------------------------------------------------
# Table-1 style comparison (all knots at the data)
# ---------------------------------------------------------------------------


def _table1_rep(cfg_dict: dict, rep: int) -> dict:
    cfg = ExperimentConfig.from_dict(cfg_dict)
    root = np.random.SeedSequence(cfg.seed).spawn(cfg.repetitions)[rep]
    train_ss, test_ss = root.spawn(2)
    train = simulate(cfg.function, cfg.n, cfg.d, cfg.sigma, train_ss, cfg.ackley_standard)
    rng_test = np.random.default_rng(test_ss)
    Xtest = rng_test.random((cfg.test_size, train.X.shape[1]))
    truth = test_function(cfg.function, Xtest, cfg.ackley_standard)
    spec = default_gaussian(train.X.shape[1]) if cfg.theta is None else None
    if spec is None:
        from .kernels import gaussian_kernel

        spec = gaussian_kernel(np.full(train.X.shape[1], cfg.theta))
    grid = None if cfg.lambda_grid is None else np.asarray(cfg.lambda_grid, dtype=float)
    out = {"rep": rep, "mse": {}, "lambda": {}, "failed": {}}
    for method in cfg.methods:
        try:
            if method == "krr":
                model = fit_krr(train.X, train.y, spec, "gcv", grid)
            elif method == "gpr":
                model = fit_gpr(train.X, train.y, spec, "constant+linear", "gcv", grid)
            elif method == "gprr":
                model = fit_gprr(
                    train.X, train.y, None, spec, "constant+linear", "gcv", grid
                )
            else:
                raise ValueError(f"unknown method {method!r} for this study")
            out["mse"][method] = evaluate(model, Xtest, truth)
            out["lambda"][method] = float(model.lam)
        except Exception as exc:  # noqa: BLE001 - failures are reported, not fatal
            out["failed"][method] = f"{type(exc).__name__}: {exc}"
    return out


def run_table1(config: ExperimentConfig) -> BenchmarkReport:
    """Full-knot comparison of kernel ridge, kriging, and reconstruction fits."""
    if config.seed is None:
        raise ValueError("a seed is required")
    bad = set(config.methods) - {"krr", "gpr", "gprr"}
    if bad:
        raise ValueError(f"unsupported methods {sorted(bad)}")
    t0 = time.perf_counter()
    cfg_dict = config.to_dict()
    per_run = _map_indexed(_table1_rep, cfg_dict, config.repetitions, config.jobs)
    summary = {}
    errors = []
    for method in config.methods:
        vals = [r["mse"][method] for r in per_run if method in r["mse"]]
        summary[method] = _mean_sd(vals)
    for r in per_run:
        for method, msg in r["failed"].items():
            errors.append({"rep": r["rep"], "method": method, "error": msg})
    return BenchmarkReport(
        kind="table1",
        config=cfg_dict,
        per_run=per_run,
        summary=summary,
        seed=config.seed,
        errors=errors,
        timings={"total_s": time.perf_counter() - t0},
    )


def _map_indexed(fn, cfg_dict, count, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(fn, [cfg_dict] * count, range(count)))
    else:
        results = [fn(cfg_dict, i) for i in range(count)]
    return results


# ---------------------------------------------------------------------------
# Table-3 style comparison (m knots drawn from the data)
# ---------------------------------------------------------------------------


def _table3_outer(cfg_dict: dict, outer: int) -> dict:
    cfg = ExperimentConfig.from_dict(cfg_dict)
    root = np.random.SeedSequence(cfg.seed).spawn(cfg.repetitions)[outer]
    train_ss, test_ss, subset_ss = root.spawn(3)
    train = simulate(cfg.function, cfg.n, cfg.d, cfg.sigma, train_ss)
    rng_test = np.random.default_rng(test_ss)
    Xtest = rng_test.random((cfg.test_size, train.X.shape[1]))
    truth = test_function(cfg.function, Xtest)
    rng_subset = np.random.default_rng(subset_ss)
    m = cfg.m or 10 * train.X.shape[1]
    grid = None if cfg.lambda_grid is None else np.asarray(cfg.lambda_grid, dtype=float)
    inner_runs = []
    for inner in range(cfg.inner_draws):
        idx = np.sort(rng_subset.choice(cfg.n, size=m, replace=False))
        A = KnotSet(train.X[idx])
        rec = {"inner": inner, "indices": idx.tolist(), "mse": {}, "failed": {}}
        theta0 = np.full(train.X.shape[1], cfg.theta if cfg.theta else 12.5)
        try:
            kp = estimate_kernel_params(
                train.X,
                train.y,
                A,
                "constant+linear",
                theta0,
                max_iter=cfg.bcd_max_iter,
                tol=cfg.bcd_tol,
            )
            spec = kp.model.kernel
            rec["theta"] = [float(t) for t in kp.theta]
            rec["mse"]["gprr"] = evaluate(kp.model, Xtest, truth)
        except Exception as exc:  # noqa: BLE001
            rec["failed"]["gprr"] = f"{type(exc).__name__}: {exc}"
            inner_runs.append(rec)
            continue
        if "nystrom" in cfg.methods:
            try:
                mod = fit_nystrom(train.X, train.y, A, spec, "constant+linear", "gcv", grid)
                rec["mse"]["nystrom"] = evaluate(mod, Xtest, truth)
            except Exception as exc:  # noqa: BLE001
                rec["failed"]["nystrom"] = f"{type(exc).__name__}: {exc}"
        if "spgp" in cfg.methods:
            try:
                vp = estimate_variances(train.X, train.y, A, spec)
                mod = fit_spgp(train.X, train.y, A, spec, vp)
                rec["mse"]["spgp"] = evaluate(mod, Xtest, truth)
                rec["variances"] = {"tau2": vp.tau2, "sigma2": vp.sigma2}
            except Exception as exc:  # noqa: BLE001
                rec["failed"]["spgp"] = f"{type(exc).__name__}: {exc}"
        inner_runs.append(rec)
    out = {"outer": outer, "inner": inner_runs, "mean": {}, "sd": {}}
    for method in cfg.methods:
        vals = [r["mse"][method] for r in inner_runs if method in r["mse"]]
        if vals:
            stats = _mean_sd(vals)
            out["mean"][method] = stats["mean"]
            out["sd"][method] = stats["sd"]
    return out


def run_table3(config: ExperimentConfig) -> BenchmarkReport:
    """Subset-knot comparison: average test error and its spread over
    random knot subsets, then averaged over fresh data draws."""
    if config.seed is None:
        raise ValueError("a seed is required")
    bad = set(config.methods) - {"nystrom", "spgp", "gprr"}
    if bad:
        raise ValueError(f"unsupported methods {sorted(bad)}")
    t0 = time.perf_counter()
    cfg_dict = config.to_dict()
    outers = _map_indexed(_table3_outer, cfg_dict, config.repetitions, config.jobs)
    summary = {}
    for method in config.methods:
        means = [o["mean"][method] for o in outers if method in o["mean"]]
        sds = [o["sd"][method] for o in outers if method in o["sd"]]
        summary[method] = {
            "mmse": float(np.mean(means)) if means else math.nan,
            "mstd": float(np.mean(sds)) if sds else math.nan,
            "outer_means": [float(v) for v in means],
        }
    errors = [
        {"outer": o["outer"], "inner": r["inner"], "method": meth, "error": msg}
        for o in outers
        for r in o["inner"]
        for meth, msg in r["failed"].items()
    ]
    knots = [[r["indices"] for r in o["inner"]] for o in outers]
    return BenchmarkReport(
        kind="table3",
        config=cfg_dict,
        per_run=outers,
        summary=summary,
        seed=config.seed,
        knots=knots,
        errors=errors,
        timings={"total_s": time.perf_counter() - t0},
    )


# ---------------------------------------------------------------------------
# replication-design study
# ---------------------------------------------------------------------------


def run_replication_study(config: ExperimentConfig) -> BenchmarkReport:
    """Replication designs with polynomial and spline reconstruction on the
    oscillating 1-D target, across a noise grid."""
    if config.seed is None:
        raise ValueError("a seed is required")
    t0 = time.perf_counter()
    sigma_grid = config.sigma_grid or [0.05, 0.15, 0.25, 0.35, 0.45, 0.55]
    m = config.m or 7
    l = m
    per_run = []
    children = np.random.SeedSequence(config.seed).spawn(len(sigma_grid))
    for s_idx, sigma in enumerate(sigma_grid):
        reps = children[s_idx].spawn(config.repetitions)
        for rep in range(config.repetitions):
            rng = np.random.default_rng(reps[rep])
            rec = {"sigma": float(sigma), "rep": rep, "mise": {}}
            for method, knots in (
                ("lagrange", chebyshev_knots(m)),
                ("spline", equispaced_knots(m)),
            ):
                design = replication_design(knots, l)
                fvals = np.repeat(test_function("f1d", knots), l)
                yv = fvals + sigma * _normal_from_uniform(rng, design.n)
                model = fit_replication(design, yv, method)
                rec["mise"][method] = mise_1d(
                    model, lambda g: test_function("f1d", g)
                )
            per_run.append(rec)
    summary = {}
    for method in ("lagrange", "spline"):
        summary[method] = {
            str(s): _mean_sd(
                [r["mise"][method] for r in per_run if r["sigma"] == s]
            )
            for s in sigma_grid
        }
    return BenchmarkReport(
        kind="replication",
        config=config.to_dict(),
        per_run=per_run,
        summary=summary,
        seed=config.seed,
        timings={"total_s": time.perf_counter() - t0},
    )


# ---------------------------------------------------------------------------
# power-plant data
# ---------------------------------------------------------------------------

CCPP_COLUMNS = ("AT", "V", "AP", "RH", "PE")
CCPP_EXPECTED_ROWS = 9568
CCPP_TRAIN_ROWS = 9000


def load_ccpp(path) -> Dataset:
    """Load the power-plant CSV, split train/test, min-max scale features.

    The first 9000 rows train, the remainder test; feature scaling uses
    training minima and maxima only, and the response stays in its
    original units.  A row count other than 9568 is recorded as a
    warning, not an error.
    """
    raw = np.genfromtxt(path, delimiter=",", names=True)
    if raw.dtype.names is None or tuple(raw.dtype.names) != CCPP_COLUMNS:
        raise BadSchema(
            f"expected columns {CCPP_COLUMNS}, found {raw.dtype.names}"
        )
    table = np.column_stack([raw[c] for c in CCPP_COLUMNS]).astype(float)
    if np.isnan(table).any():
        raise BadSchema("non-numeric entries in the data file")
    n_rows = table.shape[0]
    meta = {"row_count": int(n_rows)}
    if n_rows != CCPP_EXPECTED_ROWS:
        warnings.warn(
            f"expected {CCPP_EXPECTED_ROWS} rows, found {n_rows}", stacklevel=2
        )
        meta["row_count_warning"] = True
    train, test = table[:CCPP_TRAIN_ROWS], table[CCPP_TRAIN_ROWS:]
    lo = train[:, :4].min(axis=0)
    hi = train[:, :4].max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    meta["feature_min"] = lo.tolist()
    meta["feature_max"] = hi.tolist()
    Xtest = ytest = None
    if test.shape[0]:
        Xtest = (test[:, :4] - lo) / span
        ytest = test[:, 4]
    return Dataset(
        X=(train[:, :4] - lo) / span,
        y=train[:, 4],
        Xtest=Xtest,
        ytest=ytest,
        meta=meta,
    )


def run_ccpp(dataset: Dataset, config: ExperimentConfig) -> BenchmarkReport:
    """Knot selection, the three-method comparison, then sequential
    knot addition tracked by GCV and test error."""
    if config.seed is None:
        raise ValueError("a seed is required")
    t0 = time.perf_counter()
    X, y = dataset.X, dataset.y
    n, d = X.shape
    m0 = config.m or 10 * d
    rngs = _spawn_rngs(config.seed, ["select"])
    selection = select_knots(X, m0, trials=config.trials, seed=rngs["select"])
    indices = selection.indices.copy()
    theta0 = np.full(d, config.theta if config.theta else 12.5)
    kp = estimate_kernel_params(
        X, y, selection.knots, "constant+linear", theta0,
        max_iter=config.bcd_max_iter, tol=config.bcd_tol,
    )
    spec = kp.model.kernel
    initial = {}
    test_pair = (dataset.Xtest, dataset.ytest)
    if test_pair[0] is not None:
        initial["gprr"] = evaluate(kp.model, *test_pair)
        try:
            mod = fit_nystrom(X, y, selection.knots, spec, "constant+linear", "gcv")
            initial["nystrom"] = evaluate(mod, *test_pair)
        except Exception as exc:  # noqa: BLE001
            initial["nystrom_error"] = f"{type(exc).__name__}: {exc}"
        try:
            vp = estimate_variances(X, y, selection.knots, spec)
            mod = fit_spgp(X, y, selection.knots, spec, vp)
            initial["spgp"] = evaluate(mod, *test_pair)
        except Exception as exc:  # noqa: BLE001
            initial["spgp_error"] = f"{type(exc).__name__}: {exc}"
    trajectory, indices = _sequential_knots(
        X, y, indices, kp, config, test_pair
    )
    return BenchmarkReport(
        kind="ccpp",
        config=config.to_dict(),
        per_run=trajectory,
        summary={
            "initial_test_errors": initial,
            "final_gcv": trajectory[-1]["gcv"],
            "initial_gcv": trajectory[0]["gcv"],
        },
        seed=config.seed,
        knots=[int(i) for i in indices],
        errors=[],
        timings={"total_s": time.perf_counter() - t0},
    )


def _gcv_at_zero_penalty(rss_over_n: float, n: int, m: int) -> float:
    return rss_over_n / (1.0 - m / n) ** 2


def _sequential_knots(X, y, indices, kp, config, test_pair):
    """Grow the knot set one residual-argmax point at a time."""
    n = X.shape[0]
    indices = list(int(i) for i in indices)
    model = kp.model
    theta = kp.theta
    rss_over_n = kp.objective_trace[-1]
    trajectory = [
        _traj_record(0, len(indices), rss_over_n, n, model, test_pair, None)
    ]
    stall = 0
    for it in range(1, config.iterations + 1):
        preds = predict(model, X)
        new_idx = next_knot(X, model.knots, y, predictions=preds,
                            exclude_indices=indices)
        indices.append(int(new_idx))
        A = KnotSet(X[np.asarray(indices)])
        kp = estimate_kernel_params(
            X, y, A, "constant+linear", theta,
            max_iter=config.bcd_max_iter, tol=config.bcd_tol,
        )
        model, theta = kp.model, kp.theta
        rss_over_n = kp.objective_trace[-1]
        trajectory.append(
            _traj_record(it, len(indices), rss_over_n, n, model, test_pair, new_idx)
        )
        prev, cur = trajectory[-2]["gcv"], trajectory[-1]["gcv"]
        stall = stall + 1 if cur > prev * (1.0 - 1e-3) else 0
        if stall >= 3:
            break
    return trajectory, indices


def _traj_record(it, m, rss_over_n, n, model, test_pair, added):
    rec = {
        "iteration": it,
        "m": int(m),
        "gcv": float(_gcv_at_zero_penalty(rss_over_n, n, m)),
        "added_index": added,
    }
    if test_pair[0] is not None:
        rec["test_error"] = evaluate(model, *test_pair)
    return rec


def run_ccpp_sequential(dataset: Dataset, config: ExperimentConfig) -> BenchmarkReport:
    """The sequential stage alone (knot selection plus knot addition)."""
    return run_ccpp(dataset, config)
