"""Monte Carlo comparison of the six estimators.

Every replication draws one sample and applies all requested methods to it,
so relative efficiencies are paired comparisons.  The sample for replication
``r`` of a cell is seeded from ``(base_seed, family, tau_level, n, r)`` alone,
which makes results independent of the number of workers, of the number of
replications and of which methods are enabled.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import copulas
from .copula_estimator import estimate
from .copulas import CopulaFamily
from .estimators import Method
from .exceptions import NumericalError
from .inference import attach_standard_error
from .pseudo_obs import ranks, scheme_values

__all__ = [
    "ExperimentConfig",
    "MetricsRow",
    "PreRow",
    "Outcome",
    "replication_seed",
    "run_replication",
    "run_cell",
    "run_experiment",
    "summarise",
    "relative_efficiency",
    "asymptotic_pre",
]

logger = logging.getLogger(__name__)

DEFAULT_TAUS = (0.1, 0.2, 0.3, 0.4, 0.6, 0.8)
DEFAULT_SIZES = (50, 100, 200, 400)
ALL_METHODS = tuple(m.value for m in Method)
ALL_FAMILIES = tuple(f.value for f in CopulaFamily)
_FAMILY_CODE = {CopulaFamily.CLAYTON: 1, CopulaFamily.GUMBEL: 2, CopulaFamily.PLACKETT: 3}
# Distinguishes the one-sample asymptotic runs from replication streams.
_ASYMPTOTIC_STREAM = 2**31 - 1

PRE_NOTE = (
    "PRE = 100 * MSE(mpl-canonical) / MSE(method), the squared RMSE ratio; "
    "asymptotic PRE = 100 * se(mpl-canonical)^2 / se(method)^2"
)


@dataclass
class ExperimentConfig:
    families: tuple = ALL_FAMILIES
    tau_levels: tuple = DEFAULT_TAUS
    sample_sizes: tuple = DEFAULT_SIZES
    replications: int = 5000
    base_seed: int = 1
    methods: tuple = ALL_METHODS
    asymptotic_n: int = 100_000
    n_jobs: int = 1

    def __post_init__(self):
        self.families = tuple(CopulaFamily.parse(f).value for f in self.families)
        self.methods = tuple(Method.parse(m).value for m in self.methods)
        self.tau_levels = tuple(float(t) for t in self.tau_levels)
        self.sample_sizes = tuple(int(n) for n in self.sample_sizes)
        self.validate()

    def validate(self):
        if int(self.replications) < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if not self.families or not self.methods or not self.tau_levels or not self.sample_sizes:
            raise ValueError("families, methods, tau levels and sample sizes must be non-empty")
        for n in self.sample_sizes:
            if n < 10:
                raise ValueError(f"sample sizes must be >= 10, got {n}")
        for family in self.families:
            for tau in self.tau_levels:
                # raises InversionRangeError (a ValueError) when unattainable
                copulas.theta_of_tau(family, tau)
        if not 0 <= int(self.base_seed) < 2**64:
            raise ValueError("base_seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out.pop("n_jobs")
        return {k: list(v) if isinstance(v, tuple) else v for k, v in out.items()}

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()


@dataclass
class MetricsRow:
    family: str
    tau_level: float
    theta_true: float
    n: int
    method: str
    replications: int
    usable: int
    prb: float
    s: float
    mean_se: float
    pc: float
    rmse: float
    n_clamped: int
    n_boundary: int
    n_diverged: int
    n_no_se: int


@dataclass
class PreRow:
    family: str
    tau_level: float
    n: int
    method: str
    pre_vs_canonical: float


@dataclass
class Outcome:
    """One method's result on one replication."""

    theta_hat: float
    se: float | None
    converged: bool = True
    clamped: bool = False
    at_boundary: bool = False
    error: str | None = None


def replication_seed(base_seed, family, tau_level, n, r) -> np.random.SeedSequence:
    family = CopulaFamily.parse(family)
    tau_key = int(round(float(tau_level) * 1_000_000))
    return np.random.SeedSequence([int(base_seed), _FAMILY_CODE[family], tau_key, int(n), int(r)])


def _apply(family, R, method, compute_se=True) -> Outcome:
    try:
        fit = estimate(family, R, method, compute_se=False, from_ranks=True)
    except NumericalError as exc:
        return Outcome(math.nan, None, converged=False, error=str(exc))
    outcome = Outcome(fit.theta_hat, None, fit.converged, fit.clamped, fit.at_boundary)
    if compute_se and fit.converged:
        try:
            if fit.method.is_mpl:
                attach_standard_error(fit, U=scheme_values(R, R.shape[0], fit.method.scheme))
            else:
                attach_standard_error(fit, R=R)
            outcome.se = fit.se
        except NumericalError as exc:
            outcome.error = str(exc)
    return outcome


def run_replication(family, theta, n, seed, methods=ALL_METHODS, compute_se=True) -> dict:
    """Draw one sample and fit every method to it; returns ``{method: Outcome}``."""
    X = copulas.sample(family, theta, n, seed)
    R = ranks(X)
    return {Method.parse(m).value: _apply(family, R, m, compute_se) for m in methods}


def _run_block(family, theta, n, tau_level, base_seed, reps, methods):
    return [
        run_replication(family, theta, n, replication_seed(base_seed, family, tau_level, n, r), methods)
        for r in reps
    ]


def _mean(values):
    return math.fsum(values) / len(values)


def summarise(family, tau_level, theta, n, method, outcomes) -> MetricsRow:
    """Aggregate one method's outcomes, in replication order, into a row.

    Diverged fits are excluded; clamped and boundary estimates stay in the
    bias and spread columns.  Coverage uses replications with a standard
    error only.
    """
    family = CopulaFamily.parse(family).value
    ok = [o for o in outcomes if o.converged and math.isfinite(o.theta_hat)]
    m = len(ok)
    nan = math.nan
    if m == 0:
        prb = s = rmse = nan
    else:
        estimates = [o.theta_hat for o in ok]
        mean = _mean(estimates)
        prb = 100.0 * (mean - theta) / theta
        s = math.sqrt(math.fsum((x - mean) ** 2 for x in estimates) / (m - 1)) if m > 1 else nan
        rmse = math.sqrt(_mean([(x - theta) ** 2 for x in estimates]))
    with_se = [o for o in ok if o.se is not None and math.isfinite(o.se)]
    if with_se:
        mean_se = _mean([o.se for o in with_se])
        covered = sum(o.theta_hat - 1.96 * o.se <= theta <= o.theta_hat + 1.96 * o.se for o in with_se)
        pc = 100.0 * covered / len(with_se)
    else:
        mean_se = pc = nan
    return MetricsRow(
        family=family,
        tau_level=float(tau_level),
        theta_true=float(theta),
        n=int(n),
        method=Method.parse(method).value,
        replications=len(outcomes),
        usable=m,
        prb=prb,
        s=s,
        mean_se=mean_se,
        pc=pc,
        rmse=rmse,
        n_clamped=sum(o.clamped for o in outcomes),
        n_boundary=sum(o.at_boundary for o in outcomes),
        n_diverged=len(outcomes) - m,
        n_no_se=m - len(with_se),
    )


def _chunks(total, n_jobs):
    size = max(1, math.ceil(total / (4 * max(n_jobs, 1))))
    return [range(i, min(i + size, total)) for i in range(0, total, size)]


def simulate_cell(config: ExperimentConfig, family, tau_level, n) -> list[dict]:
    """Raw per-replication outcomes of one cell, in replication order."""
    theta = copulas.theta_of_tau(family, tau_level)
    blocks = _chunks(config.replications, config.n_jobs)
    if config.n_jobs == 1:
        parts = [_run_block(family, theta, n, tau_level, config.base_seed, b, config.methods) for b in blocks]
    else:
        parts = Parallel(n_jobs=config.n_jobs)(
            delayed(_run_block)(family, theta, n, tau_level, config.base_seed, b, config.methods)
            for b in blocks
        )
    return [rep for part in parts for rep in part]


def run_cell(config: ExperimentConfig, family, tau_level, n) -> list[MetricsRow]:
    """One row per method for a (family, tau level, sample size) cell."""
    theta = copulas.theta_of_tau(family, tau_level)
    replications = simulate_cell(config, family, tau_level, n)
    rows = []
    for method in config.methods:
        outcomes = [rep[method] for rep in replications]
        rows.append(summarise(family, tau_level, theta, n, method, outcomes))
    for row in rows:
        if row.n_diverged or row.n_clamped:
            logger.info(
                "%s tau=%s n=%d %s: %d clamped, %d diverged",
                row.family, row.tau_level, row.n, row.method, row.n_clamped, row.n_diverged,
            )
    return rows


def run_experiment(config: ExperimentConfig, progress=None) -> list[MetricsRow]:
    rows = []
    for family in config.families:
        for tau in config.tau_levels:
            for n in config.sample_sizes:
                rows.extend(run_cell(config, family, tau, n))
                if progress is not None:
                    progress(family, tau, n)
    return rows


def relative_efficiency(rows) -> list[PreRow]:
    """PRE of every method against canonical MPL within each cell.

    Raises
    ------
    ValueError
        If a cell has no ``mpl-canonical`` row.
    """
    cells = {}
    for row in rows:
        cells.setdefault((row.family, row.tau_level, row.n), []).append(row)
    out = []
    for (family, tau, n), cell in cells.items():
        reference = [r for r in cell if r.method == Method.MPL_CANONICAL.value]
        if not reference:
            raise ValueError(f"cell {family} tau={tau} n={n} has no mpl-canonical row")
        mse_ref = reference[0].rmse ** 2
        for row in cell:
            pre = 100.0 if row is reference[0] else 100.0 * mse_ref / row.rmse**2
            out.append(PreRow(family, tau, n, row.method, pre))
    return out


def asymptotic_pre(config: ExperimentConfig) -> list[PreRow]:
    """Ratio of estimated variances on one large sample per (family, tau level)."""
    if config.asymptotic_n < 10_000:
        raise ValueError(f"asymptotic_n must be >= 10000, got {config.asymptotic_n}")
    methods = list(config.methods)
    if Method.MPL_CANONICAL.value not in methods:
        methods.insert(0, Method.MPL_CANONICAL.value)
    cells = [(f, t) for f in config.families for t in config.tau_levels]

    def one(family, tau):
        theta = copulas.theta_of_tau(family, tau)
        seed = replication_seed(config.base_seed, family, tau, config.asymptotic_n, _ASYMPTOTIC_STREAM)
        return run_replication(family, theta, config.asymptotic_n, seed, methods)

    if config.n_jobs == 1:
        results = [one(f, t) for f, t in cells]
    else:
        results = Parallel(n_jobs=config.n_jobs)(delayed(one)(f, t) for f, t in cells)

    out = []
    for (family, tau), outcomes in zip(cells, results):
        ref = outcomes[Method.MPL_CANONICAL.value].se
        for method in config.methods:
            se = outcomes[method].se
            pre = math.nan if ref is None or se is None else 100.0 * ref**2 / se**2
            out.append(PreRow(family, tau, config.asymptotic_n, method, pre))
    return out
