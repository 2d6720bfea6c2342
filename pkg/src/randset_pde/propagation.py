"""Double-loop propagation of hybrid random/interval uncertainty.

Random-set algorithm: discretize the parameter box Lambda into a grid,
generate N samples on a common probability space (substream (seed, k) per
sample), evaluate the model at every grid point with the SAME draw, and
collect per-sample min/max hulls.  The hull samples yield the empirical
lower/upper distribution functions and the Aumann expectation.

Parametric algorithm: per grid point, estimate the ordinary empirical CDF
and envelope the family pointwise.  With shared draws the two results obey
the exact ordering chain  f_lower <= f_low <= f_upp <= f_upper.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BoundViolationError,
    ComparisonError,
    DomainError,
    NumericalError,
    PropagationRunError,
)
from .randomsets import (
    Interval,
    PBox,
    RandomIntervalSample,
    empirical_pbox,
)
from .sampling import standard_normals

__all__ = [
    "ParameterGrid",
    "QoISpec",
    "RandomSetResult",
    "ParametricResult",
    "IntervalMeanField",
    "BoundComparison",
    "GaussianFamilyModel",
    "SampleFailure",
    "propagate_random_set",
    "propagate_parametric",
    "parametric_from_random_set",
    "compare_bounds",
    "interval_mean_field",
    "default_thresholds",
]

DEFAULT_THRESHOLDS = 201
FAILURE_BUDGET = 0.01
_INDEPENDENT_STRIDE = 1 << 32


@dataclass(frozen=True)
class ParameterGrid:
    """Regular grid over a multi-dimensional parameter interval Lambda."""

    dims: tuple
    counts: tuple
    axes: tuple
    points: np.ndarray  # (M, d), first dimension slowest

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))

    @classmethod
    def regular(cls, dims: Sequence[Interval], counts: Sequence[int]) -> "ParameterGrid":
        dims = tuple(dims)
        counts = tuple(int(c) for c in counts)
        if len(dims) != len(counts) or not dims:
            raise DomainError("dims and counts must be nonempty and match")
        if any(c < 1 for c in counts):
            raise DomainError("need at least one grid point per dimension")
        axes = tuple(
            np.linspace(iv.lo, iv.hi, c) if c > 1 else np.array([iv.mid])
            for iv, c in zip(dims, counts)
        )
        points = np.array(list(itertools.product(*axes)), dtype=float)
        return cls(dims=dims, counts=counts, axes=axes, points=points)

    @property
    def m(self) -> int:
        return int(self.points.shape[0])

    @property
    def ndim(self) -> int:
        return len(self.dims)


@dataclass(frozen=True)
class QoISpec:
    """Scalar or field-valued quantity of interest built from a PDE model.

    ``model`` is one of elliptic_node, elliptic_slice, transport_point,
    wave_point (or gauss_identity for the toy family); ``location`` is the
    evaluation point/row and ``scenario`` the full model configuration.
    """

    model: str
    location: tuple
    scenario: dict

    def build(self):
        from .models import build_model

        return build_model(self)


@dataclass(frozen=True)
class SampleFailure:
    sample_index: int
    grid_index: int
    message: str


@dataclass(frozen=True)
class RandomSetResult:
    """Output of the random-set double loop for one quantity of interest."""

    grid: ParameterGrid
    seed: int
    n_samples: int
    per_lambda_values: np.ndarray   # (N_eff, M, P)
    lowers: np.ndarray              # (N_eff, P) per-sample hull minima
    uppers: np.ndarray              # (N_eff, P)
    intervals: RandomIntervalSample  # hull samples of the p-box component
    pbox: PBox
    aumann: tuple                   # Interval per output component
    thresholds: np.ndarray
    pbox_component: int
    output_labels: Optional[np.ndarray] = None
    failures: tuple = ()

    @property
    def aumann_interval(self) -> Interval:
        return self.aumann[self.pbox_component]


@dataclass(frozen=True)
class ParametricResult:
    """Per-parameter empirical CDFs and their pointwise envelopes."""

    grid: ParameterGrid
    seed: int
    n_samples: int
    thresholds: np.ndarray
    per_lambda_ecdfs: np.ndarray   # (M, B)
    f_low: np.ndarray
    f_upp: np.ndarray
    shared_draws: bool
    failures: tuple = ()


@dataclass(frozen=True)
class IntervalMeanField:
    """Aumann expectation per output node plus the per-parameter mean curves."""

    labels: np.ndarray
    aumann: tuple                  # Interval per node
    per_lambda_means: np.ndarray   # (M, P)


@dataclass(frozen=True)
class BoundComparison:
    """Pointwise check of f_lower <= f_low <= f_upp <= f_upper."""

    thresholds: np.ndarray
    f_lower: np.ndarray
    f_low: np.ndarray
    f_upp: np.ndarray
    f_upper: np.ndarray
    violations: int

    @property
    def chain_holds(self) -> bool:
        return self.violations == 0


class GaussianFamilyModel:
    """Identity quantity of interest on the imprecise Gaussian family.

    The draw is a single standard normal z; the model value at parameters
    (mu, sigma) is mu + sigma*z, i.e. the quantile transform of a shared
    uniform sample.
    """

    output_size = 1
    output_labels = None
    pbox_component = 0

    def prepare(self, grid: ParameterGrid) -> None:
        if grid.ndim != 2:
            raise DomainError("Gaussian family expects a (mu, sigma) grid")
        if grid.dims[1].lo <= 0.0:
            raise DomainError("sigma interval must be positive")

    def draw(self, seed: int, index: int) -> float:
        return float(standard_normals(seed, index, 1)[0])

    def evaluate(self, draw: float, lam) -> np.ndarray:
        mu, sigma = lam
        return np.array([mu + sigma * draw])

    def evaluate_grid(self, draw: float, points: np.ndarray) -> np.ndarray:
        return (points[:, 0] + points[:, 1] * draw)[:, None]


def _resolve_model(qoi):
    if isinstance(qoi, QoISpec):
        return qoi.build()
    if hasattr(qoi, "evaluate") and hasattr(qoi, "draw"):
        return qoi
    raise DomainError("expected a QoISpec or a model object with draw/evaluate")


def _evaluate_sample(model, points, draw):
    grid_eval = getattr(model, "evaluate_grid", None)
    if grid_eval is not None:
        try:
            values = np.asarray(grid_eval(draw, points), dtype=float)
        except (NumericalError, BoundViolationError) as exc:
            return -1, f"{type(exc).__name__}: {exc}"
        if values.ndim == 1:
            values = values[:, None]
        if not np.all(np.isfinite(values)):
            i = int(np.nonzero(~np.all(np.isfinite(values), axis=1))[0][0])
            return i, "model returned non-finite values"
        return values, None
    values = None
    for i, lam in enumerate(points):
        try:
            row = np.atleast_1d(np.asarray(model.evaluate(draw, tuple(lam)), dtype=float))
        except (NumericalError, BoundViolationError) as exc:
            return i, f"{type(exc).__name__}: {exc}"
        if values is None:
            values = np.empty((points.shape[0], row.size))
        values[i] = row
        if not np.all(np.isfinite(row)):
            return i, "model returned non-finite values"
    return values, None


def _run_samples(model, grid, n_samples, seed, workers, draw_index=None):
    """Evaluate all (sample, lambda) pairs; deterministic by sample index."""
    if n_samples < 1:
        raise DomainError("need at least one sample")
    if draw_index is None:
        def draw_index(k):
            return k

    def one(k):
        draw = model.draw(seed, draw_index(k))
        return _evaluate_sample(model, grid.points, draw)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, range(n_samples)))
    else:
        outcomes = [one(k) for k in range(n_samples)]

    values, failures = [], []
    for k, (res, err) in enumerate(outcomes):
        if err is None:
            values.append(res)
        else:
            failures.append(SampleFailure(k, int(res), err))
    if len(failures) > FAILURE_BUDGET * n_samples:
        raise PropagationRunError(
            f"{len(failures)} of {n_samples} samples failed "
            f"(budget {FAILURE_BUDGET:.0%}); first: "
            f"sample {failures[0].sample_index}, grid point {failures[0].grid_index}: "
            f"{failures[0].message}",
            failures=failures,
        )
    if not values:
        raise PropagationRunError("all samples failed", failures=failures)
    return np.stack(values), tuple(failures)


def default_thresholds(lo: float, hi: float, count: int = DEFAULT_THRESHOLDS) -> np.ndarray:
    """Query grid spanning [lo, hi] padded by 5% of the range on both sides."""
    span = hi - lo
    pad = 0.05 * span if span > 0.0 else max(0.5, 1e-6 * abs(hi))
    return np.linspace(lo - pad, hi + pad, count)


def propagate_random_set(qoi, grid: ParameterGrid, n_samples: int, seed: int,
                         thresholds=None, workers: int = 1,
                         threshold_count: int = DEFAULT_THRESHOLDS) -> RandomSetResult:
    """Random-set double loop: one shared draw per sample, hull over the grid."""
    model = _resolve_model(qoi)
    model.prepare(grid)
    values, failures = _run_samples(model, grid, n_samples, seed, workers)

    lowers = values.min(axis=1)
    uppers = values.max(axis=1)
    # per-sample membership is structural; keep it as a cheap assertion
    assert np.all(values >= lowers[:, None, :]) and np.all(values <= uppers[:, None, :])

    pc = getattr(model, "pbox_component", 0)
    intervals = RandomIntervalSample(lowers[:, pc], uppers[:, pc])
    if thresholds is None:
        thresholds = default_thresholds(float(intervals.lowers.min()),
                                        float(intervals.uppers.max()),
                                        count=threshold_count)
    thresholds = np.asarray(thresholds, dtype=float)
    pbox = empirical_pbox(intervals, thresholds)
    aumann = tuple(
        Interval(float(lowers[:, p].mean()), float(uppers[:, p].mean()))
        for p in range(values.shape[2])
    )
    labels = getattr(model, "output_labels", None)
    return RandomSetResult(
        grid=grid,
        seed=seed,
        n_samples=n_samples,
        per_lambda_values=values,
        lowers=lowers,
        uppers=uppers,
        intervals=intervals,
        pbox=pbox,
        aumann=aumann,
        thresholds=thresholds,
        pbox_component=pc,
        output_labels=None if labels is None else np.asarray(labels),
        failures=failures,
    )


def _ecdf_matrix(columns: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    n = columns.shape[0]
    out = np.empty((columns.shape[1], thresholds.size))
    for i in range(columns.shape[1]):
        out[i] = np.searchsorted(np.sort(columns[:, i]), thresholds, side="right") / n
    return out


def propagate_parametric(qoi, grid: ParameterGrid, n_samples: int, seed: int,
                         thresholds=None, shared_draws: bool = True,
                         workers: int = 1) -> ParametricResult:
    """Parametric double loop: per-parameter empirical CDFs and envelopes.

    With ``shared_draws`` every grid point sees the same (seed, k)
    substreams, which makes :func:`compare_bounds` exact; otherwise each
    grid point gets its own independent substream family.
    """
    model = _resolve_model(qoi)
    model.prepare(grid)
    if shared_draws:
        values, failures = _run_samples(model, grid, n_samples, seed, workers)
        pc = getattr(model, "pbox_component", 0)
        scalar = values[:, :, pc]
    else:
        if grid.m >= _INDEPENDENT_STRIDE or n_samples >= _INDEPENDENT_STRIDE:
            raise DomainError("independent-draw indexing supports < 2^32 points/samples")
        columns, failures = [], []
        for i in range(grid.m):
            sub = ParameterGrid(
                dims=grid.dims, counts=(1,) * grid.ndim,
                axes=tuple(np.array([v]) for v in grid.points[i]),
                points=grid.points[i:i + 1],
            )
            vals, fails = _run_samples(
                model, sub, n_samples, seed, workers,
                draw_index=lambda k, _i=i: (_i + 1) * _INDEPENDENT_STRIDE + k,
            )
            pc = getattr(model, "pbox_component", 0)
            columns.append(vals[:, 0, pc])
            failures.extend(fails)
        scalar = np.stack(columns, axis=1)
        failures = tuple(failures)
    if thresholds is None:
        thresholds = default_thresholds(float(scalar.min()), float(scalar.max()))
    thresholds = np.asarray(thresholds, dtype=float)
    ecdfs = _ecdf_matrix(scalar, thresholds)
    return ParametricResult(
        grid=grid,
        seed=seed,
        n_samples=n_samples,
        thresholds=thresholds,
        per_lambda_ecdfs=ecdfs,
        f_low=ecdfs.min(axis=0),
        f_upp=ecdfs.max(axis=0),
        shared_draws=shared_draws,
        failures=failures,
    )


def parametric_from_random_set(rs: RandomSetResult) -> ParametricResult:
    """Shared-draw parametric envelopes from an existing random-set matrix.

    With shared draws both algorithms consume identical model evaluations,
    so the per-parameter ecdfs can be read off the stored (N, M) values
    without re-running the model.
    """
    scalar = rs.per_lambda_values[:, :, rs.pbox_component]
    ecdfs = _ecdf_matrix(scalar, rs.thresholds)
    return ParametricResult(
        grid=rs.grid,
        seed=rs.seed,
        n_samples=rs.n_samples,
        thresholds=rs.thresholds,
        per_lambda_ecdfs=ecdfs,
        f_low=ecdfs.min(axis=0),
        f_upp=ecdfs.max(axis=0),
        shared_draws=True,
        failures=rs.failures,
    )


def compare_bounds(rs: RandomSetResult, pm: ParametricResult) -> BoundComparison:
    """Verify the ordering chain at every threshold, exactly.

    Requires both results to come from the same seed, grid, and threshold
    grid with shared draws; then ecdf(upper hulls) <= every per-parameter
    ecdf <= ecdf(lower hulls) holds by per-sample enumeration.
    """
    if not pm.shared_draws:
        raise ComparisonError("parametric result must use shared draws")
    if rs.seed != pm.seed or rs.n_samples != pm.n_samples:
        raise ComparisonError("results come from different sampling configurations")
    if not np.array_equal(rs.grid.points, pm.grid.points):
        raise ComparisonError("results use different parameter grids")
    if not np.array_equal(rs.thresholds, pm.thresholds):
        raise ComparisonError("results use different threshold grids")
    fl, fu = rs.pbox.f_lower, rs.pbox.f_upper
    violations = int(np.count_nonzero(fl > pm.f_low)
                     + np.count_nonzero(pm.f_low > pm.f_upp)
                     + np.count_nonzero(pm.f_upp > fu))
    return BoundComparison(
        thresholds=rs.thresholds,
        f_lower=fl,
        f_low=pm.f_low,
        f_upp=pm.f_upp,
        f_upper=fu,
        violations=violations,
    )


def interval_mean_field(rs: RandomSetResult) -> IntervalMeanField:
    """Aumann expectation per output node, with per-parameter mean curves."""
    aumann = rs.aumann
    per_lambda_means = rs.per_lambda_values.mean(axis=0)   # (M, P)
    labels = rs.output_labels
    if labels is None:
        labels = np.arange(rs.per_lambda_values.shape[2], dtype=float)
    return IntervalMeanField(labels=labels, aumann=aumann,
                             per_lambda_means=per_lambda_means)
