"""Schedule diversity metrics and the diversity-vs-energy regression.

Zone diversity is the mean pairwise Euclidean distance between the
schedule vectors of a zone's occupants.  The regression is plain OLS of
energy on diversity with slope t-statistics and two-tailed p-values.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import betainc


class DegenerateRegressor(ValueError):
    """Raised when the regressor is constant and OLS has no unique slope."""


def pairwise_distance(a: np.ndarray, b: np.ndarray, metric: str = "euclidean") -> float:
    """Distance between two equal-length schedule vectors."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if metric != "euclidean":
        raise ValueError(f"unknown metric: {metric}")
    return float(np.linalg.norm(a - b))


def distance_matrix(rows: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    """Full pairwise distance matrix for stacked schedule rows (N x T)."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise ValueError("expected a 2-D array of stacked schedules")
    if metric != "euclidean":
        raise ValueError(f"unknown metric: {metric}")
    d = cdist(rows, rows, metric="euclidean")
    np.fill_diagonal(d, 0.0)
    return d


def stack_vectors(vectors: Mapping[str, np.ndarray], order: Sequence[str]) -> np.ndarray:
    """Stack per-occupant vectors into rows following the given order."""
    missing = [occ for occ in order if occ not in vectors]
    if missing:
        raise ValueError(f"occupants missing a schedule vector: {missing}")
    return np.vstack([np.asarray(vectors[occ], dtype=float).ravel() for occ in order])


def zone_diversity(schedules: Sequence[np.ndarray] | np.ndarray) -> float:
    """Mean pairwise distance among a zone's schedules; 0 for a lone schedule."""
    rows = np.asarray(schedules, dtype=float)
    if rows.ndim == 1:
        rows = rows[None, :]
    n = rows.shape[0]
    if n == 0:
        raise ValueError("zone_diversity needs at least one schedule")
    if n == 1:
        return 0.0
    d = distance_matrix(rows)
    return float(d.sum() / (n * (n - 1)))


@dataclass
class DiversityReport:
    """Per-zone diversity values plus their unweighted total."""

    per_zone: dict[str, float]
    total: float
    representation: str = "raw"  # raw | reduced-<d>


def layout_diversity(
    zones: Mapping[str, Sequence[str]],
    vectors: Mapping[str, np.ndarray],
    representation: str = "raw",
) -> DiversityReport:
    """Diversity of each zone's assigned occupants, zones equally weighted.

    zones maps zone_id to the occupant ids seated there (vacant desks
    excluded).  Zones with no occupants contribute 0.
    """
    per_zone: dict[str, float] = {}
    for zone_id, occupants in zones.items():
        if len(occupants) == 0:
            per_zone[zone_id] = 0.0
            continue
        rows = stack_vectors(vectors, list(occupants))
        per_zone[zone_id] = zone_diversity(rows)
    return DiversityReport(per_zone, float(sum(per_zone.values())), representation)


@dataclass
class RegressionResult:
    """OLS fit of y = slope*x + intercept with slope significance."""

    slope: float
    intercept: float
    slope_std_err: float
    t_statistic: float
    p_value: float
    r_squared: float
    n: int
    exact_fit: bool = False


def student_t_two_tailed_p(t: float, dof: int) -> float:
    """Two-tailed p-value for Student's t via the regularized incomplete beta."""
    if dof < 1:
        raise ValueError("degrees of freedom must be positive")
    if not np.isfinite(t):
        return 0.0
    return float(betainc(dof / 2.0, 0.5, dof / (dof + t * t)))


def ols_regress(x: np.ndarray, y: np.ndarray) -> RegressionResult:
    """Simple linear regression with t-statistic for the slope.

    Zero residual variance is reported as an exact fit (std err 0,
    p-value 0) rather than an error; a constant regressor raises
    DegenerateRegressor.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise ValueError("x and y must have equal length")
    n = x.size
    if n < 3:
        raise ValueError("regression needs at least 3 points")
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0.0:
        raise DegenerateRegressor("degenerate regressor: x is constant")
    sxy = float(np.sum((x - x.mean()) * (y - y.mean())))
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    sse = float(np.sum(resid**2))
    sst = float(np.sum((y - y.mean()) ** 2))
    r_squared = 0.0 if sst == 0.0 else 1.0 - sse / sst
    r_squared = min(max(r_squared, 0.0), 1.0)
    if sse <= 1e-14 * max(sst, 1.0):
        t = 0.0 if slope == 0.0 else np.inf * np.sign(slope)
        return RegressionResult(slope, intercept, 0.0, float(t), 0.0, r_squared, n, True)
    dof = n - 2
    std_err = float(np.sqrt(sse / dof / sxx))
    t = slope / std_err
    p = student_t_two_tailed_p(t, dof)
    return RegressionResult(slope, intercept, std_err, float(t), p, r_squared, n, False)


def write_diversity_csv(report: DiversityReport, path, header_comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write(f"# representation: {report.representation}\n")
        fh.write("zone_id,diversity\n")
        for zone_id in sorted(report.per_zone):
            fh.write(f"{zone_id},{report.per_zone[zone_id]!r}\n")
        fh.write(f"total,{report.total!r}\n")


def write_regression_csv(
    results: Sequence[tuple[str, RegressionResult | None]],
    path,
    header_comment: str | None = None,
) -> None:
    """Emit per-zone regression rows; None marks a degenerate regressor."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("zone_id,slope,std_err,t,p,r2,n\n")
        for zone_id, res in results:
            if res is None:
                fh.write(f"# {zone_id}: degenerate regressor (constant diversity)\n")
                continue
            fh.write(
                f"{zone_id},{res.slope!r},{res.slope_std_err!r},"
                f"{res.t_statistic!r},{res.p_value!r},{res.r_squared!r},{res.n}\n"
            )
