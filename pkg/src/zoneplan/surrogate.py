"""Surrogate lighting-energy models over zone/state features.

Features are one row per zone per 15-minute step: state counts (s1, s2,
s3), hour, day of week, weekend flag, and zone index.  Two predictors
are provided: multiple linear regression on an encoded feature set
(sigmoid counts, sin/cos hour, one-hots) and a from-scratch random
forest on the raw features.  Hourly lighting targets are split evenly
across the hour's four steps for training and re-summed for reporting.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .ingest import (
    STEPS_PER_DAY,
    InputError,
    LightingTable,
    StepCalendar,
    format_timestamp,
)
from .states import StateGrid

FEATURE_NAMES = ("s1", "s2", "s3", "hour", "day_of_week", "is_weekend", "zone")


@dataclass
class FeatureTable:
    """Raw feature rows, time-ordered (step-major, zones inner)."""

    zone_order: list[str]
    features: np.ndarray  # (n_rows, 7) float, columns per FEATURE_NAMES
    step_index: np.ndarray  # (n_rows,) int
    hour_epoch: np.ndarray  # (n_rows,) int64, epoch second of the row's hour
    day_index: np.ndarray  # (n_rows,) int, whole days since the grid start

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_zones(self) -> int:
        return len(self.zone_order)

    def zone_names(self) -> list[str]:
        col = self.features[:, 6].astype(int)
        return [self.zone_order[z] for z in col]

    def take(self, idx: np.ndarray) -> "FeatureTable":
        return FeatureTable(
            list(self.zone_order),
            self.features[idx],
            self.step_index[idx],
            self.hour_epoch[idx],
            self.day_index[idx],
        )


def build_features(
    states: StateGrid,
    zones: Mapping[str, Sequence[str]],
    calendar: StepCalendar | None = None,
) -> FeatureTable:
    """One FeatureRow per zone per step, zones in sorted-id order.

    zones maps zone_id to occupant ids (vacant desks excluded).  Every
    listed occupant must have a state row; occupants absent from the
    layout simply contribute to no zone.
    """
    cal = calendar or StepCalendar(states.start, states.n_steps)
    if cal.n_steps != states.n_steps:
        raise ValueError("calendar length does not match the state grid")
    occ_index = {occ: i for i, occ in enumerate(states.occupants)}
    zone_order = sorted(zones)
    n_steps = states.n_steps
    n_zones = len(zone_order)
    counts = np.zeros((n_zones, 3, n_steps))
    for j, zone_id in enumerate(zone_order):
        members = zones[zone_id]
        missing = [o for o in members if o not in occ_index]
        if missing:
            raise ValueError(f"zone {zone_id}: occupants without states: {missing}")
        if len(members) == 0:
            continue
        rows = states.states[[occ_index[o] for o in members]]
        for s in (1, 2, 3):
            counts[j, s - 1] = (rows == s).sum(axis=0)

    n_rows = n_steps * n_zones
    feats = np.empty((n_rows, 7))
    # step-major layout: rows [t*n_zones + j]
    feats[:, 0] = counts[:, 0, :].T.ravel()
    feats[:, 1] = counts[:, 1, :].T.ravel()
    feats[:, 2] = counts[:, 2, :].T.ravel()
    feats[:, 3] = np.repeat(cal.hours, n_zones)
    feats[:, 4] = np.repeat(cal.dows, n_zones)
    feats[:, 5] = np.repeat(cal.weekend, n_zones)
    feats[:, 6] = np.tile(np.arange(n_zones), n_steps)
    step_index = np.repeat(np.arange(n_steps), n_zones)
    hour_epoch = np.repeat(cal.hour_epochs(), n_zones)
    day_index = step_index // STEPS_PER_DAY
    return FeatureTable(zone_order, feats, step_index, hour_epoch, day_index)


def concat_tables(tables: Sequence[FeatureTable]) -> FeatureTable:
    """Stack feature tables that share a zone order (e.g. several layouts)."""
    if not tables:
        raise ValueError("nothing to concatenate")
    zone_order = tables[0].zone_order
    if any(t.zone_order != zone_order for t in tables):
        raise ValueError("tables have different zone orders")
    return FeatureTable(
        list(zone_order),
        np.vstack([t.features for t in tables]),
        np.concatenate([t.step_index for t in tables]),
        np.concatenate([t.hour_epoch for t in tables]),
        np.concatenate([t.day_index for t in tables]),
    )


def targets_from_lighting(table: FeatureTable, lighting: LightingTable) -> np.ndarray:
    """Per-row training targets: the row's hourly energy split over 4 steps."""
    names = table.zone_names()
    y = np.empty(table.n_rows)
    for r in range(table.n_rows):
        y[r] = lighting.energy(names[r], int(table.hour_epoch[r])) / 4.0
    return y


def sigmoid_count(s: np.ndarray) -> np.ndarray:
    """Saturating occupancy transform: g(0) = 0, g(s) -> 1 as s grows."""
    return 2.0 / (1.0 + np.exp(-np.asarray(s, dtype=float))) - 1.0


def encode(
    features: np.ndarray,
    n_zones: int,
    zone_remap: np.ndarray | None = None,
) -> np.ndarray:
    """Encode raw rows: sigmoid counts, sin/cos hour, one-hot dow/zone.

    Output columns: g(s1), g(s2), g(s3), sin_h, cos_h (both rescaled to
    [0,1]), dow one-hot (7), weekend, zone one-hot (n_zones).  zone_remap
    optionally translates the raw zone indices before one-hot encoding.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    n = x.shape[0]
    out = np.zeros((n, 13 + n_zones))
    out[:, 0:3] = sigmoid_count(x[:, 0:3])
    angle = 2.0 * np.pi * x[:, 3] / 24.0
    out[:, 3] = (np.sin(angle) + 1.0) / 2.0
    out[:, 4] = (np.cos(angle) + 1.0) / 2.0
    dow = x[:, 4].astype(int)
    out[np.arange(n), 5 + dow] = 1.0
    out[:, 12] = x[:, 5]
    zidx = x[:, 6].astype(int)
    if zone_remap is not None:
        zidx = zone_remap[zidx]
    out[np.arange(n), 13 + zidx] = 1.0
    return out


def _zone_remap(table_order: Sequence[str], model_order: Sequence[str]) -> np.ndarray:
    index = {z: i for i, z in enumerate(model_order)}
    missing = [z for z in table_order if z not in index]
    if missing:
        raise ValueError(f"unknown zone ids for this model: {missing}")
    return np.array([index[z] for z in table_order], dtype=int)


def solve_ridge(x: np.ndarray, y: np.ndarray, ridge: float = 1e-8) -> tuple[float, np.ndarray]:
    """Normal-equation least squares; ridge applies to slopes only."""
    n, p = x.shape
    design = np.hstack([np.ones((n, 1)), x])
    gram = design.T @ design
    gram[1:, 1:] += ridge * np.eye(p)
    beta = np.linalg.solve(gram, design.T @ y)
    return float(beta[0]), beta[1:]


@dataclass
class MlrModel:
    """Linear surrogate on encoded features with a train-fitted scaler."""

    intercept: float
    coefficients: np.ndarray
    scaler_min: np.ndarray
    scaler_range: np.ndarray  # zero where the training column was constant
    zone_order: list[str]
    rank_deficient: bool = False

    def _scale(self, x: np.ndarray) -> np.ndarray:
        rng = np.where(self.scaler_range > 0, self.scaler_range, 1.0)
        scaled = (x - self.scaler_min[None, :]) / rng[None, :]
        return np.where(self.scaler_range[None, :] > 0, scaled, 0.0)

    def predict_encoded(self, x: np.ndarray) -> np.ndarray:
        return self.intercept + self._scale(np.atleast_2d(x)) @ self.coefficients

    def predict_rows(self, table: FeatureTable) -> np.ndarray:
        remap = _zone_remap(table.zone_order, self.zone_order)
        x = encode(table.features, len(self.zone_order), remap)
        return self.predict_encoded(x)

    def to_dict(self) -> dict:
        return {
            "kind": "mlr",
            "intercept": self.intercept,
            "coefficients": [float(v) for v in self.coefficients],
            "scaler_min": [float(v) for v in self.scaler_min],
            "scaler_range": [float(v) for v in self.scaler_range],
            "zone_order": list(self.zone_order),
            "rank_deficient": self.rank_deficient,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlrModel":
        return cls(
            intercept=float(d["intercept"]),
            coefficients=np.array(d["coefficients"], dtype=float),
            scaler_min=np.array(d["scaler_min"], dtype=float),
            scaler_range=np.array(d["scaler_range"], dtype=float),
            zone_order=list(d["zone_order"]),
            rank_deficient=bool(d["rank_deficient"]),
        )


def fit_mlr(table: FeatureTable, targets: np.ndarray, ridge: float = 1e-8) -> MlrModel:
    """Least-squares fit on encoded features, scaler fitted on this data only."""
    y = np.asarray(targets, dtype=float).ravel()
    if table.n_rows != y.size:
        raise ValueError("row/target length mismatch")
    if table.n_rows < 2:
        raise ValueError("need at least 2 rows")
    x = encode(table.features, table.n_zones)
    lo = x.min(axis=0)
    rng = x.max(axis=0) - lo
    scaled = np.where(rng[None, :] > 0, (x - lo[None, :]) / np.where(rng > 0, rng, 1.0), 0.0)
    intercept, coefs = solve_ridge(scaled, y, ridge)
    return MlrModel(
        intercept=intercept,
        coefficients=coefs,
        scaler_min=lo,
        scaler_range=rng,
        zone_order=list(table.zone_order),
        rank_deficient=x.shape[0] < x.shape[1] + 1,
    )


@dataclass(frozen=True)
class RfConfig:
    """Forest hyperparameters (defaults follow the tuned values)."""

    n_trees: int = 200
    min_split: int = 50
    min_leaf: int = 2
    max_depth: int = 300
    bootstrap: bool = True


@dataclass
class _Tree:
    """Flat array form: leaves point to themselves so descent is a fixed map."""

    feature: np.ndarray  # int, -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray


def _fit_tree(
    x: np.ndarray,
    y: np.ndarray,
    cfg: RfConfig,
    importance: np.ndarray,
) -> _Tree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(len(feature) - 1)
        right.append(len(feature) - 1)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(y.size), 0)]
    while stack:
        node, rows, depth = stack.pop()
        ty = y[rows]
        value[node] = float(ty.mean())
        n = rows.size
        if n < cfg.min_split or depth >= cfg.max_depth:
            continue
        sse_parent = float(np.sum((ty - ty.mean()) ** 2))
        if sse_parent <= 0.0:
            continue
        best = (0.0, -1, 0.0)  # (reduction, feature, threshold)
        for f in range(x.shape[1]):
            vals = x[rows, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            st = ty[order]
            c1 = np.cumsum(st)
            c2 = np.cumsum(st**2)
            total1 = c1[-1]
            total2 = c2[-1]
            i = np.arange(1, n)
            valid = (sv[1:] > sv[:-1]) & (i >= cfg.min_leaf) & (n - i >= cfg.min_leaf)
            if not np.any(valid):
                continue
            li = i[valid]
            sse_l = c2[li - 1] - c1[li - 1] ** 2 / li
            sse_r = (total2 - c2[li - 1]) - (total1 - c1[li - 1]) ** 2 / (n - li)
            red = sse_parent - (sse_l + sse_r)
            k = int(np.argmax(red))
            if red[k] > best[0] + 1e-12:
                pos = li[k]
                thr = 0.5 * (sv[pos - 1] + sv[pos])
                # guard: midpoint must actually separate the two sides
                if sv[pos - 1] < thr <= sv[pos]:
                    best = (float(red[k]), f, float(thr))
        if best[1] < 0:
            continue
        _, f, thr = best
        mask = x[rows, f] < thr
        left_rows = rows[mask]
        right_rows = rows[~mask]
        if left_rows.size < cfg.min_leaf or right_rows.size < cfg.min_leaf:
            continue
        importance[f] += best[0]
        lnode = new_node()
        rnode = new_node()
        feature[node] = f
        threshold[node] = thr
        left[node] = lnode
        right[node] = rnode
        stack.append((lnode, left_rows, depth + 1))
        stack.append((rnode, right_rows, depth + 1))

    return _Tree(
        np.array(feature, dtype=np.int32),
        np.array(threshold),
        np.array(left, dtype=np.int32),
        np.array(right, dtype=np.int32),
        np.array(value),
    )


@dataclass
class RfModel:
    """Bootstrap-aggregated regression trees on the raw features."""

    trees: list[_Tree]
    config: RfConfig
    seed: int
    zone_order: list[str]
    importance_raw: np.ndarray  # unnormalized SSE reduction per feature
    _stack: tuple | None = field(default=None, repr=False, compare=False)

    def _stacked(self) -> tuple:
        if self._stack is None:
            n_nodes = max(t.feature.size for t in self.trees)
            nt = len(self.trees)
            feat = np.zeros((nt, n_nodes), dtype=np.int32) - 1
            thr = np.zeros((nt, n_nodes))
            left = np.tile(np.arange(n_nodes, dtype=np.int32), (nt, 1))
            right = left.copy()
            val = np.zeros((nt, n_nodes))
            for i, t in enumerate(self.trees):
                k = t.feature.size
                feat[i, :k] = t.feature
                thr[i, :k] = t.threshold
                left[i, :k] = t.left
                right[i, :k] = t.right
                val[i, :k] = t.value
            self._stack = (feat, thr, left, right, val)
        return self._stack

    def predict_raw(self, x: np.ndarray, batch: int = 8192) -> np.ndarray:
        """Mean over trees; descent is vectorized across trees and rows."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        feat, thr, left, right, val = self._stacked()
        nt = feat.shape[0]
        rows_idx = np.arange(nt)[:, None]
        out = np.empty(x.shape[0])
        for lo in range(0, x.shape[0], batch):
            xb = x[lo : lo + batch]
            nb = xb.shape[0]
            cols_idx = np.arange(nb)[None, :]
            cur = np.zeros((nt, nb), dtype=np.int32)
            while True:
                f = feat[rows_idx, cur]
                interior = f >= 0
                if not np.any(interior):
                    break
                fv = xb[cols_idx, np.maximum(f, 0)]
                go_left = fv < thr[rows_idx, cur]
                nxt = np.where(go_left, left[rows_idx, cur], right[rows_idx, cur])
                cur = np.where(interior, nxt, cur).astype(np.int32)
            out[lo : lo + nb] = val[rows_idx, cur].mean(axis=0)
        return out

    def predict_rows(self, table: FeatureTable) -> np.ndarray:
        remap = _zone_remap(table.zone_order, self.zone_order)
        x = table.features.copy()
        x[:, 6] = remap[x[:, 6].astype(int)]
        return self.predict_raw(x)

    def to_dict(self) -> dict:
        return {
            "kind": "rf",
            "config": {
                "n_trees": self.config.n_trees,
                "min_split": self.config.min_split,
                "min_leaf": self.config.min_leaf,
                "max_depth": self.config.max_depth,
                "bootstrap": self.config.bootstrap,
            },
            "seed": self.seed,
            "zone_order": list(self.zone_order),
            "importance_raw": [float(v) for v in self.importance_raw],
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "value": t.value.tolist(),
                }
                for t in self.trees
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RfModel":
        trees = [
            _Tree(
                np.array(t["feature"], dtype=np.int32),
                np.array(t["threshold"]),
                np.array(t["left"], dtype=np.int32),
                np.array(t["right"], dtype=np.int32),
                np.array(t["value"]),
            )
            for t in d["trees"]
        ]
        return cls(
            trees=trees,
            config=RfConfig(**d["config"]),
            seed=d["seed"],
            zone_order=list(d["zone_order"]),
            importance_raw=np.array(d["importance_raw"], dtype=float),
        )


def fit_random_forest(
    table: FeatureTable,
    targets: np.ndarray,
    config: RfConfig | None = None,
    seed: int = 0,
) -> RfModel:
    """Greedy variance-reduction trees on raw features, seeded per tree."""
    cfg = config or RfConfig()
    x = table.features
    y = np.asarray(targets, dtype=float).ravel()
    if x.shape[0] == 0:
        raise ValueError("empty training set")
    if x.shape[0] != y.size:
        raise ValueError("row/target length mismatch")
    importance = np.zeros(x.shape[1])
    trees = []
    for t in range(cfg.n_trees):
        if cfg.bootstrap:
            rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
            rows = rng.integers(0, y.size, y.size)
            trees.append(_fit_tree(x[rows], y[rows], cfg, importance))
        else:
            trees.append(_fit_tree(x, y, cfg, importance))
    return RfModel(trees, cfg, seed, list(table.zone_order), importance)


def feature_importance(model: RfModel) -> dict[str, float]:
    """Share of total split variance reduction attributed to each raw feature."""
    total = float(model.importance_raw.sum())
    if total <= 0.0:
        return {name: 0.0 for name in FEATURE_NAMES}
    return {
        name: float(v / total) for name, v in zip(FEATURE_NAMES, model.importance_raw)
    }


@dataclass
class Metrics:
    """Per-step errors plus R-squared at step/hour/day aggregation."""

    mae: float
    mse: float
    r_squared: float  # hourly
    r_squared_daily: float
    r_squared_step: float


def _r2(y: np.ndarray, yhat: np.ndarray) -> float:
    sse = float(np.sum((y - yhat) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    if sse <= 1e-30:
        return 1.0
    if sst == 0.0:
        return 0.0
    return 1.0 - sse / sst


def _group_sum(v: np.ndarray, groups: np.ndarray) -> np.ndarray:
    _, inverse = np.unique(groups, return_inverse=True)
    return np.bincount(inverse, weights=v)


def evaluate(
    y: np.ndarray,
    yhat: np.ndarray,
    hourly_groups: np.ndarray,
    daily_groups: np.ndarray,
) -> Metrics:
    """Errors on raw per-step values; R-squared also after hour/day summation."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.size != yhat.size:
        raise ValueError("length mismatch")
    mae = float(np.mean(np.abs(y - yhat)))
    mse = float(np.mean((y - yhat) ** 2))
    r2_step = _r2(y, yhat)
    r2_hour = _r2(_group_sum(y, hourly_groups), _group_sum(yhat, hourly_groups))
    r2_day = _r2(_group_sum(y, daily_groups), _group_sum(yhat, daily_groups))
    return Metrics(mae, mse, r2_hour, r2_day, r2_step)


def time_split(
    table: FeatureTable, targets: np.ndarray, fraction: float = 0.8
) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays for a whole-day train/test split; boundary day tests.

    Returns (train_rows, test_rows) into the time-ordered table.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be strictly between 0 and 1")
    y = np.asarray(targets).ravel()
    if y.size != table.n_rows:
        raise ValueError("row/target length mismatch")
    n_days = int(table.day_index.max()) + 1
    train_days = int(np.floor(fraction * n_days + 1e-9))
    if train_days == 0 or train_days >= n_days:
        raise ValueError("split leaves an empty side")
    train = np.flatnonzero(table.day_index < train_days)
    test = np.flatnonzero(table.day_index >= train_days)
    return train, test


def cross_validate(
    table: FeatureTable,
    targets: np.ndarray,
    k: int = 5,
    fitter: Callable[[FeatureTable, np.ndarray], Callable[[FeatureTable], np.ndarray]] = None,
) -> Metrics:
    """k contiguous time-ordered folds; metrics averaged over held-out folds.

    fitter(table, y) must return a predict function over a FeatureTable.
    """
    if fitter is None:
        raise ValueError("a fitter is required")
    if k < 2:
        raise ValueError("k must be >= 2")
    y = np.asarray(targets, dtype=float).ravel()
    n = table.n_rows
    if k > n:
        raise ValueError("more folds than rows")
    folds = np.array_split(np.arange(n), k)
    metrics = []
    for held in folds:
        rest = np.setdiff1d(np.arange(n), held, assume_unique=False)
        predict = fitter(table.take(rest), y[rest])
        yhat = predict(table.take(held))
        metrics.append(
            evaluate(y[held], yhat, table.hour_epoch[held], table.day_index[held])
        )
    return Metrics(
        mae=float(np.mean([m.mae for m in metrics])),
        mse=float(np.mean([m.mse for m in metrics])),
        r_squared=float(np.mean([m.r_squared for m in metrics])),
        r_squared_daily=float(np.mean([m.r_squared_daily for m in metrics])),
        r_squared_step=float(np.mean([m.r_squared_step for m in metrics])),
    )


@dataclass
class EnergyReport:
    """Predicted lighting energy for one layout (clamped at zero)."""

    zone_order: list[str]
    hour_epochs: np.ndarray  # (n_hours,)
    hourly: np.ndarray  # (n_zones, n_hours) predicted wh
    per_zone_total: dict[str, float]
    per_day_total: np.ndarray  # (n_days,)
    grand_total: float
    baseline_total: float | None = None
    percent_change: float | None = None


def predict_energy(
    model,
    zones: Mapping[str, Sequence[str]],
    states: StateGrid,
    calendar: StepCalendar | None = None,
    baseline_zones: Mapping[str, Sequence[str]] | None = None,
) -> EnergyReport:
    """Score a layout with a trained surrogate; optional baseline comparison."""
    table = build_features(states, zones, calendar)
    pred = np.maximum(model.predict_rows(table), 0.0)
    hour_ids, hour_inv = np.unique(table.hour_epoch, return_inverse=True)
    n_zones = table.n_zones
    zcol = table.features[:, 6].astype(int)
    hourly = np.zeros((n_zones, hour_ids.size))
    np.add.at(hourly, (zcol, hour_inv), pred)
    per_zone = {z: float(hourly[j].sum()) for j, z in enumerate(table.zone_order)}
    n_days = int(table.day_index.max()) + 1
    per_day = np.zeros(n_days)
    np.add.at(per_day, table.day_index, pred)
    grand = float(pred.sum())
    baseline_total = None
    pct = None
    if baseline_zones is not None:
        base = predict_energy(model, baseline_zones, states, calendar)
        baseline_total = base.grand_total
        pct = 0.0 if baseline_total == 0 else 100.0 * (grand - baseline_total) / baseline_total
    return EnergyReport(
        table.zone_order, hour_ids, hourly, per_zone, per_day, grand, baseline_total, pct
    )


def write_energy_report(report: EnergyReport, path, header_comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write(f"# grand_total_wh: {report.grand_total!r}\n")
        if report.baseline_total is not None:
            fh.write(f"# baseline_total_wh: {report.baseline_total!r}\n")
            fh.write(f"# percent_change: {report.percent_change!r}\n")
        fh.write("zone_id,period_start,energy_pred_wh\n")
        for j, zone_id in enumerate(report.zone_order):
            for h, epoch in enumerate(report.hour_epochs):
                fh.write(
                    f"{zone_id},{format_timestamp(int(epoch))},"
                    f"{float(report.hourly[j, h])!r}\n"
                )


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if d.get("kind") == "mlr":
        return MlrModel.from_dict(d)
    if d.get("kind") == "rf":
        return RfModel.from_dict(d)
    raise InputError(f"{path}: unknown model kind {d.get('kind')!r}")
