"""Activity-state inference: variational Bayesian GMM over desk power values.

Each occupant's 15-minute power series is clustered twice: a first fit
separates absence (low power) from presence, and a second fit on the
higher-power samples splits presence into medium and high activity.
Final labels are {1, 2, 3}, ordered by mean power.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np
from scipy.special import digamma, gammaln, logsumexp

from .ingest import STEP_SECONDS, InputError, TimeSeriesGrid, format_timestamp, parse_timestamp

_LN_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class VbGmmPriors:
    """Prior hyperparameters; None fields are derived from the sample.

    concentration: Dirichlet weight per component (small values prune
    unused components).  mean/mean_scale parameterize the Gaussian prior
    on component means given precision; shape/rate the Gamma prior on
    precisions.  Derived defaults: mean = sample mean, rate = shape *
    sample variance (prior expected precision = 1 / variance), which
    keeps inference invariant to rescaling the power series.
    """

    concentration: float = 1e-3
    mean: float | None = None
    mean_scale: float = 1.0
    shape: float = 0.5
    rate: float | None = None

    def resolve(self, samples: np.ndarray) -> "VbGmmPriors":
        mean = float(np.mean(samples)) if self.mean is None else self.mean
        if self.rate is None:
            var = float(np.var(samples))
            rate = self.shape * max(var, np.finfo(float).tiny)
        else:
            rate = self.rate
        return replace(self, mean=mean, rate=rate)


@dataclass
class VbGmmModel:
    """Fitted univariate variational Gaussian mixture.

    weights/means/precisions are posterior expectations; the dirichlet_*,
    mean_*, gamma_* arrays are the full variational hyperparameters.
    """

    k_max: int
    weights: np.ndarray
    means: np.ndarray
    precisions: np.ndarray
    dirichlet_concentration: np.ndarray
    mean_location: np.ndarray
    mean_scale: np.ndarray
    gamma_shape: np.ndarray
    gamma_rate: np.ndarray
    elbo_trace: list[float]
    priors: VbGmmPriors
    seed: int
    n_samples: int
    degenerate: bool = False

    def log_responsibilities(self, x: np.ndarray) -> np.ndarray:
        """Unnormalized log responsibilities under the variational posterior."""
        if self.degenerate:
            return np.zeros((x.size, 1))
        alpha = self.dirichlet_concentration
        e_log_weight = digamma(alpha) - digamma(alpha.sum())
        e_log_prec = digamma(self.gamma_shape) - np.log(self.gamma_rate)
        e_prec = self.gamma_shape / self.gamma_rate
        diff = x[:, None] - self.mean_location[None, :]
        quad = e_prec[None, :] * diff**2 + 1.0 / self.mean_scale[None, :]
        return (e_log_weight + 0.5 * e_log_prec - 0.5 * _LN_2PI)[None, :] - 0.5 * quad

    def assign(self, x: np.ndarray, weight_floor: float) -> np.ndarray:
        """Map samples to the index of their most responsible effective component."""
        keep = np.flatnonzero(self.weights >= weight_floor)
        if keep.size == 0:
            raise ValueError("no component reaches the weight floor")
        log_r = self.log_responsibilities(x)
        if self.degenerate:
            return keep[np.zeros(x.size, dtype=np.intp)]
        return keep[np.argmax(log_r[:, keep], axis=1)]

    def to_dict(self) -> dict:
        def listify(a):
            return [None if not np.isfinite(v) else float(v) for v in np.asarray(a, dtype=float)]

        return {
            "k_max": self.k_max,
            "weights": listify(self.weights),
            "means": listify(self.means),
            "precisions": listify(self.precisions),
            "dirichlet_concentration": listify(self.dirichlet_concentration),
            "mean_location": listify(self.mean_location),
            "mean_scale": listify(self.mean_scale),
            "gamma_shape": listify(self.gamma_shape),
            "gamma_rate": listify(self.gamma_rate),
            "elbo_trace": [float(v) for v in self.elbo_trace],
            "priors": {
                "concentration": self.priors.concentration,
                "mean": self.priors.mean,
                "mean_scale": self.priors.mean_scale,
                "shape": self.priors.shape,
                "rate": self.priors.rate,
            },
            "seed": self.seed,
            "n_samples": self.n_samples,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VbGmmModel":
        def arr(key):
            return np.array(
                [np.inf if v is None else v for v in d[key]], dtype=float
            )

        return cls(
            k_max=d["k_max"],
            weights=arr("weights"),
            means=arr("means"),
            precisions=arr("precisions"),
            dirichlet_concentration=arr("dirichlet_concentration"),
            mean_location=arr("mean_location"),
            mean_scale=arr("mean_scale"),
            gamma_shape=arr("gamma_shape"),
            gamma_rate=arr("gamma_rate"),
            elbo_trace=list(d["elbo_trace"]),
            priors=VbGmmPriors(**d["priors"]),
            seed=d["seed"],
            n_samples=d["n_samples"],
            degenerate=d["degenerate"],
        )


def _degenerate_model(value: float, n: int, priors: VbGmmPriors, k_max: int, seed: int) -> VbGmmModel:
    one = np.ones(1)
    return VbGmmModel(
        k_max=k_max,
        weights=one.copy(),
        means=np.array([value]),
        precisions=np.array([np.inf]),
        dirichlet_concentration=one * (priors.concentration + n),
        mean_location=np.array([value]),
        mean_scale=one * (priors.mean_scale + n),
        gamma_shape=one * (priors.shape + n / 2.0),
        gamma_rate=one * (priors.rate if priors.rate is not None else np.finfo(float).tiny),
        elbo_trace=[],
        priors=priors,
        seed=seed,
        n_samples=n,
        degenerate=True,
    )


def _kl_dirichlet(alpha: np.ndarray, alpha0: float) -> float:
    k = alpha.size
    a0 = np.full(k, alpha0)
    total = alpha.sum()
    return float(
        gammaln(total)
        - gammaln(k * alpha0)
        + np.sum(gammaln(a0) - gammaln(alpha))
        + np.sum((alpha - a0) * (digamma(alpha) - digamma(total)))
    )


def _kl_normal_gamma(
    m: np.ndarray, beta: np.ndarray, a: np.ndarray, b: np.ndarray, priors: VbGmmPriors
) -> float:
    m0, beta0, a0, b0 = priors.mean, priors.mean_scale, priors.shape, priors.rate
    kl_mean = 0.5 * (
        np.log(beta / beta0) - 1.0 + beta0 / beta + beta0 * (a / b) * (m - m0) ** 2
    )
    kl_gamma = (
        (a - a0) * digamma(a) - gammaln(a) + gammaln(a0) + a0 * (np.log(b) - np.log(b0)) + a * (b0 - b) / b
    )
    return float(np.sum(kl_mean + kl_gamma))


def fit_vbgmm(
    samples: np.ndarray,
    k_max: int = 10,
    priors: VbGmmPriors | None = None,
    tol: float = 1e-6,
    max_iter: int = 5000,
    seed: int = 0,
) -> VbGmmModel:
    """Mean-field variational fit of a univariate Bayesian Gaussian mixture.

    Components are initialized on sample quantiles with seeded jitter, then
    updated until the variational bound improves by less than tol.  Constant
    input yields a degenerate single-component model (flagged); non-finite
    input raises.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    base_priors = priors if priors is not None else VbGmmPriors()
    resolved = base_priors.resolve(x)
    if np.all(x == x[0]):
        return _degenerate_model(float(x[0]), x.size, resolved, k_max, seed)

    n = x.size
    alpha0, m0, beta0, a0, b0 = (
        resolved.concentration,
        resolved.mean,
        resolved.mean_scale,
        resolved.shape,
        resolved.rate,
    )

    rng = np.random.default_rng(seed)
    std = float(np.std(x))
    init_means = np.quantile(x, (np.arange(k_max) + 0.5) / k_max)
    init_means = init_means + rng.normal(0.0, 0.01 * std, size=k_max)
    var = max(std**2, np.finfo(float).tiny)
    log_r = -0.5 * (x[:, None] - init_means[None, :]) ** 2 / var
    log_r -= logsumexp(log_r, axis=1, keepdims=True)
    resp = np.exp(log_r)

    tiny = np.finfo(float).tiny
    alpha = beta = m = a = b = None
    elbo_trace: list[float] = []

    def m_step(r):
        nk = r.sum(axis=0)
        nk_safe = np.maximum(nk, tiny)
        xbar = (r * x[:, None]).sum(axis=0) / nk_safe
        sk = (r * (x[:, None] - xbar[None, :]) ** 2).sum(axis=0) / nk_safe
        alpha = alpha0 + nk
        beta = beta0 + nk
        m = (beta0 * m0 + nk * xbar) / beta
        a = a0 + nk / 2.0
        b = b0 + 0.5 * (nk * sk + beta0 * nk * (xbar - m0) ** 2 / (beta0 + nk))
        return alpha, beta, m, a, b

    alpha, beta, m, a, b = m_step(resp)
    for _ in range(max_iter):
        e_log_weight = digamma(alpha) - digamma(alpha.sum())
        e_log_prec = digamma(a) - np.log(b)
        e_prec = a / b
        diff = x[:, None] - m[None, :]
        log_rho = (e_log_weight + 0.5 * e_log_prec - 0.5 * _LN_2PI)[None, :] - 0.5 * (
            e_prec[None, :] * diff**2 + 1.0 / beta[None, :]
        )
        lse = logsumexp(log_rho, axis=1)
        resp = np.exp(log_rho - lse[:, None])
        elbo = float(lse.sum()) - _kl_dirichlet(alpha, alpha0) - _kl_normal_gamma(
            m, beta, a, b, resolved
        )
        elbo_trace.append(elbo)
        if len(elbo_trace) >= 2 and elbo - elbo_trace[-2] < tol:
            break
        alpha, beta, m, a, b = m_step(resp)

    return VbGmmModel(
        k_max=k_max,
        weights=alpha / alpha.sum(),
        means=m.copy(),
        precisions=a / b,
        dirichlet_concentration=alpha,
        mean_location=m,
        mean_scale=beta,
        gamma_shape=a,
        gamma_rate=b,
        elbo_trace=elbo_trace,
        priors=resolved,
        seed=seed,
        n_samples=n,
        degenerate=False,
    )


def effective_components(model: VbGmmModel, weight_floor: float = 1e-2) -> int:
    """Number of components whose expected weight clears the floor."""
    return int(np.sum(model.weights >= weight_floor))


@dataclass(frozen=True)
class StateConfig:
    """Knobs for the two-step state inference."""

    k_max: int = 10
    priors: VbGmmPriors = field(default_factory=VbGmmPriors)
    weight_floor: float = 1e-2
    tol: float = 1e-6
    # pruning duplicate components is slow: a single-level series needs a
    # few thousand iterations before mass consolidates onto one component
    max_iter: int = 5000
    idle_threshold_w: float = 5.0
    seed: int = 0


@dataclass
class OccupantFit:
    """Fit record for one occupant: first-pass model, optional second pass."""

    occupant_id: str
    first: VbGmmModel
    second: VbGmmModel | None
    rule: str  # which labeling path applied


@dataclass
class StateGrid:
    """Per-occupant, per-step activity states in {1, 2, 3}."""

    occupants: list[str]
    start: datetime
    states: np.ndarray  # (n_occupants, n_steps) int8
    state_power: list[dict[int, float]] | None = None  # mean watts per label

    def __post_init__(self):
        self.start = self.start.astimezone(timezone.utc)
        if self.states.ndim != 2 or self.states.shape[0] != len(self.occupants):
            raise InputError("state matrix shape does not match occupant list")

    @property
    def n_steps(self) -> int:
        return self.states.shape[1]

    def step_epochs(self) -> np.ndarray:
        start_s = int(self.start.timestamp())
        return start_s + STEP_SECONDS * np.arange(self.n_steps, dtype=np.int64)

    def vectors(self) -> dict[str, np.ndarray]:
        """Occupant schedules as float vectors (for distances and SVD)."""
        return {
            occ: self.states[i].astype(float) for i, occ in enumerate(self.occupants)
        }


def _split_by_largest_gap(order: np.ndarray, means: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split component indices (sorted by mean) at the largest mean gap."""
    sorted_means = means[order]
    gaps = np.diff(sorted_means)
    cut = int(np.argmax(gaps)) + 1
    return order[:cut], order[cut:]


def _split_low_group(
    order: np.ndarray, means: np.ndarray, idle_threshold_w: float
) -> tuple[np.ndarray, np.ndarray]:
    """First-pass merge of ≥ 3 components into a low and a high group.

    Cut at the largest gap among cuts whose low side stays under the idle
    threshold, so a mid-power level can never be absorbed into the absence
    group merely because the upper gap is wider; when every component sits
    above the threshold, fall back to the unconstrained largest gap.
    """
    sorted_means = means[order]
    gaps = np.diff(sorted_means)
    allowed = np.flatnonzero(sorted_means[:-1] < idle_threshold_w)
    if allowed.size:
        cut = int(allowed[np.argmax(gaps[allowed])]) + 1
    else:
        cut = int(np.argmax(gaps)) + 1
    return order[:cut], order[cut:]


def _derived_seed(master: int, *path: int) -> int:
    return int(np.random.SeedSequence([master, *path]).generate_state(1)[0])


def infer_states(grid: TimeSeriesGrid, config: StateConfig | None = None) -> StateGrid:
    state_grid, _ = infer_states_detailed(grid, config)
    return state_grid


def infer_states_detailed(
    grid: TimeSeriesGrid, config: StateConfig | None = None
) -> tuple[StateGrid, list[OccupantFit]]:
    """Two-step clustering of each occupant's power values into states 1..3.

    First fit separates the low-power cluster (state 1) from the rest;
    the higher-power samples are refit and split into states 2 and 3 by
    component mean.  Degenerate outcomes fall back to monotone rules:
    a single first-pass component maps everything to state 1 (mean below
    the idle threshold) or state 3; three or more first-pass components
    are merged to two groups at the largest mean gap whose low side stays
    under the idle threshold (unconstrained largest gap when none does);
    a single second-pass component sends all high samples to state 3.
    """
    cfg = config or StateConfig()
    n_occ = len(grid.occupants)
    states = np.empty((n_occ, grid.n_steps), dtype=np.int8)
    state_power: list[dict[int, float]] = []
    fits: list[OccupantFit] = []

    for i, occ in enumerate(grid.occupants):
        x = grid.values[i]
        first = fit_vbgmm(
            x,
            k_max=cfg.k_max,
            priors=cfg.priors,
            tol=cfg.tol,
            max_iter=cfg.max_iter,
            seed=_derived_seed(cfg.seed, i),
        )
        labels = np.ones(x.size, dtype=np.int8)
        second = None
        n_eff = effective_components(first, cfg.weight_floor)
        if first.degenerate or n_eff == 1:
            mean = float(first.means[np.argmax(first.weights)])
            if mean < cfg.idle_threshold_w:
                rule = "single-low"
            else:
                labels[:] = 3
                rule = "single-high"
        else:
            keep = np.flatnonzero(first.weights >= cfg.weight_floor)
            comp = first.assign(x, cfg.weight_floor)
            order = keep[np.argsort(first.means[keep], kind="stable")]
            low_comps, high_comps = _split_low_group(
                np.arange(order.size), first.means[order], cfg.idle_threshold_w
            )
            low_set = set(order[low_comps].tolist())
            is_high = np.array([c not in low_set for c in comp])
            rule = "two-step" if n_eff == 2 else "two-step-merged"
            high_x = x[is_high]
            second = fit_vbgmm(
                high_x,
                k_max=cfg.k_max,
                priors=cfg.priors,
                tol=cfg.tol,
                max_iter=cfg.max_iter,
                seed=_derived_seed(cfg.seed, i, 1),
            )
            n_eff2 = effective_components(second, cfg.weight_floor)
            if second.degenerate or n_eff2 == 1:
                labels[is_high] = 3
                rule += "/high-only"
            else:
                keep2 = np.flatnonzero(second.weights >= cfg.weight_floor)
                comp2 = second.assign(high_x, cfg.weight_floor)
                order2 = keep2[np.argsort(second.means[keep2], kind="stable")]
                med_comps, high2_comps = _split_by_largest_gap(
                    np.arange(order2.size), second.means[order2]
                )
                med_set = set(order2[med_comps].tolist())
                high_labels = np.where(
                    np.array([c in med_set for c in comp2]), 2, 3
                ).astype(np.int8)
                labels[is_high] = high_labels
        states[i] = labels
        state_power.append(
            {int(s): float(np.mean(x[labels == s])) for s in np.unique(labels)}
        )
        fits.append(OccupantFit(occ, first, second, rule))

    return (
        StateGrid(list(grid.occupants), grid.start, states, state_power),
        fits,
    )


def write_states(grid: StateGrid, path, header_comment: str | None = None) -> None:
    """Persist a StateGrid as occupant_id,timestamp,state rows."""
    epochs = grid.step_epochs()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("occupant_id,timestamp,state\n")
        for i, occ in enumerate(grid.occupants):
            rows = grid.states[i]
            for t, s in zip(epochs, rows):
                fh.write(f"{occ},{format_timestamp(t)},{int(s)}\n")


def load_states(path) -> StateGrid:
    from .ingest import _read_rows

    per_occ: dict[str, list[tuple[int, int]]] = {}
    for lineno, row in _read_rows(path, ["occupant_id", "timestamp", "state"]):
        if len(row) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 fields")
        s = int(row[2])
        if s not in (1, 2, 3):
            raise InputError(f"{path}:{lineno}: state must be 1, 2, or 3")
        per_occ.setdefault(row[0].strip(), []).append(
            (int(parse_timestamp(row[1]).timestamp()), s)
        )
    if not per_occ:
        raise InputError(f"{path}: no state rows")
    occupants = list(per_occ)
    epochs = np.array([t for t, _ in per_occ[occupants[0]]], dtype=np.int64)
    if np.any(np.diff(epochs) != STEP_SECONDS):
        raise InputError(f"{path}: state timestamps must be contiguous 15-minute steps")
    states = np.empty((len(occupants), epochs.size), dtype=np.int8)
    for i, occ in enumerate(occupants):
        rows = per_occ[occ]
        if len(rows) != epochs.size or any(t != e for (t, _), e in zip(rows, epochs)):
            raise InputError(f"{path}: occupant {occ} does not share the state timeline")
        states[i] = [s for _, s in rows]
    start = datetime.fromtimestamp(int(epochs[0]), tz=timezone.utc)
    return StateGrid(occupants, start, states)


def write_models(fits: list[OccupantFit], config: StateConfig, path, extra: dict | None = None) -> None:
    """Persist per-occupant mixture models (and the config used) as JSON."""
    doc = {
        "config": {
            "k_max": config.k_max,
            "weight_floor": config.weight_floor,
            "tol": config.tol,
            "max_iter": config.max_iter,
            "idle_threshold_w": config.idle_threshold_w,
            "seed": config.seed,
            "priors": {
                "concentration": config.priors.concentration,
                "mean": config.priors.mean,
                "mean_scale": config.priors.mean_scale,
                "shape": config.priors.shape,
                "rate": config.priors.rate,
            },
        },
        "occupants": [
            {
                "occupant_id": f.occupant_id,
                "rule": f.rule,
                "first": f.first.to_dict(),
                "second": None if f.second is None else f.second.to_dict(),
            }
            for f in fits
        ],
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
