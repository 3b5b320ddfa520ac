"""Command-line pipeline: ingest, state inference, reports, surrogates,
layout optimization, simulation, and the self-contained synthetic demo.

One JSON config file (all fields optional, defaults below) plus flag
overrides drives every command.  Each output file starts with a comment
embedding the command, the effective-config hash, and the seed, and no
output contains timestamps of the run itself, so identical config+seed
reruns are byte-identical.

Exit codes: 0 success, 1 input error, 2 internal error.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import diversity as div
from . import ingest, optimize, reduce, states as states_mod, surrogate, synth

DEFAULT_CONFIG: dict = {
    "seed": 0,
    "out_dir": "out",
    "paths": {
        "plug_load": None,
        "grid": None,
        "zone_map": None,
        "lighting": None,
        "states": None,
        "model": None,
        "layout": None,
    },
    "window": {"start": None, "end": None, "exclude_days": []},
    "states": {
        "k_max": 10,
        "weight_floor": 0.01,
        "tol": 1e-6,
        "max_iter": 5000,
        "idle_threshold_w": 5.0,
        "priors": {
            "concentration": 1e-3,
            "mean": None,
            "mean_scale": 1.0,
            "shape": 0.5,
            "rate": None,
        },
    },
    "surrogate": {
        "kind": "rf",
        "split_fraction": 0.8,
        "cv_folds": 0,
        "ridge": 1e-8,
        "rf": {
            "n_trees": 200,
            "min_split": 50,
            "min_leaf": 2,
            "max_depth": 300,
            "bootstrap": True,
        },
    },
    "optimize": {
        "method": "cluster",
        "dims": 30,
        "iter_limit": None,
        "batch": 1,
        "seed_layouts": None,
        "random_baseline": 20,
        "ga": {
            "population": 100,
            "elites": 20,
            "random_survivors": 5,
            "children_per_pair": 1,
            "mutation_prob": 0.2,
            "generations": 200,
        },
    },
    "oracle": {
        "lit_power_w": 500.0,
        "standby_power_w": 20.0,
        "hold_weekday_min": 20,
        "hold_weekend_min": 10,
        "motion_state": 3,
        "daylight_factor": False,
    },
    "synth": {
        "counts": [9, 9, 9, 9],
        "n_days": 1,
        "p_high": 0.8,
        "jitter_minutes": 0.0,
        "start": "2018-01-01T00:00:00Z",
        "train_layouts": 30,
        "holdout_layouts": 6,
        "random_baseline": 20,
    },
}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as input errors (exit 1)."""

    def error(self, message):
        raise ingest.InputError(message)


def _deep_update(base: dict, override: dict) -> dict:
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


def _apply_set(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ingest.InputError(f"--set expects key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


def build_config(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ingest.InputError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ingest.InputError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ingest.InputError(f"{path}: config must be a JSON object")
        _deep_update(cfg, user)
    for assignment in getattr(args, "set", None) or []:
        _apply_set(cfg, assignment)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "out_dir", None):
        cfg["out_dir"] = args.out_dir
    for flag, key in (
        ("plug_load", "plug_load"),
        ("grid", "grid"),
        ("zone_map", "zone_map"),
        ("lighting", "lighting"),
        ("states_file", "states"),
        ("model", "model"),
        ("layout", "layout"),
    ):
        value = getattr(args, flag, None)
        if value:
            cfg["paths"][key] = value
    if getattr(args, "method", None):
        cfg["optimize"]["method"] = args.method
    if getattr(args, "dims", None) is not None:
        cfg["optimize"]["dims"] = args.dims
    if getattr(args, "seed_layouts", None):
        cfg["optimize"]["seed_layouts"] = args.seed_layouts
    if getattr(args, "batch", None) is not None:
        cfg["optimize"]["batch"] = args.batch
    if getattr(args, "surrogate_kind", None):
        cfg["surrogate"]["kind"] = args.surrogate_kind
    return cfg


def config_hash(cfg: dict) -> str:
    hashed = {k: v for k, v in cfg.items() if k != "out_dir"}  # destination is not semantics
    canon = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def _header(cfg: dict, command: str) -> str:
    return f"zoneplan {command} config={config_hash(cfg)} seed={cfg['seed']}"


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_path(cfg: dict, key: str, fallback: Path | None = None) -> Path:
    value = cfg["paths"].get(key)
    if value is None and fallback is not None and fallback.exists():
        return fallback
    if value is None:
        raise ingest.InputError(f"config paths.{key} is required for this command")
    path = Path(value)
    if not path.exists():
        raise ingest.InputError(f"paths.{key}: file not found: {path}")
    return path


def _state_config(cfg: dict) -> states_mod.StateConfig:
    s = cfg["states"]
    priors = states_mod.VbGmmPriors(**s["priors"])
    return states_mod.StateConfig(
        k_max=s["k_max"],
        priors=priors,
        weight_floor=s["weight_floor"],
        tol=s["tol"],
        max_iter=s["max_iter"],
        idle_threshold_w=s["idle_threshold_w"],
        seed=cfg["seed"],
    )


def _rf_config(cfg: dict) -> surrogate.RfConfig:
    return surrogate.RfConfig(**cfg["surrogate"]["rf"])


def _ga_config(cfg: dict) -> optimize.GaConfig:
    return optimize.GaConfig(**cfg["optimize"]["ga"])


def _oracle_config(cfg: dict) -> synth.LightingOracleConfig:
    return synth.LightingOracleConfig(**cfg["oracle"])


def _parse_window(cfg: dict, events) -> tuple[datetime, datetime]:
    w = cfg["window"]
    if w["start"] and w["end"]:
        return ingest.parse_timestamp(w["start"]), ingest.parse_timestamp(w["end"])
    lo = min(int(ev.times[0]) for ev in events.values())
    hi = max(int(ev.times[-1]) for ev in events.values())
    day = ingest.DAY_SECONDS
    start = (lo // day) * day
    end = ((hi + ingest.STEP_SECONDS + day - 1) // day) * day
    return (
        datetime.fromtimestamp(start, tz=timezone.utc),
        datetime.fromtimestamp(end, tz=timezone.utc),
    )


def cmd_ingest(cfg: dict) -> int:
    events = ingest.load_plug_load(_require_path(cfg, "plug_load"))
    window = _parse_window(cfg, events)
    grid = ingest.resample_15min(events, window)
    ranges = []
    for pair in cfg["window"]["exclude_days"]:
        if len(pair) != 2:
            raise ingest.InputError("window.exclude_days entries must be [start, end]")
        ranges.append((ingest.parse_timestamp(pair[0]), ingest.parse_timestamp(pair[1])))
    if ranges:
        grid = ingest.exclude_days(grid, ranges)
    out = _out_dir(cfg)
    ingest.write_grid(grid, out / "grid.csv", _header(cfg, "ingest"))
    print(f"wrote {out / 'grid.csv'} ({len(grid.occupants)} occupants, {grid.n_days} days)")
    return 0


def cmd_infer_states(cfg: dict) -> int:
    grid_path = _require_path(cfg, "grid", fallback=_out_dir(cfg) / "grid.csv")
    grid = ingest.load_grid(grid_path)
    state_cfg = _state_config(cfg)
    state_grid, fits = states_mod.infer_states_detailed(grid, state_cfg)
    out = _out_dir(cfg)
    states_mod.write_states(state_grid, out / "states.csv", _header(cfg, "infer-states"))
    states_mod.write_models(
        fits,
        state_cfg,
        out / "state_models.json",
        extra={"config_hash": config_hash(cfg), "command": "infer-states"},
    )
    print(f"wrote {out / 'states.csv'} and {out / 'state_models.json'}")
    return 0


def _load_states(cfg: dict) -> states_mod.StateGrid:
    path = _require_path(cfg, "states", fallback=_out_dir(cfg) / "states.csv")
    return states_mod.load_states(path)


def _load_layout_from_zone_map(cfg: dict) -> optimize.Layout:
    zone_map = ingest.load_zone_map(_require_path(cfg, "zone_map"))
    return optimize.Layout.from_zone_map(zone_map)


def cmd_diversity_report(cfg: dict) -> int:
    state_grid = _load_states(cfg)
    layout = _load_layout_from_zone_map(cfg)
    lighting = ingest.load_lighting(_require_path(cfg, "lighting"))
    header = _header(cfg, "diversity-report")
    out = _out_dir(cfg)
    zones = layout.by_zone()
    vectors = state_grid.vectors()

    report = div.layout_diversity(zones, vectors)
    div.write_diversity_csv(report, out / "diversity.csv", header)

    cal = ingest.StepCalendar(state_grid.start, state_grid.n_steps)
    n_days = state_grid.n_steps // ingest.STEPS_PER_DAY
    day_starts = state_grid.step_epochs()[:: ingest.STEPS_PER_DAY]
    hour_epochs = cal.hour_epochs()
    per_zone_daily: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    rows = []
    for zone_id in sorted(zones):
        divs = np.empty(n_days)
        energies = np.empty(n_days)
        for d in range(n_days):
            sl = slice(d * ingest.STEPS_PER_DAY, (d + 1) * ingest.STEPS_PER_DAY)
            day_vectors = {
                occ: vec[sl] for occ, vec in vectors.items() if occ in set(zones[zone_id])
            }
            divs[d] = div.zone_diversity(
                div.stack_vectors(day_vectors, list(zones[zone_id]))
            ) if zones[zone_id] else 0.0
            day_hours = sorted(set(hour_epochs[sl].tolist()))
            energies[d] = float(
                np.mean([lighting.energy(zone_id, h) for h in day_hours])
            )
            rows.append((zone_id, int(day_starts[d]), divs[d], energies[d]))
        per_zone_daily[zone_id] = (divs, energies)

    with open(out / "diversity_daily.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {header}\n")
        fh.write("zone_id,day_start,diversity,mean_energy_wh\n")
        for zone_id, day_start, d_val, e_val in rows:
            fh.write(
                f"{zone_id},{ingest.format_timestamp(day_start)},"
                f"{float(d_val)!r},{float(e_val)!r}\n"
            )

    results: list[tuple[str, div.RegressionResult | None]] = []
    for zone_id, (divs, energies) in sorted(per_zone_daily.items()):
        try:
            results.append((zone_id, div.ols_regress(divs, energies)))
        except (div.DegenerateRegressor, ValueError):
            results.append((zone_id, None))
    div.write_regression_csv(results, out / "regression.csv", header)
    print(f"wrote {out / 'diversity.csv'}, {out / 'diversity_daily.csv'}, {out / 'regression.csv'}")
    return 0


def cmd_train_surrogate(cfg: dict) -> int:
    state_grid = _load_states(cfg)
    layout = _load_layout_from_zone_map(cfg)
    lighting = ingest.load_lighting(_require_path(cfg, "lighting"))
    cal = ingest.StepCalendar(state_grid.start, state_grid.n_steps)
    table = surrogate.build_features(state_grid, layout.by_zone(), cal)
    y = surrogate.targets_from_lighting(table, lighting)
    train_idx, test_idx = surrogate.time_split(table, y, cfg["surrogate"]["split_fraction"])
    kind = cfg["surrogate"]["kind"]
    if kind == "mlr":
        model = surrogate.fit_mlr(table.take(train_idx), y[train_idx], cfg["surrogate"]["ridge"])
    elif kind == "rf":
        model = surrogate.fit_random_forest(
            table.take(train_idx), y[train_idx], _rf_config(cfg), seed=cfg["seed"]
        )
    else:
        raise ingest.InputError(f"surrogate.kind must be mlr or rf, got {kind!r}")
    test_table = table.take(test_idx)
    pred = model.predict_rows(test_table)
    metrics = surrogate.evaluate(
        y[test_idx], pred, test_table.hour_epoch, test_table.day_index
    )
    out = _out_dir(cfg)
    surrogate.save_model(model, out / "model.json")
    doc = {
        "command": "train-surrogate",
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "kind": kind,
        "n_train_rows": int(train_idx.size),
        "n_test_rows": int(test_idx.size),
        "test_metrics": {
            "mae": metrics.mae,
            "mse": metrics.mse,
            "r_squared_hourly": metrics.r_squared,
            "r_squared_daily": metrics.r_squared_daily,
            "r_squared_step": metrics.r_squared_step,
        },
    }
    folds = cfg["surrogate"]["cv_folds"]
    if folds and folds >= 2:
        if kind == "mlr":
            def fitter(tbl, ty):
                m = surrogate.fit_mlr(tbl, ty, cfg["surrogate"]["ridge"])
                return m.predict_rows
        else:
            def fitter(tbl, ty):
                m = surrogate.fit_random_forest(tbl, ty, _rf_config(cfg), seed=cfg["seed"])
                return m.predict_rows
        cv = surrogate.cross_validate(table.take(train_idx), y[train_idx], folds, fitter)
        doc["cv_metrics"] = {
            "mae": cv.mae,
            "mse": cv.mse,
            "r_squared_hourly": cv.r_squared,
            "r_squared_daily": cv.r_squared_daily,
            "r_squared_step": cv.r_squared_step,
        }
    with open(out / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if kind == "rf":
        importance = surrogate.feature_importance(model)
        with open(out / "importance.csv", "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# {_header(cfg, 'train-surrogate')}\n")
            fh.write("feature,importance\n")
            for name in surrogate.FEATURE_NAMES:
                fh.write(f"{name},{importance[name]!r}\n")
    print(f"wrote {out / 'model.json'} and {out / 'metrics.json'}")
    return 0


def _energy_fitness(model, state_grid, cal):
    """Layout fitness = predicted total energy, cached by zone contents."""
    cache: dict[tuple, float] = {}

    def fitness(layout: optimize.Layout) -> float:
        key = layout.zone_key()
        if key not in cache:
            report = surrogate.predict_energy(model, layout.by_zone(), state_grid, cal)
            cache[key] = report.grand_total
        return cache[key]

    return fitness


def _load_seed_layouts(path_value) -> list[optimize.Layout]:
    path = Path(path_value)
    if path.is_dir():
        files = sorted(path.glob("layout_*.csv")) or sorted(path.glob("*.csv"))
        if not files:
            raise ingest.InputError(f"{path}: no layout CSVs found")
        return [optimize.load_layout(f) for f in files]
    if not path.exists():
        raise ingest.InputError(f"seed layouts not found: {path}")
    return [optimize.load_layout(path)]


def cmd_optimize(cfg: dict) -> int:
    state_grid = _load_states(cfg)
    template = _load_layout_from_zone_map(cfg)
    method = cfg["optimize"]["method"]
    batch = int(cfg["optimize"]["batch"])
    if batch < 1:
        raise ingest.InputError("optimize.batch must be >= 1")
    out = _out_dir(cfg)
    header = _header(cfg, "optimize")
    cal = ingest.StepCalendar(state_grid.start, state_grid.n_steps)
    master = int(cfg["seed"])

    model = None
    if cfg["paths"].get("model"):
        model = surrogate.load_model(_require_path(cfg, "model"))
    if method == "ga" and model is None:
        raise ingest.InputError("the ga method needs paths.model (a trained surrogate)")

    vectors = state_grid.vectors()
    dims = cfg["optimize"]["dims"]
    representation = "raw"
    if method == "cluster" and dims:
        matrix, occupants = reduce.state_matrix(state_grid)
        factors = reduce.svd_decompose(matrix)
        if not 1 <= dims <= factors.rank:
            raise ingest.InputError(
                f"optimize.dims={dims} out of range (numerical rank {factors.rank})"
            )
        vectors = reduce.project(matrix, factors, dims, occupants).vectors()
        representation = f"reduced-{dims}"

    seeds_in = None
    if cfg["optimize"]["seed_layouts"]:
        seeds_in = _load_seed_layouts(cfg["optimize"]["seed_layouts"])

    fitness = _energy_fitness(model, state_grid, cal) if model is not None else None
    runs = []
    for k in range(batch):
        run_seed = master + k
        if method == "cluster":
            rng = np.random.default_rng(run_seed)
            initial = optimize.random_layout(template, rng)
            layout, trace = optimize.swap_optimize(
                vectors, initial, cfg["optimize"]["iter_limit"], seed=run_seed
            )
            objective = trace.best_so_far[-1]
        elif method == "ga":
            layout, trace = optimize.ga_optimize(
                fitness, template, _ga_config(cfg), seed=run_seed, seeds_in=seeds_in
            )
            objective = trace.best_so_far[-1]
        else:
            raise ingest.InputError(f"optimize.method must be cluster or ga, got {method!r}")
        optimize.write_layout(layout, out / f"layout_{k:03d}.csv", header)
        optimize.write_trace(trace, out / f"trace_{k:03d}.csv", header)
        runs.append((k, layout, objective))

    with open(out / "optimize_summary.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {header}\n")
        fh.write(f"# method: {method} representation: {representation}\n")
        if model is None:
            fh.write("run,objective\n")
            for k, _, objective in runs:
                fh.write(f"{k},{objective!r}\n")
        else:
            existing = surrogate.predict_energy(
                model, template.by_zone(), state_grid, cal
            ).grand_total
            n_rand = int(cfg["optimize"]["random_baseline"])
            rand_energies = []
            for j in range(n_rand):
                rng = np.random.default_rng(master + 100_000 + j)
                rand_layout = optimize.random_layout(template, rng)
                rand_energies.append(
                    surrogate.predict_energy(
                        model, rand_layout.by_zone(), state_grid, cal
                    ).grand_total
                )
            rand_mean = float(np.mean(rand_energies)) if rand_energies else float("nan")
            fh.write(f"# existing_energy_wh: {existing!r}\n")
            fh.write(f"# random_mean_energy_wh: {rand_mean!r} (n={n_rand})\n")
            fh.write("run,objective,energy_wh,pct_vs_existing,pct_vs_random_mean\n")
            pct_exist_base = 0.0 if rand_mean == 0 else 100.0 * (existing - rand_mean) / rand_mean
            fh.write(f"existing,,{existing!r},0.0,{pct_exist_base!r}\n")
            for k, layout, objective in runs:
                energy = surrogate.predict_energy(
                    model, layout.by_zone(), state_grid, cal
                ).grand_total
                pct_exist = 0.0 if existing == 0 else 100.0 * (energy - existing) / existing
                pct_rand = 0.0 if rand_mean == 0 else 100.0 * (energy - rand_mean) / rand_mean
                fh.write(
                    f"{k},{objective!r},{energy!r},{pct_exist!r},{pct_rand!r}\n"
                )
    print(f"wrote {batch} layout/trace pairs and {out / 'optimize_summary.csv'}")
    return 0


def cmd_simulate(cfg: dict) -> int:
    state_grid = _load_states(cfg)
    model = surrogate.load_model(_require_path(cfg, "model"))
    layout = optimize.load_layout(_require_path(cfg, "layout"))
    cal = ingest.StepCalendar(state_grid.start, state_grid.n_steps)
    baseline = None
    if cfg["paths"].get("zone_map"):
        baseline = _load_layout_from_zone_map(cfg).by_zone()
    report = surrogate.predict_energy(
        model, layout.by_zone(), state_grid, cal, baseline_zones=baseline
    )
    out = _out_dir(cfg)
    surrogate.write_energy_report(report, out / "energy.csv", _header(cfg, "simulate"))
    print(f"wrote {out / 'energy.csv'} (total {report.grand_total:.1f} wh)")
    return 0


def cmd_count_layouts(cfg: dict, occupants: int, zones: int, distinct: bool) -> int:
    if distinct:
        if occupants % zones != 0:
            raise ingest.InputError(f"{zones} zones do not evenly divide {occupants}")
        value = optimize.count_layouts_distinct([occupants // zones] * zones)
    else:
        value = optimize.count_layouts(occupants, zones)
    print(value)
    return 0


def cmd_synth_demo(cfg: dict) -> int:
    s = cfg["synth"]
    out = _out_dir(cfg)
    header = _header(cfg, "synth-demo")
    seed = int(cfg["seed"])
    oracle_cfg = _oracle_config(cfg)
    counts = tuple(int(c) for c in s["counts"])
    n_zones = len(counts)

    state_grid = synth.generate_population(
        counts,
        int(s["n_days"]),
        seed=seed,
        p_high=float(s["p_high"]),
        start=ingest.parse_timestamp(s["start"]),
        jitter_minutes=float(s["jitter_minutes"]),
    )
    states_mod.write_states(state_grid, out / "states.csv", header)
    with open(out / "heatmap.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {header}\n")
        fh.write("occupant_id,step_index,state\n")
        for i, occ in enumerate(state_grid.occupants):
            for t in range(state_grid.n_steps):
                fh.write(f"{occ},{t},{int(state_grid.states[i, t])}\n")

    cal = ingest.StepCalendar(state_grid.start, state_grid.n_steps)
    pure_zones = synth.archetype_pure_layout(state_grid, n_zones)
    pure = optimize.Layout.from_groups(pure_zones)
    rng = np.random.default_rng(seed)
    existing = optimize.random_layout(pure, rng)
    entries = [
        (existing.assignment.get(desk, ""), desk, zone)
        for zone in sorted(existing.zones)
        for desk in existing.zones[zone]
    ]
    ingest.write_zone_map(ingest.ZoneMap(entries), out / "zone_map.csv", header)

    lighting = synth.oracle_lighting_table(existing.by_zone(), state_grid, oracle_cfg, cal)
    ingest.write_lighting(lighting, out / "lighting.csv", header)

    def oracle_total(layout: optimize.Layout) -> float:
        _, energy = synth.oracle_lighting(layout.by_zone(), state_grid, oracle_cfg, cal)
        return float(energy.sum())

    # train the surrogate on oracle data over many random layouts so it
    # sees varied zone compositions, then hold some layouts out
    n_train = int(s["train_layouts"])
    n_hold = int(s["holdout_layouts"])
    tables, targets = [], []
    for j in range(n_train + n_hold):
        lay = optimize.random_layout(pure, np.random.default_rng(seed + 10_000 + j))
        table_j = surrogate.build_features(state_grid, lay.by_zone(), cal)
        light_j = synth.oracle_lighting_table(lay.by_zone(), state_grid, oracle_cfg, cal)
        tables.append(table_j)
        targets.append(surrogate.targets_from_lighting(table_j, light_j))
    train_table = surrogate.concat_tables(tables[:n_train])
    train_y = np.concatenate(targets[:n_train])
    model = surrogate.fit_random_forest(train_table, train_y, _rf_config(cfg), seed=seed)
    surrogate.save_model(model, out / "model.json")
    hold_table = surrogate.concat_tables(tables[n_train:])
    hold_y = np.concatenate(targets[n_train:])
    hold_pred = model.predict_rows(hold_table)
    metrics = surrogate.evaluate(hold_y, hold_pred, hold_table.hour_epoch, hold_table.day_index)

    vectors = state_grid.vectors()
    cluster_layout, cluster_trace = optimize.swap_optimize(
        vectors, existing, None, seed=seed
    )
    optimize.write_layout(cluster_layout, out / "cluster_layout.csv", header)
    optimize.write_trace(cluster_trace, out / "cluster_trace.csv", header)

    fitness = _energy_fitness(model, state_grid, cal)
    ga_layout, ga_trace = optimize.ga_optimize(
        fitness, pure, _ga_config(cfg), seed=seed
    )
    optimize.write_layout(ga_layout, out / "ga_layout.csv", header)
    optimize.write_trace(ga_trace, out / "ga_trace.csv", header)

    n_rand = int(s["random_baseline"])
    rand_totals = [
        oracle_total(optimize.random_layout(pure, np.random.default_rng(seed + 20_000 + j)))
        for j in range(n_rand)
    ]
    rand_mean = float(np.mean(rand_totals))
    entries_rows = [
        ("random_mean", rand_mean),
        ("existing", oracle_total(existing)),
        ("archetype_pure", oracle_total(pure)),
        ("cluster", oracle_total(cluster_layout)),
        ("ga", oracle_total(ga_layout)),
    ]
    with open(out / "savings.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {header}\n")
        fh.write(f"# rf_holdout_mae: {metrics.mae!r} r2_hourly: {metrics.r_squared!r}\n")
        fh.write("label,oracle_energy_wh,pct_vs_random_mean\n")
        for label, value in entries_rows:
            pct = 0.0 if rand_mean == 0 else 100.0 * (value - rand_mean) / rand_mean
            fh.write(f"{label},{value!r},{pct!r}\n")
    print(f"wrote synthetic demo outputs to {out}")
    return 0


def _make_parser() -> _Parser:
    parser = _Parser(prog="zoneplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (dotted path, JSON value)")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out-dir", dest="out_dir", help="output directory")

    p = sub.add_parser("ingest", help="resample plug-load events to a 15-minute grid")
    common(p)
    p.add_argument("--plug-load", dest="plug_load", help="plug-load events CSV")

    p = sub.add_parser("infer-states", help="cluster power values into states 1-3")
    common(p)
    p.add_argument("--grid", help="resampled grid CSV")

    p = sub.add_parser("diversity-report", help="daily zone diversity and OLS vs energy")
    common(p)
    p.add_argument("--states", dest="states_file", help="states CSV")
    p.add_argument("--zone-map", dest="zone_map", help="zone map CSV")
    p.add_argument("--lighting", help="hourly lighting CSV")

    p = sub.add_parser("train-surrogate", help="fit the lighting-energy model")
    common(p)
    p.add_argument("--states", dest="states_file", help="states CSV")
    p.add_argument("--zone-map", dest="zone_map", help="zone map CSV")
    p.add_argument("--lighting", help="hourly lighting CSV")
    p.add_argument("--kind", dest="surrogate_kind", choices=["mlr", "rf"],
                   help="surrogate model type")

    p = sub.add_parser("optimize", help="optimize the occupant layout")
    common(p)
    p.add_argument("--method", choices=["cluster", "ga"])
    p.add_argument("--dims", type=int, help="SVD dimensions for the cluster method")
    p.add_argument("--seed-layouts", dest="seed_layouts",
                   help="layout CSV or directory used to seed the GA population")
    p.add_argument("--batch", type=int, help="number of seeded runs")
    p.add_argument("--states", dest="states_file", help="states CSV")
    p.add_argument("--zone-map", dest="zone_map", help="zone map CSV")
    p.add_argument("--model", help="trained surrogate JSON (required for ga)")

    p = sub.add_parser("simulate", help="score a layout with a trained surrogate")
    common(p)
    p.add_argument("--states", dest="states_file", help="states CSV")
    p.add_argument("--model", help="trained surrogate JSON")
    p.add_argument("--layout", help="layout CSV to score")
    p.add_argument("--zone-map", dest="zone_map", help="baseline zone map CSV")

    p = sub.add_parser("count-layouts", help="count feasible assignments")
    common(p)
    p.add_argument("occupants", type=int)
    p.add_argument("zones", type=int)
    p.add_argument("--distinct-zones", action="store_true",
                   help="treat zones as distinguishable (drop the n! factor)")

    p = sub.add_parser("synth-demo", help="closed-loop synthetic pipeline demo")
    common(p)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = _make_parser()
    args = parser.parse_args(argv)
    cfg = build_config(args)
    command = args.command
    if command == "ingest":
        return cmd_ingest(cfg)
    if command == "infer-states":
        return cmd_infer_states(cfg)
    if command == "diversity-report":
        return cmd_diversity_report(cfg)
    if command == "train-surrogate":
        return cmd_train_surrogate(cfg)
    if command == "optimize":
        return cmd_optimize(cfg)
    if command == "simulate":
        return cmd_simulate(cfg)
    if command == "count-layouts":
        return cmd_count_layouts(cfg, args.occupants, args.zones, args.distinct_zones)
    if command == "synth-demo":
        return cmd_synth_demo(cfg)
    raise ingest.InputError(f"unknown command {command!r}")


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except (ingest.InputError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
