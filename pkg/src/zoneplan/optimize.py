"""Layout optimizers: greedy swap clustering and a genetic algorithm.

A layout assigns occupants to desks grouped into fixed-size zones.  The
swap optimizer minimizes total zone diversity with incremental deltas;
the GA minimizes any caller-supplied fitness (typically surrogate
energy).  Both are fully seeded and deterministic.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .diversity import distance_matrix, layout_diversity, stack_vectors
from .ingest import InputError, ZoneMap


@dataclass
class Layout:
    """Occupant-to-desk assignment over a fixed zone/desk structure.

    zones maps zone_id to its ordered desk list; assignment maps desk to
    occupant for occupied desks only (missing desk = vacant).
    """

    zones: dict[str, list[str]]
    assignment: dict[str, str]

    def __post_init__(self):
        all_desks: list[str] = [d for desks in self.zones.values() for d in desks]
        if len(set(all_desks)) != len(all_desks):
            raise ValueError("desk ids must be unique across zones")
        desk_set = set(all_desks)
        unknown = [d for d in self.assignment if d not in desk_set]
        if unknown:
            raise ValueError(f"assignment references unknown desks: {unknown}")
        occs = list(self.assignment.values())
        if len(set(occs)) != len(occs):
            raise ValueError("an occupant is assigned to more than one desk")

    @classmethod
    def from_zone_map(cls, zone_map: ZoneMap) -> "Layout":
        zones: dict[str, list[str]] = {}
        assignment: dict[str, str] = {}
        for occ, desk, zone in zone_map.entries:
            zones.setdefault(zone, []).append(desk)
            if occ:
                assignment[desk] = occ
        return cls(zones, assignment)

    @classmethod
    def from_groups(cls, groups: Mapping[str, Sequence[str]]) -> "Layout":
        """Build a fully occupied layout from zone -> occupant lists."""
        zones = {
            z: [f"{z}-d{k}" for k in range(len(occs))] for z, occs in groups.items()
        }
        assignment = {
            f"{z}-d{k}": occ
            for z, occs in groups.items()
            for k, occ in enumerate(occs)
        }
        return cls(zones, assignment)

    def copy(self) -> "Layout":
        return Layout({z: list(d) for z, d in self.zones.items()}, dict(self.assignment))

    def occupants(self) -> list[str]:
        return sorted(self.assignment.values())

    def desk_order(self) -> list[str]:
        """Canonical desk traversal: zones sorted by id, desks in zone order."""
        return [d for z in sorted(self.zones) for d in self.zones[z]]

    def zone_of_desk(self) -> dict[str, str]:
        return {d: z for z, desks in self.zones.items() for d in desks}

    def by_zone(self) -> dict[str, list[str]]:
        """zone_id -> occupants seated there, in desk order."""
        return {
            z: [self.assignment[d] for d in desks if d in self.assignment]
            for z, desks in self.zones.items()
        }

    def zone_key(self) -> tuple:
        """Hashable zone-content signature (order within a zone ignored)."""
        return tuple(
            (z, tuple(sorted(occs))) for z, occs in sorted(self.by_zone().items())
        )

    def same_structure(self, other: "Layout") -> bool:
        return self.zones == other.zones and set(self.assignment.values()) == set(
            other.assignment.values()
        )


def random_layout(template: Layout, rng: np.random.Generator) -> Layout:
    """Uniformly random assignment of the template's occupants to its desks."""
    desks = template.desk_order()
    tokens: list[str | None] = sorted(template.assignment.values())
    tokens += [None] * (len(desks) - len(tokens))
    perm = rng.permutation(len(tokens))
    assignment = {
        desk: tokens[perm[i]] for i, desk in enumerate(desks) if tokens[perm[i]] is not None
    }
    return Layout({z: list(d) for z, d in template.zones.items()}, assignment)


def count_layouts(n_occupants: int, n_zones: int) -> int:
    """Assignments into n interchangeable equal-size zones: I!/((m!)^n n!)."""
    if n_zones < 1 or n_occupants < 1:
        raise ValueError("occupants and zones must be positive")
    if n_occupants % n_zones != 0:
        raise ValueError(f"{n_zones} zones do not evenly divide {n_occupants} occupants")
    m = n_occupants // n_zones
    return math.factorial(n_occupants) // (
        math.factorial(m) ** n_zones * math.factorial(n_zones)
    )


def count_layouts_distinct(zone_sizes: Sequence[int]) -> int:
    """Assignments when zones are distinguishable: I! / prod(m_z!)."""
    if not zone_sizes or any(s < 1 for s in zone_sizes):
        raise ValueError("zone sizes must be positive")
    total = math.factorial(sum(zone_sizes))
    for s in zone_sizes:
        total //= math.factorial(s)
    return total


@dataclass
class OptTrace:
    """Objective per iteration/generation plus the running best."""

    objectives: list[float]
    best_so_far: list[float]
    accepted: list[tuple[int, str, str]] = field(default_factory=list)
    kind: str = "swap"


def write_trace(trace: OptTrace, path, header_comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("iteration,objective,best_so_far\n")
        for i, (obj, best) in enumerate(zip(trace.objectives, trace.best_so_far)):
            fh.write(f"{i},{obj!r},{best!r}\n")


def write_layout(layout: Layout, path, header_comment: str | None = None) -> None:
    zone_of = layout.zone_of_desk()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("desk_id,zone_id,occupant_id\n")
        for desk in layout.desk_order():
            fh.write(f"{desk},{zone_of[desk]},{layout.assignment.get(desk, '')}\n")


def load_layout(path) -> Layout:
    from .ingest import _read_rows

    zones: dict[str, list[str]] = {}
    assignment: dict[str, str] = {}
    for lineno, row in _read_rows(path, ["desk_id", "zone_id", "occupant_id"]):
        if len(row) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 fields")
        desk, zone, occ = (v.strip() for v in row)
        if not desk or not zone:
            raise InputError(f"{path}:{lineno}: desk_id and zone_id are required")
        zones.setdefault(zone, []).append(desk)
        if occ:
            assignment[desk] = occ
    if not zones:
        raise InputError(f"{path}: no layout rows")
    try:
        return Layout(zones, assignment)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def layout_objective(layout: Layout, vectors: Mapping[str, np.ndarray]) -> float:
    """Total zone diversity of a layout (the swap optimizer's objective)."""
    return layout_diversity(layout.by_zone(), vectors).total


def swap_delta(
    layout: Layout,
    occupant_a: str,
    occupant_b: str,
    vectors: Mapping[str, np.ndarray],
) -> float:
    """Objective change from swapping two occupants, touching only their zones."""
    by_zone = layout.by_zone()
    zone_of = {occ: z for z, occs in by_zone.items() for occ in occs}
    za, zb = zone_of[occupant_a], zone_of[occupant_b]
    if za == zb:
        raise ValueError("occupants are in the same zone")

    def zdiv(occs: list[str]) -> float:
        from .diversity import zone_diversity

        return zone_diversity(stack_vectors(vectors, occs)) if occs else 0.0

    def swapped(occs: list[str], old: str, new: str) -> list[str]:
        return [new if o == old else o for o in occs]

    before = zdiv(by_zone[za]) + zdiv(by_zone[zb])
    after = zdiv(swapped(by_zone[za], occupant_a, occupant_b)) + zdiv(
        swapped(by_zone[zb], occupant_b, occupant_a)
    )
    return after - before


def swap_optimize(
    vectors: Mapping[str, np.ndarray],
    initial: Layout,
    iter_limit: int | None = None,
    seed: int = 0,
) -> tuple[Layout, OptTrace]:
    """Greedy diversity clustering via randomized best-swap moves.

    Each iteration picks a uniformly random occupied desk and executes
    the lowest-delta swap of its occupant against every occupant in
    every other zone, the null swap included (ties break to the lowest
    occupant index, the null swap counting as its own occupant's index).
    """
    if not initial.assignment:
        raise ValueError("empty layout")
    occs = initial.occupants()
    occ_idx = {o: i for i, o in enumerate(occs)}
    n = len(occs)
    limit = 50 * n if iter_limit is None else iter_limit
    if limit < 1:
        raise ValueError("iter_limit must be >= 1")

    d = distance_matrix(stack_vectors(vectors, occs))
    zone_ids = sorted(initial.zones)
    zid_idx = {z: j for j, z in enumerate(zone_ids)}
    nz = len(zone_ids)
    zone_of_desk = initial.zone_of_desk()

    desk_of_occ: dict[int, str] = {}
    occ_zone = np.zeros(n, dtype=np.intp)
    for desk, occ in initial.assignment.items():
        i = occ_idx[occ]
        desk_of_occ[i] = desk
        occ_zone[i] = zid_idx[zone_of_desk[desk]]

    counts = np.bincount(occ_zone, minlength=nz)
    denom = np.where(counts > 1, counts * (counts - 1), 1).astype(float)
    live = counts > 1  # single-occupant zones contribute 0 regardless

    def indicator() -> np.ndarray:
        ind = np.zeros((n, nz))
        ind[np.arange(n), occ_zone] = 1.0
        return ind

    m = d @ indicator()  # m[i, z] = total distance from occupant i to zone z
    zone_sum = np.array(
        [d[np.ix_(occ_zone == z, occ_zone == z)].sum() for z in range(nz)]
    )

    def total() -> float:
        return float(np.sum(np.where(live, zone_sum / denom, 0.0)))

    rng = np.random.default_rng(seed)
    occupied = sorted(initial.assignment)  # fixed: swaps never change occupancy
    occ_at = dict(initial.assignment)
    idx_all = np.arange(n)
    objectives: list[float] = []
    best: list[float] = []
    accepted: list[tuple[int, str, str]] = []
    current = total()

    for it in range(limit):
        desk = occupied[int(rng.integers(len(occupied)))]
        a = occ_idx[occ_at[desk]]
        za = occ_zone[a]
        own = np.where(live[occ_zone], 1.0 / denom[occ_zone], 0.0)
        wa = (1.0 / denom[za]) if live[za] else 0.0
        delta = (m[:, za] - m[a, za] - d[a]) * wa + (
            m[a, occ_zone] - m[idx_all, occ_zone] - d[a]
        ) * own
        delta = np.where(occ_zone == za, np.inf, delta)
        delta[a] = 0.0  # the null swap
        b = int(np.flatnonzero(delta == delta.min())[0])
        if b != a:
            zb = occ_zone[b]
            current += float(delta[b])
            zone_sum[za] += m[b, za] - m[a, za] - d[a, b]
            zone_sum[zb] += m[a, zb] - m[b, zb] - d[a, b]
            m[:, za] += d[:, b] - d[:, a]
            m[:, zb] += d[:, a] - d[:, b]
            occ_zone[a], occ_zone[b] = zb, za
            desk_a, desk_b = desk_of_occ[a], desk_of_occ[b]
            desk_of_occ[a], desk_of_occ[b] = desk_b, desk_a
            occ_at[desk_a], occ_at[desk_b] = occs[b], occs[a]
            accepted.append((it, occs[a], occs[b]))
        if (it + 1) % 1024 == 0:
            m = d @ indicator()
            zone_sum = np.array(
                [d[np.ix_(occ_zone == z, occ_zone == z)].sum() for z in range(nz)]
            )
            current = total()
        objectives.append(current)
        best.append(current if not best else min(best[-1], current))

    final = Layout({z: list(dk) for z, dk in initial.zones.items()}, dict(occ_at))
    exact = layout_objective(final, vectors)
    if objectives:
        objectives[-1] = exact
        best[-1] = min(best[-1], exact)
    return final, OptTrace(objectives, best, accepted, kind="swap")


def _structures_match(a: Layout, b: Layout) -> None:
    if a.zones != b.zones:
        raise ValueError("layouts have different zone structures")
    if set(a.assignment.values()) != set(b.assignment.values()):
        raise ValueError("layouts have different occupant sets")


def crossover(parent_a: Layout, parent_b: Layout, seed: int = 0) -> Layout:
    """Desk-wise random parent pick with feasibility repair.

    Desks are processed in canonical order; a pick that would duplicate
    an already-placed occupant falls back to the other parent, then to
    deferral; deferred desks are filled with the unplaced occupants in
    seeded-random order (vacancies fill whatever remains).
    """
    _structures_match(parent_a, parent_b)
    rng = np.random.default_rng(seed)
    desks = parent_a.desk_order()
    none_budget = len(desks) - len(parent_a.assignment)
    used: set[str] = set()
    child: dict[str, str] = {}
    deferred: list[str] = []
    picks = rng.integers(0, 2, size=len(desks))
    for desk, pick in zip(desks, picks):
        first = parent_a if pick == 0 else parent_b
        second = parent_b if pick == 0 else parent_a
        placed = False
        for parent in (first, second):
            occ = parent.assignment.get(desk)
            if occ is None:
                if none_budget > 0:
                    none_budget -= 1
                    placed = True
                    break
            elif occ not in used:
                child[desk] = occ
                used.add(occ)
                placed = True
                break
        if not placed:
            deferred.append(desk)
    unplaced = sorted(set(parent_a.assignment.values()) - used)
    order = rng.permutation(len(unplaced))
    fill = [unplaced[i] for i in order]
    for desk in deferred:
        if fill:
            child[desk] = fill.pop(0)
    return Layout({z: list(d) for z, d in parent_a.zones.items()}, child)


def mutate(layout: Layout, m_mut: float, seed: int = 0) -> Layout:
    """With probability m_mut, swap one random desk per zone across zones."""
    if not 0.0 <= m_mut <= 1.0:
        raise ValueError("m_mut must be in [0, 1]")
    rng = np.random.default_rng(seed)
    if rng.random() >= m_mut:
        return layout.copy()
    out = layout.copy()
    zone_ids = sorted(out.zones)
    if len(zone_ids) < 2:
        return out
    for z in zone_ids:
        desks = out.zones[z]
        da = desks[int(rng.integers(len(desks)))]
        others = [w for w in zone_ids if w != z]
        zb = others[int(rng.integers(len(others)))]
        desks_b = out.zones[zb]
        db = desks_b[int(rng.integers(len(desks_b)))]
        oa = out.assignment.pop(da, None)
        ob = out.assignment.pop(db, None)
        if oa is not None:
            out.assignment[db] = oa
        if ob is not None:
            out.assignment[da] = ob
    return out


@dataclass(frozen=True)
class GaConfig:
    """Genetic algorithm knobs (survivors = elites + random non-elites)."""

    population: int = 100
    elites: int = 20
    random_survivors: int = 5
    children_per_pair: int = 1
    mutation_prob: float = 0.2
    generations: int = 200

    def validate(self) -> None:
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.elites < 1 or self.random_survivors < 0:
            raise ValueError("need at least one elite and non-negative randoms")
        if self.elites + self.random_survivors < 2:
            raise ValueError("need at least two survivors to pair")
        if self.elites + self.random_survivors > self.population:
            raise ValueError("survivors exceed the population")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation_prob must be in [0, 1]")
        if self.children_per_pair < 1 or self.generations < 1:
            raise ValueError("children_per_pair and generations must be >= 1")


def ga_optimize(
    fitness: Callable[[Layout], float],
    template: Layout,
    config: GaConfig | None = None,
    seed: int = 0,
    seeds_in: Sequence[Layout] | None = None,
) -> tuple[Layout, OptTrace]:
    """Generational GA: B best + R random survivors breed a fully new population.

    No elitism carries layouts over; the best-ever layout is tracked
    separately and returned.  The trace records each generation's best
    fitness and the running best.
    """
    cfg = config or GaConfig()
    cfg.validate()
    rng = np.random.default_rng(seed)

    population: list[Layout] = []
    for layout in seeds_in or []:
        _structures_match(template, layout)
        population.append(layout.copy())
    population = population[: cfg.population]
    while len(population) < cfg.population:
        population.append(random_layout(template, rng))

    best_layout: Layout | None = None
    best_fit = np.inf
    objectives: list[float] = []
    best_series: list[float] = []

    for gen in range(cfg.generations):
        fits = np.array([fitness(lay) for lay in population])
        if not np.all(np.isfinite(fits)):
            raise ValueError("fitness must be finite on valid layouts")
        order = np.lexsort((np.arange(fits.size), fits))
        gen_best = int(order[0])
        if fits[gen_best] < best_fit:
            best_fit = float(fits[gen_best])
            best_layout = population[gen_best].copy()
        objectives.append(float(fits[gen_best]))
        best_series.append(best_fit)
        if gen == cfg.generations - 1:
            break

        elite_idx = list(order[: cfg.elites])
        pool = [i for i in range(len(population)) if i not in set(elite_idx)]
        n_rand = min(cfg.random_survivors, len(pool))
        rand_idx = (
            list(rng.choice(pool, size=n_rand, replace=False)) if n_rand else []
        )
        survivors = [population[i] for i in elite_idx + rand_idx]
        pairs = [
            (i, j) for i in range(len(survivors)) for j in range(i + 1, len(survivors))
        ]
        pair_order = rng.permutation(len(pairs))
        children: list[Layout] = []
        k = 0
        while len(children) < cfg.population:
            pa, pb = pairs[pair_order[k % len(pairs)]]
            k += 1
            for _ in range(cfg.children_per_pair):
                if len(children) >= cfg.population:
                    break
                child = crossover(
                    survivors[pa], survivors[pb], seed=int(rng.integers(2**63))
                )
                child = mutate(child, cfg.mutation_prob, seed=int(rng.integers(2**63)))
                children.append(child)
        population = children

    assert best_layout is not None
    return best_layout, OptTrace(objectives, best_series, kind="ga")
