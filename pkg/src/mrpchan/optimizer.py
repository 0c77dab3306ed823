"""GA-MRPE: extract the RP count and placement whose modeled channel
statistics best match a set of targets.

A genome holds ``q_max`` slots of (distance, AoD, ZoD) plus an
active-slot mask; inactive slots keep their latent genes so they can be
reactivated by mutation. The PL target is enforced exactly by rescaling
distances (``w_pl = HARD``) or scored like the other statistics when
``w_pl`` is finite.

Fitness is stochastic: it averages the statistics of
``fitness_realizations`` channel realizations, drawn from one stream shared by
the whole run (common random numbers), so a genome scores the same in
every generation.
"""
import logging
import math
from collections import Counter
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .core import (
    ChannelDomainError,
    ConstraintSet,
    DrawSite,
    InfeasibleConstraintsError,
    MalformedInputError,
    MeasuredTargets,
    RandomStream,
    RpPlacement,
    ValidationReport,
    validate_placement,
    wrap360,
)
from .monostatic import aggregate_pl, compose_channel
from .pathloss import InhNlosPathloss, PathlossModel
from .scenario import ScenarioConfig
from .stats import ChannelStats, PathList, channel_stats, mean_stats

__all__ = (
    "HARD",
    "GaConfig",
    "Individual",
    "OptimizationResult",
    "RankedPlacement",
    "crossover",
    "evaluate_placement",
    "fitness",
    "init_population",
    "modal_q",
    "mutate",
    "pl_repair",
    "repair",
    "run_ga",
    "select_parents",
    "selection_probabilities",
    "weighted_error",
)

logger = logging.getLogger("mrpchan")

HARD = math.inf

# pl_repair leaves distances alone within this distance of the target.
PL_TOLERANCE_DB = 1e-9
# An evaluated individual farther than this from the target is invalid.
PL_CHECK_TOLERANCE_DB = 1e-6

_COLUMNS = {"distance": 0, "aod": 1, "zod": 2}


class GaConfig(NamedTuple):
    max_iterations: int = 20
    convergence_eps: float = 1e-6
    population_size: int = 40
    crossover_rate: float = 1.0
    mutation_rate: float = 0.2
    w_pl: float = HARD
    w_ds: float = 1e8
    w_as_az: float = 1.0
    w_as_zen: float = 0.0
    constraints: ConstraintSet = ConstraintSet()
    fitness_realizations: int = 30
    root_seed: int = 0
    include_sf: bool = False
    top_fraction: float = 0.05
    repair_attempts: int = 50
    init_attempts: int = 100
    # Generations in a row without improvement beyond `convergence_eps`
    # before stopping.
    patience: int = 3

    @property
    def pl_hard(self) -> bool:
        return math.isinf(self.w_pl)

    def check(self) -> None:
        self.constraints.check()
        if self.max_iterations < 0:
            raise ValueError(f"`max_iterations` must be >= 0: {self.max_iterations}")
        if self.population_size < 2:
            raise ValueError(f"`population_size` must be >= 2: {self.population_size}")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"`{name}` must lie in [0, 1]: {getattr(self, name)}")
        if self.fitness_realizations < 1:
            raise ValueError(
                f"`fitness_realizations` must be >= 1: {self.fitness_realizations}"
            )
        for name in ("w_ds", "w_as_az", "w_as_zen"):
            if not 0 <= getattr(self, name) < math.inf:
                raise ValueError(f"`{name}` must be finite and nonnegative")
        if self.w_pl < 0:
            raise ValueError("`w_pl` must be nonnegative or HARD")
        if not 0 < self.top_fraction <= 1:
            raise ValueError(f"`top_fraction` must lie in (0, 1]: {self.top_fraction}")
        if self.patience < 1 or self.repair_attempts < 1 or self.init_attempts < 1:
            raise ValueError("Retry budgets and `patience` must be positive")


class Individual(NamedTuple):
    """``genes`` has shape (q_max, 3): distance [m], AoD [deg], ZoD [deg]."""

    genes: np.ndarray
    active: np.ndarray

    @property
    def active_count(self) -> int:
        return int(np.count_nonzero(self.active))

    def placement(self) -> RpPlacement:
        return RpPlacement.from_entries(self.genes[self.active])

    def pinned(self) -> "Individual":
        """Rotate every AoD so that the first active slot sits at 0."""
        if not self.active.any():
            return self
        first = int(np.flatnonzero(self.active)[0])
        genes = self.genes.copy()
        genes[:, 1] = wrap360(genes[:, 1] - genes[first, 1])
        genes[first, 1] = 0.0
        return Individual(genes, self.active.copy())

    def key(self) -> bytes:
        return np.ascontiguousarray(self.genes[self.active]).tobytes()


class RankedPlacement(NamedTuple):
    placement: RpPlacement
    fitness: float
    stats: ChannelStats


class OptimizationResult(NamedTuple):
    best_placement: RpPlacement
    best_fitness: float
    best_stats: ChannelStats
    fitness_trace: Tuple[float, ...]
    mean_fitness_trace: Tuple[float, ...]
    top_individuals: Tuple[RankedPlacement, ...]

    @property
    def generations(self) -> int:
        return len(self.fitness_trace) - 1


def _bounds(c: ConstraintSet) -> Tuple[Tuple[float, float], ...]:
    return (
        (c.d_min_m, c.d_max_m),
        (c.aod_min_deg, c.aod_max_deg),
        (c.zod_min_deg, c.zod_max_deg),
    )


def _random_genes(rng: np.random.Generator, c: ConstraintSet) -> np.ndarray:
    return np.column_stack(
        [rng.uniform(low, high, c.q_max) for low, high in _bounds(c)]
    )


def pl_repair(
    distances: Sequence[float],
    pl_target_db: float,
    fc_ghz: float,
    model: Optional[PathlossModel] = None,
) -> Tuple[float, ...]:
    """Scale all distances by one factor so the aggregate PL meets the
    target exactly. Angles are not involved."""
    d = np.asarray(distances, dtype=float)
    if not d.size:
        raise MalformedInputError("No distances to repair")
    if np.any(d <= 0):
        raise ChannelDomainError(f"Distances must be positive: {d.tolist()}")
    model = model or InhNlosPathloss()
    current = aggregate_pl([model.gain_db(fc_ghz, x) for x in d])
    if abs(current - pl_target_db) <= PL_TOLERANCE_DB:
        return tuple(float(x) for x in d)
    scale = 10 ** ((current - pl_target_db) / model.slope_db)
    return tuple(float(x) for x in d * scale)


def _clamp_active_count(
    active: np.ndarray, c: ConstraintSet, rng: np.random.Generator
) -> None:
    while np.count_nonzero(active) < c.q_min:
        active[rng.choice(np.flatnonzero(~active))] = True
    while np.count_nonzero(active) > c.q_max:
        active[rng.choice(np.flatnonzero(active))] = False


def _resample_offenders(
    genes: np.ndarray,
    active: np.ndarray,
    report: ValidationReport,
    c: ConstraintSet,
    rng: np.random.Generator,
) -> None:
    slots = np.flatnonzero(active)
    bounds = _bounds(c)
    for violation in report.violations:
        if not violation.indices:
            continue
        column = _COLUMNS[violation.constraint.split("_")[0]]
        # For a pair, move the later RP only.
        slot = slots[violation.indices[-1]]
        genes[slot, column] = rng.uniform(*bounds[column])


def repair(
    ind: Individual,
    cfg: GaConfig,
    sc: ScenarioConfig,
    targets: MeasuredTargets,
    rng: np.random.Generator,
) -> Tuple[Optional[Individual], ValidationReport]:
    """Make ``ind`` feasible: clamp the active count, enforce the PL
    target, pin the first AoD and resample offending genes until the
    placement validates.

    Returns ``(None, last_report)`` when the attempts run out.
    """
    c = cfg.constraints
    genes = ind.genes.copy()
    active = ind.active.copy()
    _clamp_active_count(active, c, rng)

    report = ValidationReport()
    for _ in range(cfg.repair_attempts):
        if cfg.pl_hard:
            try:
                genes[active, 0] = pl_repair(
                    genes[active, 0], targets.pl_db, sc.fc_ghz, sc.pathloss
                )
            except ChannelDomainError:
                genes[active, 0] = rng.uniform(c.d_min_m, c.d_max_m, active.sum())
                continue
        candidate = Individual(genes, active).pinned()
        report = validate_placement(candidate.placement(), c)
        if report.ok:
            return candidate, report
        genes = candidate.genes.copy()
        _resample_offenders(genes, active, report, c, rng)
    return None, report


def _random_individual(
    cfg: GaConfig,
    targets: MeasuredTargets,
    sc: ScenarioConfig,
    rng: np.random.Generator,
) -> Individual:
    c = cfg.constraints
    failures: Counter = Counter()
    for _ in range(cfg.init_attempts):
        genes = _random_genes(rng, c)
        active = np.ones(c.q_max, dtype=bool)
        n_inactive = int(rng.integers(0, c.q_max - c.q_min + 1))
        active[rng.choice(c.q_max, n_inactive, replace=False)] = False

        ind, report = repair(Individual(genes, active), cfg, sc, targets, rng)
        if ind is not None:
            return ind
        failures.update(report.constraints or ("pl_target",))

    binding = failures.most_common(1)[0][0]
    raise InfeasibleConstraintsError(
        binding,
        f"No feasible placement found in {cfg.init_attempts} attempts; "
        f"most often violated constraint: {binding}",
    )


def init_population(
    cfg: GaConfig,
    targets: MeasuredTargets,
    sc: ScenarioConfig,
    stream: RandomStream,
) -> List[Individual]:
    """``population_size`` random feasible individuals; individual ``i``
    draws from ``stream.child(i)``."""
    return [
        _random_individual(cfg, targets, sc, stream.child(i).generator())
        for i in range(cfg.population_size)
    ]


def evaluate_placement(
    placement: RpPlacement,
    sc: ScenarioConfig,
    stream: RandomStream,
    realizations: int,
    include_sf: bool = False,
) -> List[ChannelStats]:
    """Channel statistics of ``realizations`` compositions; realization
    ``r`` draws from ``stream.child(r)``."""
    samples = []
    for r in range(realizations):
        channel = compose_channel(placement, sc, stream.child(r), include_sf)
        paths = PathList.from_path_set(channel.weighted_paths)
        samples.append(channel_stats(paths, pl_db=channel.pl_total_db))
    return samples


def weighted_error(
    stats: ChannelStats, targets: MeasuredTargets, cfg: GaConfig
) -> float:
    eta = cfg.w_ds * abs(stats.ds_s - targets.ds_s)
    eta += cfg.w_as_az * abs(stats.as_az_deg - targets.as_az_deg)
    if cfg.w_as_zen and targets.as_zen_deg is not None:
        eta += cfg.w_as_zen * abs((stats.as_zen_deg or 0.0) - targets.as_zen_deg)
    if not cfg.pl_hard and cfg.w_pl:
        eta += cfg.w_pl * abs(stats.pl_db - targets.pl_db)
    return float(eta)


def _evaluate(
    ind: Individual,
    targets: MeasuredTargets,
    sc: ScenarioConfig,
    cfg: GaConfig,
    stream: RandomStream,
) -> Tuple[float, Optional[ChannelStats]]:
    pinned = ind.pinned()
    if not pinned.active.any():
        return math.inf, None
    placement = pinned.placement()
    if not validate_placement(placement, cfg.constraints).ok:
        return math.inf, None
    if cfg.pl_hard:
        pl = aggregate_pl(
            [sc.pathloss.gain_db(sc.fc_ghz, d) for d in placement.distances_m]
        )
        if abs(pl - targets.pl_db) > PL_CHECK_TOLERANCE_DB:
            return math.inf, None

    samples = evaluate_placement(
        placement, sc, stream, cfg.fitness_realizations, cfg.include_sf
    )
    stats = mean_stats(samples)
    return weighted_error(stats, targets, cfg), stats


def fitness(
    ind: Individual,
    targets: MeasuredTargets,
    sc: ScenarioConfig,
    cfg: GaConfig,
    stream: RandomStream,
) -> float:
    """Weighted absolute mismatch between the mean modeled statistics and
    the targets; infinite for infeasible individuals."""
    return _evaluate(ind, targets, sc, cfg, stream)[0]


def selection_probabilities(fitnesses: Sequence[float]) -> np.ndarray:
    """Roulette wheel weights ``max(eta) - eta_l``, normalized.

    Infeasible (infinite) individuals are never picked; when every
    feasible individual scores the same, the pick is uniform over them.
    """
    f = np.asarray(fitnesses, dtype=float)
    feasible = np.isfinite(f)
    if not feasible.any():
        return np.full(len(f), 1.0 / len(f))
    weights = np.where(feasible, f[feasible].max() - np.where(feasible, f, 0.0), 0.0)
    if weights.sum() <= 0:
        return feasible / feasible.sum()
    return weights / weights.sum()


def select_parents(
    population: Sequence[Individual],
    fitnesses: Sequence[float],
    stream: RandomStream,
) -> List[Individual]:
    if len(population) < 2 or len(population) != len(fitnesses):
        raise MalformedInputError(
            f"Selection needs at least two scored individuals, got "
            f"{len(population)} individuals and {len(fitnesses)} scores"
        )
    probabilities = selection_probabilities(fitnesses)
    picks = stream.generator().choice(len(population), len(population), p=probabilities)
    return [population[i] for i in picks]


def crossover(
    pair: Tuple[Individual, Individual],
    cfg: GaConfig,
    sc: ScenarioConfig,
    targets: MeasuredTargets,
    stream: RandomStream,
) -> Tuple[Individual, Individual]:
    """Single-point crossover over the slot-major flattened genome.

    Each slot's active flag travels with its distance gene. Offspring
    that cannot be repaired are replaced by their first-segment parent.
    """
    first, second = pair
    rng = stream.generator()
    if rng.random() >= cfg.crossover_rate:
        return first, second

    q_max = first.genes.shape[0]
    n_genes = 3 * q_max
    if n_genes < 2:
        return first, second
    cut = int(rng.integers(1, n_genes))
    flat_first, flat_second = first.genes.ravel(), second.genes.ravel()
    from_first = np.arange(q_max) * 3 < cut

    offspring = []
    for head, tail, parent, other in (
        (flat_first, flat_second, first, second),
        (flat_second, flat_first, second, first),
    ):
        genes = np.concatenate([head[:cut], tail[cut:]]).reshape(q_max, 3)
        active = np.where(from_first, parent.active, other.active)
        child, _ = repair(Individual(genes, active), cfg, sc, targets, rng)
        offspring.append(child if child is not None else parent)
    return offspring[0], offspring[1]


def mutate(
    ind: Individual,
    cfg: GaConfig,
    sc: ScenarioConfig,
    targets: MeasuredTargets,
    stream: RandomStream,
) -> Individual:
    """Redraw each gene within its bounds with probability
    ``mutation_rate``; toggle each slot with the same probability while
    the active count stays within ``[q_min, q_max]``."""
    c = cfg.constraints
    rng = stream.generator()
    q_max = ind.genes.shape[0]

    redraw = rng.random(ind.genes.shape) < cfg.mutation_rate
    genes = np.where(redraw, _random_genes(rng, c), ind.genes)
    active = ind.active.copy()
    toggled = False
    for slot in np.flatnonzero(rng.random(q_max) < cfg.mutation_rate):
        count = np.count_nonzero(active) + (-1 if active[slot] else 1)
        if c.q_min <= count <= c.q_max:
            active[slot] = not active[slot]
            toggled = True

    if not redraw.any() and not toggled:
        return ind
    child, _ = repair(Individual(genes, active), cfg, sc, targets, rng)
    return child if child is not None else ind


def _mean_finite(values: Sequence[float]) -> float:
    finite = [v for v in values if math.isfinite(v)]
    return float(np.mean(finite)) if finite else math.inf


def run_ga(
    cfg: GaConfig, targets: MeasuredTargets, sc: ScenarioConfig
) -> OptimizationResult:
    """Select, cross over, mutate and evaluate until the best fitness
    improves by no more than ``convergence_eps`` (for ``patience``
    generations) or ``max_iterations`` generations have run.

    The best individual found so far replaces the first offspring of
    every generation, so the best-fitness trace never increases.
    """
    cfg.check()
    targets.check()
    root = RandomStream(cfg.root_seed)
    # One fitness stream for the whole run: a genome scores the same in
    # every generation, so scores are comparable across generations.
    fitness_stream = root.child(DrawSite.FITNESS)
    cache: Dict[bytes, Tuple[float, Optional[ChannelStats]]] = {}
    archive: Dict[bytes, RankedPlacement] = {}

    def evaluate_generation(
        population: Sequence[Individual],
    ) -> Tuple[List[float], List[Optional[ChannelStats]]]:
        scores, stats = [], []
        for ind in population:
            key = ind.key()
            if key not in cache:
                cache[key] = _evaluate(ind, targets, sc, cfg, fitness_stream)
            eta, ind_stats = cache[key]
            scores.append(eta)
            stats.append(ind_stats)
            if ind_stats is not None and (
                key not in archive or eta < archive[key].fitness
            ):
                archive[key] = RankedPlacement(ind.pinned().placement(), eta, ind_stats)
        return scores, stats

    population = init_population(cfg, targets, sc, root.child(DrawSite.INIT))
    scores, stats = evaluate_generation(population)
    best_idx = int(np.argmin(scores))
    if not math.isfinite(scores[best_idx]):
        raise InfeasibleConstraintsError(
            "pl_target", "No individual of the initial population is feasible"
        )
    best = population[best_idx].pinned()
    best_fitness, best_stats = scores[best_idx], stats[best_idx]
    trace = [best_fitness]
    mean_trace = [_mean_finite(scores)]
    logger.info("generation 0: best fitness %.6g", best_fitness)

    stalled = 0
    for generation in range(1, cfg.max_iterations + 1):
        pool = select_parents(
            population, scores, root.child(DrawSite.SELECT, generation)
        )
        offspring: List[Individual] = []
        for k in range(0, len(pool) - 1, 2):
            offspring.extend(
                crossover(
                    (pool[k], pool[k + 1]),
                    cfg,
                    sc,
                    targets,
                    root.child(DrawSite.CROSSOVER, generation, k),
                )
            )
        if len(pool) % 2:
            offspring.append(pool[-1])
        population = [
            mutate(child, cfg, sc, targets, root.child(DrawSite.MUTATE, generation, k))
            for k, child in enumerate(offspring)
        ]
        population[0] = best

        scores, stats = evaluate_generation(population)
        gen_best = int(np.argmin(scores))
        if scores[gen_best] < best_fitness:
            best = population[gen_best].pinned()
            best_fitness, best_stats = scores[gen_best], stats[gen_best]

        improvement = trace[-1] - best_fitness
        trace.append(best_fitness)
        mean_trace.append(_mean_finite(scores))
        logger.info(
            "generation %d: best fitness %.6g (Q=%d), population mean %.6g",
            generation,
            best_fitness,
            best.active_count,
            mean_trace[-1],
        )
        stalled = stalled + 1 if improvement <= cfg.convergence_eps else 0
        if stalled >= cfg.patience:
            break

    ranked = sorted(archive.values(), key=lambda item: item.fitness)
    top_count = max(1, math.ceil(cfg.top_fraction * len(ranked)))
    assert best_stats is not None  # mypy
    return OptimizationResult(
        best_placement=best.placement(),
        best_fitness=best_fitness,
        best_stats=best_stats,
        fitness_trace=tuple(trace),
        mean_fitness_trace=tuple(mean_trace),
        top_individuals=tuple(ranked[:top_count]),
    )


def modal_q(results: Sequence[OptimizationResult]) -> int:
    """Most frequent RP count over several runs, the smaller on ties."""
    if not results:
        raise MalformedInputError("No optimization results")
    counts = Counter(result.best_placement.size for result in results)
    return min(counts, key=lambda q: (-counts[q], q))
