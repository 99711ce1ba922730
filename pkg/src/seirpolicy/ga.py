"""Genetic algorithm over daily action sequences.

Individuals are integer arrays of phase indices.  Fitness is the total
reward of the sequence.  Every random draw comes from one seeded
``numpy.random.Generator`` so a run is reproducible from its seed.
"""

from dataclasses import dataclass, field
import time

import numpy as np

from .scenario import N_ACTIONS, evaluate_batch, evaluate_sequence


@dataclass
class GaConfig:
    population_size: int = 100
    generations: int = 1000
    crossover_probability: float = 0.6
    mutation_probability: float = 0.6
    gene_mutation_rate: float = 0.10
    tournament_k: int = 3
    elitism: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("crossover_probability", "mutation_probability", "gene_mutation_rate"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {p!r}")
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not (1 <= self.tournament_k <= self.population_size):
            raise ValueError("tournament_k must be in 1..population_size")
        if not (0 <= self.elitism < self.population_size):
            raise ValueError("elitism must be in 0..population_size-1")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")


@dataclass
class GaRunStats:
    best_fitness_per_generation: list
    best_individual: np.ndarray
    best_fitness: float
    wall_time: float
    best_result: object = field(default=None, repr=False)


def init_population(config, scenario, rng=None):
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    return rng.integers(0, N_ACTIONS, size=(config.population_size, scenario.horizon))


def tournament_index(fitnesses, k, rng):
    """Index of the tournament winner; ties go to the lowest index."""
    n = len(fitnesses)
    if n == 0:
        raise ValueError("empty population")
    if not (1 <= k <= n):
        raise ValueError(f"tournament size {k} invalid for population of {n}")
    contestants = np.sort(rng.choice(n, size=k, replace=False))
    # argmax returns the first maximum, and contestants are sorted
    return int(contestants[np.argmax(np.asarray(fitnesses)[contestants])])


def tournament_select(population, fitnesses, k, rng):
    if len(population) != len(fitnesses):
        raise ValueError("fitnesses must align with population")
    return np.array(population[tournament_index(fitnesses, k, rng)], copy=True)


def uniform_crossover(parent_a, parent_b, probability, rng):
    a = np.array(parent_a, copy=True)
    b = np.array(parent_b, copy=True)
    if a.shape != b.shape:
        raise ValueError(f"parent lengths differ: {a.shape} vs {b.shape}")
    if rng.random() < probability:
        swap = rng.random(a.shape) < 0.5
        a[swap], b[swap] = b[swap], a[swap].copy()
    return a, b


def mutate(individual, mutation_probability, gene_rate, rng):
    """Gate once per individual, then resample each gene with ``gene_rate``.

    Resampling is uniform over all phases, so a hit keeps its old value a
    quarter of the time.
    """
    out = np.array(individual, copy=True)
    if rng.random() < mutation_probability:
        hit = rng.random(out.shape) < gene_rate
        out[hit] = rng.integers(0, N_ACTIONS, size=int(hit.sum()))
    return out


def next_generation(population, fitnesses, config, rng):
    pop_size = len(population)
    order = np.argsort(-fitnesses, kind="stable")
    children = [population[j].copy() for j in order[: config.elitism]]
    while len(children) < pop_size:
        pa = tournament_select(population, fitnesses, config.tournament_k, rng)
        pb = tournament_select(population, fitnesses, config.tournament_k, rng)
        ca, cb = uniform_crossover(pa, pb, config.crossover_probability, rng)
        children.append(mutate(ca, config.mutation_probability, config.gene_mutation_rate, rng))
        if len(children) < pop_size:
            children.append(mutate(cb, config.mutation_probability, config.gene_mutation_rate, rng))
    return np.stack(children)


def run_ga(config, scenario, callback=None):
    """Evolve ``config.generations`` generations and return the best sequence found.

    ``best_fitness_per_generation[g]`` is the best fitness in generation g,
    with generation 0 the random initial population.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(config.rng_seed)
    population = init_population(config, scenario, rng)
    fitnesses = evaluate_batch(scenario, population)
    curve = [float(fitnesses.max())]
    for gen in range(config.generations):
        population = next_generation(population, fitnesses, config, rng)
        fitnesses = evaluate_batch(scenario, population)
        curve.append(float(fitnesses.max()))
        if callback is not None:
            callback(gen + 1, curve[-1])
    best = int(np.argmax(fitnesses))
    best_ind = population[best].copy()
    return GaRunStats(
        best_fitness_per_generation=curve,
        best_individual=best_ind,
        best_fitness=float(fitnesses[best]),
        wall_time=time.perf_counter() - t0,
        best_result=evaluate_sequence(scenario, best_ind),
    )
