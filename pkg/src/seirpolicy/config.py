"""Flat ``key = value`` run configuration.

One setting per line, ``#`` starts a comment.  Keys missing from the file
keep the defaults of the base experiment (Experiment I unless told
otherwise).  Recognised keys::

    horizon
    epidemic.alpha  epidemic.beta  epidemic.gamma
    population.n  population.e0  population.i0  population.r0
    phases[k].delta  phases[k].reward          (k = 0..3)
    beds.start  beds.end                       (beds per 1000 inhabitants)
    theta.start  theta.end
    icu.fraction
    penalty.bed  penalty.pattern
    pattern.enabled                            (true/false)
    ga.population_size  ga.generations  ga.crossover_probability
    ga.mutation_probability  ga.gene_mutation_rate  ga.tournament_k  ga.elitism
    dqn.episodes  dqn.window  dqn.gamma  dqn.epsilon_start  dqn.epsilon_decay
    dqn.epsilon_min  dqn.replay_capacity  dqn.minibatch_size  dqn.eval_every
    dqn.learning_rate  dqn.hidden_sizes  dqn.state_augmentation  dqn.train_every_day
    random.samples
"""

from dataclasses import dataclass, field, replace
import re

from .dqn import DqnConfig
from .ga import GaConfig
from .scenario import Phase, Schedule, Scenario, experiment_scenario
from .seir import CompartmentState, EpidemicParams, InvalidState


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: Scenario
    ga: GaConfig = field(default_factory=GaConfig)
    dqn: DqnConfig = field(default_factory=DqnConfig)
    random_samples: int = 1000


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


def _sizes(text):
    return tuple(int(x) for x in text.replace(",", " ").split())


SCALAR_KEYS = {
    "horizon": _int,
    "epidemic.alpha": float,
    "epidemic.beta": float,
    "epidemic.gamma": float,
    "population.n": float,
    "population.e0": float,
    "population.i0": float,
    "population.r0": float,
    "beds.start": float,
    "beds.end": float,
    "theta.start": float,
    "theta.end": float,
    "icu.fraction": float,
    "penalty.bed": float,
    "penalty.pattern": float,
    "pattern.enabled": _bool,
    "random.samples": _int,
}

GA_KEYS = {
    "ga.population_size": ("population_size", _int),
    "ga.generations": ("generations", _int),
    "ga.crossover_probability": ("crossover_probability", float),
    "ga.mutation_probability": ("mutation_probability", float),
    "ga.gene_mutation_rate": ("gene_mutation_rate", float),
    "ga.tournament_k": ("tournament_k", _int),
    "ga.elitism": ("elitism", _int),
}

DQN_KEYS = {
    "dqn.episodes": ("episodes", _int),
    "dqn.window": ("window", _int),
    "dqn.gamma": ("gamma_rl", float),
    "dqn.epsilon_start": ("epsilon_start", float),
    "dqn.epsilon_decay": ("epsilon_decay", float),
    "dqn.epsilon_min": ("epsilon_min", float),
    "dqn.replay_capacity": ("replay_capacity", _int),
    "dqn.minibatch_size": ("minibatch_size", _int),
    "dqn.eval_every": ("eval_every", _int),
    "dqn.learning_rate": ("learning_rate", float),
    "dqn.hidden_sizes": ("hidden_sizes", _sizes),
    "dqn.state_augmentation": ("state_augmentation", _bool),
    "dqn.train_every_day": ("train_every_day", _bool),
}

PHASE_KEY = re.compile(r"^phases\[(\d+)\]\.(delta|reward)$")


def default_run_config(experiment=1):
    """Canonical defaults for one experiment; experiment 3 doubles the search budget."""
    budget = 2000 if experiment == 3 else 1000
    return RunConfig(
        scenario=experiment_scenario(experiment),
        ga=GaConfig(generations=budget),
        dqn=DqnConfig(episodes=budget),
    )


def parse_lines(lines, source="<config>"):
    """``(lineno, key, raw_value)`` triples; raises on malformed lines and duplicates."""
    seen = {}
    out = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        out.append((lineno, key, value))
    return out


def apply_settings(base, entries, source="<config>"):
    """Return a new :class:`RunConfig` with ``entries`` applied on top of ``base``."""
    sc = base.scenario
    scalars = {}
    phase_over = {}
    ga_over = {}
    dqn_over = {}
    for lineno, key, value in entries:
        where = f"{source}:{lineno}"
        try:
            if key in SCALAR_KEYS:
                scalars[key] = SCALAR_KEYS[key](value)
            elif key in GA_KEYS:
                name, conv = GA_KEYS[key]
                ga_over[name] = conv(value)
            elif key in DQN_KEYS:
                name, conv = DQN_KEYS[key]
                dqn_over[name] = conv(value)
            elif PHASE_KEY.match(key):
                k, attr = PHASE_KEY.match(key).groups()
                k = int(k)
                if not (0 <= k < len(sc.phases)):
                    raise ConfigError(f"{where}: {key}: phase index out of range")
                v = float(value)
                if attr == "delta" and not (0.0 < v <= 1.0):
                    raise ConfigError(f"{where}: {key}: delta must be in (0, 1], got {v!r}")
                phase_over.setdefault(k, {})["delta" if attr == "delta" else "daily_reward"] = v
            else:
                raise ConfigError(f"{where}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{where}: {key}: {exc}") from exc

    def pick(key, current):
        return scalars.get(key, current)

    try:
        horizon = pick("horizon", sc.horizon)
        params = EpidemicParams(
            pick("epidemic.alpha", sc.params.alpha),
            pick("epidemic.beta", sc.params.beta),
            pick("epidemic.gamma", sc.params.gamma),
        )
        pop_keys = ("population.n", "population.e0", "population.i0", "population.r0")
        if any(k in scalars for k in pop_keys):
            n = pick("population.n", sc.population)
            initial = CompartmentState.from_counts(
                n,
                exposed=pick("population.e0", sc.initial.e * sc.population),
                infectious=pick("population.i0", sc.initial.i * sc.population),
                recovered=pick("population.r0", sc.initial.r * sc.population),
            )
        else:
            n, initial = sc.population, sc.initial
        phases = []
        for p in sc.phases:
            over = phase_over.get(p.index, {})
            phases.append(Phase(p.index, over.get("delta", p.delta), over.get("daily_reward", p.daily_reward)))
        scenario = Scenario(
            horizon=horizon,
            params=params,
            population=n,
            initial=initial,
            phases=tuple(phases),
            theta=Schedule(pick("theta.start", sc.theta.start), pick("theta.end", sc.theta.end), horizon),
            beds=Schedule(pick("beds.start", sc.beds.start), pick("beds.end", sc.beds.end), horizon),
            icu_fraction=pick("icu.fraction", sc.icu_fraction),
            bed_penalty=pick("penalty.bed", sc.bed_penalty),
            pattern_enabled=pick("pattern.enabled", sc.pattern_enabled),
            pattern_penalty=pick("penalty.pattern", sc.pattern_penalty),
            name=sc.name,
        )
        ga = replace(base.ga, **ga_over)
        dqn = replace(base.dqn, **dqn_over)
    except (InvalidState, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return RunConfig(scenario, ga, dqn, pick("random.samples", base.random_samples))


def parse_config(path, base=None):
    """Read a config file on top of ``base`` (Experiment-I defaults if omitted)."""
    if base is None:
        base = default_run_config(1)
    with open(path, encoding="utf-8") as fh:
        entries = parse_lines(fh.read().splitlines(), source=str(path))
    return apply_settings(base, entries, source=str(path))


def parse_overrides(items, base):
    """Apply ``key=value`` strings (from the command line) on top of ``base``."""
    return apply_settings(base, parse_lines(items, source="--set"), source="--set")
