"""Government phases, rewards and penalties on top of the SEIR dynamics.

A :class:`Scenario` fixes everything except the daily action.  Actions are
phase indices 0 (total isolation) .. 3 (no restrictions).  Evaluation of a
full action sequence goes through :class:`Rollout`, which is also the
step-wise environment used by the Q-learning agent, so both optimizers see
identical semantics.
"""

from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .seir import (
    CLAMP_TOL,
    CompartmentState,
    EpidemicParams,
    InvalidState,
    NumericalBlowup,
    seir_step,
)

N_ACTIONS = 4


@dataclass(frozen=True)
class Phase:
    index: int
    delta: float
    daily_reward: float

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise InvalidState(f"phase {self.index}: delta must be in (0, 1], got {self.delta!r}")


CANONICAL_PHASES = (
    Phase(0, 0.25, 4.0),
    Phase(1, 0.50, 6.0),
    Phase(2, 0.75, 8.0),
    Phase(3, 1.00, 10.0),
)


@dataclass(frozen=True)
class Schedule:
    """Linear ramp from ``start`` on day 1 to ``end`` on day ``horizon``."""

    start: float
    end: float
    horizon: int

    def value(self, day):
        if not (1 <= day <= self.horizon):
            raise ValueError(f"day {day} outside 1..{self.horizon}")
        if self.horizon == 1:
            return self.start
        return self.start + (self.end - self.start) * (day - 1) / (self.horizon - 1)

    def values(self):
        return [self.value(d) for d in range(1, self.horizon + 1)]


class DfaState(IntEnum):
    P0 = 0
    P1 = 1
    P2 = 2
    P3 = 3
    P4 = 4
    REJ = 5


# Recognizer for ^0*1*2*3*0*$; row = state, column = phase symbol.
DFA_TABLE = np.array(
    [
        [0, 1, 2, 3],
        [4, 1, 2, 3],
        [4, 5, 2, 3],
        [4, 5, 5, 3],
        [4, 5, 5, 5],
        [5, 5, 5, 5],
    ],
    dtype=np.int8,
)


def dfa_step(state, symbol):
    if not (0 <= symbol < N_ACTIONS):
        raise ValueError(f"symbol {symbol!r} is not a phase index")
    return DfaState(int(DFA_TABLE[int(state), int(symbol)]))


def dfa_run(symbols, state=DfaState.P0):
    for sym in symbols:
        state = dfa_step(state, sym)
    return state


@dataclass(frozen=True)
class Scenario:
    horizon: int = 200
    params: EpidemicParams = field(default_factory=EpidemicParams)
    population: float = 126_000_000
    initial: CompartmentState = None
    phases: tuple = CANONICAL_PHASES
    theta: Schedule = None
    beds: Schedule = None
    icu_fraction: float = 0.05
    bed_penalty: float = -1000.0
    pattern_enabled: bool = False
    pattern_penalty: float = -10.0
    name: str = "custom"

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidState("horizon must be >= 1")
        if self.initial is None:
            object.__setattr__(
                self, "initial", CompartmentState.from_counts(self.population, exposed=1000)
            )
        if self.theta is None:
            object.__setattr__(self, "theta", Schedule(1.0, 1.0, self.horizon))
        if self.beds is None:
            object.__setattr__(self, "beds", Schedule(1.5, 1.5, self.horizon))
        if self.theta.horizon != self.horizon or self.beds.horizon != self.horizon:
            raise InvalidState("schedule horizons must equal the scenario horizon")
        if len(self.phases) != N_ACTIONS:
            raise InvalidState(f"expected {N_ACTIONS} phases, got {len(self.phases)}")
        deltas = [p.delta for p in self.phases]
        rewards = [p.daily_reward for p in self.phases]
        if any(b <= a for a, b in zip(deltas, deltas[1:])):
            raise InvalidState("phase deltas must increase strictly with index")
        if any(b <= a for a, b in zip(rewards, rewards[1:])):
            raise InvalidState("phase rewards must increase strictly with index")
        if not (0.0 < self.icu_fraction <= 1.0):
            raise InvalidState("icu_fraction must be in (0, 1]")
        if self.bed_penalty >= 0 or self.pattern_penalty >= 0:
            raise InvalidState("penalties must be negative")
        for d in range(1, self.horizon + 1):
            if not (0.0 < self.theta.value(d) <= 1.0):
                raise InvalidState(f"theta on day {d} is outside (0, 1]")
            if self.beds.value(d) < 0:
                raise InvalidState(f"negative bed capacity on day {d}")

    def with_changes(self, **kw):
        return replace(self, **kw)


def experiment_scenario(experiment):
    """Canonical scenario for experiment 1, 2 or 3."""
    n = 200
    if experiment == 1:
        return Scenario(name="experiment-1")
    if experiment == 2:
        return Scenario(
            theta=Schedule(1.0, 0.5, n), beds=Schedule(1.5, 0.5, n), name="experiment-2"
        )
    if experiment == 3:
        return Scenario(beds=Schedule(1.5, 0.5, n), pattern_enabled=True, name="experiment-3")
    raise ValueError(f"unknown experiment {experiment!r}; expected 1, 2 or 3")


def _check_day(scenario, day):
    if not (1 <= day <= scenario.horizon):
        raise ValueError(f"day {day} outside 1..{scenario.horizon}")


def contact_scale_for_day(scenario, phase_index, day):
    _check_day(scenario, day)
    if not (0 <= phase_index < N_ACTIONS):
        raise ValueError(f"phase {phase_index!r} out of range")
    return scenario.phases[phase_index].delta * scenario.theta.value(day)


def beds_fraction(scenario, day):
    """ICU bed capacity on ``day`` as a fraction of the population."""
    _check_day(scenario, day)
    return scenario.beds.value(day) / 1000.0


def daily_reward(scenario, phase_index, state_after, day, dfa_state=DfaState.P0):
    if scenario.pattern_enabled and dfa_state == DfaState.REJ:
        return scenario.pattern_penalty
    if scenario.icu_fraction * state_after.i > beds_fraction(scenario, day):
        return scenario.bed_penalty
    return scenario.phases[phase_index].daily_reward


@dataclass
class EvaluationResult:
    actions: list
    total_reward: float
    daily_rewards: list
    trajectory: list
    violation_days: set
    pattern_break_day: int = None
    dfa_states: list = None
    icu_demand: list = None
    bed_capacity: list = None

    @property
    def horizon(self):
        return len(self.actions)


class Rollout:
    """Day-by-day environment over a scenario.

    ``step(action)`` applies the action for the next day and returns the
    reward earned on that day.  ``history`` holds the infectious fraction
    for days 1..day.
    """

    def __init__(self, scenario):
        self.scenario = scenario
        self.reset()

    def reset(self):
        self.day = 0
        self.state = self.scenario.initial
        self.dfa = DfaState.P0
        self.actions = []
        self.rewards = []
        self.trajectory = [self.state]
        self.dfa_states = []
        self.icu_demand = []
        self.bed_capacity = []
        self.violation_days = set()
        self.pattern_break_day = None
        self.total = 0.0
        return self

    @property
    def done(self):
        return self.day >= self.scenario.horizon

    @property
    def history(self):
        return [st.i for st in self.trajectory[1:]]

    def step(self, action):
        if self.done:
            raise RuntimeError("rollout already reached the horizon")
        if not (0 <= action < N_ACTIONS):
            raise ValueError(f"action {action!r} out of range")
        sc = self.scenario
        day = self.day + 1
        scale = contact_scale_for_day(sc, action, day)
        try:
            state = seir_step(self.state, sc.params, scale)
        except NumericalBlowup as exc:
            raise NumericalBlowup(str(exc), day) from exc
        # the recognizer always runs; it only affects rewards when enabled
        self.dfa = dfa_step(self.dfa, action)
        if sc.pattern_enabled and self.dfa == DfaState.REJ and self.pattern_break_day is None:
            self.pattern_break_day = day
        demand = sc.icu_fraction * state.i
        capacity = beds_fraction(sc, day)
        if demand > capacity:
            self.violation_days.add(day)
        reward = daily_reward(sc, action, state, day, self.dfa)
        self.day = day
        self.state = state
        self.actions.append(int(action))
        self.rewards.append(reward)
        self.trajectory.append(state)
        self.dfa_states.append(self.dfa)
        self.icu_demand.append(demand)
        self.bed_capacity.append(capacity)
        self.total += reward
        return reward

    def result(self):
        return EvaluationResult(
            actions=list(self.actions),
            total_reward=self.total,
            daily_rewards=list(self.rewards),
            trajectory=list(self.trajectory),
            violation_days=set(self.violation_days),
            pattern_break_day=self.pattern_break_day,
            dfa_states=list(self.dfa_states),
            icu_demand=list(self.icu_demand),
            bed_capacity=list(self.bed_capacity),
        )


def validate_actions(scenario, actions):
    acts = [int(a) for a in actions]
    if len(acts) != scenario.horizon:
        raise ValueError(f"sequence has {len(acts)} actions, horizon is {scenario.horizon}")
    bad = [a for a in acts if not (0 <= a < N_ACTIONS)]
    if bad:
        raise ValueError(f"actions outside 0..{N_ACTIONS - 1}: {bad[:5]}")
    return acts


def evaluate_sequence(scenario, actions):
    """Roll ``actions`` through ``scenario`` and collect rewards and trajectory."""
    acts = validate_actions(scenario, actions)
    env = Rollout(scenario)
    for a in acts:
        env.step(a)
    return env.result()


def _settle_array(x, name, day):
    lo = x.min()
    hi = x.max()
    if lo < -CLAMP_TOL or hi > 1.0 + CLAMP_TOL:
        raise NumericalBlowup(f"{name} left [0, 1] (min {lo!r}, max {hi!r})", day)
    if lo < 0.0 or hi > 1.0:
        x = np.clip(x, 0.0, 1.0)
    return x


def evaluate_batch(scenario, actions):
    """Total reward for each row of an ``(m, horizon)`` action array.

    Same arithmetic, in the same order, as :func:`evaluate_sequence`, so the
    totals agree bit for bit.  Used for population scoring and random search.
    """
    acts = np.asarray(actions)
    if acts.ndim == 1:
        acts = acts[None, :]
    m, n = acts.shape
    if n != scenario.horizon:
        raise ValueError(f"sequences have {n} actions, horizon is {scenario.horizon}")
    if acts.size and (acts.min() < 0 or acts.max() >= N_ACTIONS):
        raise ValueError("actions outside the phase range")
    acts = acts.astype(np.intp, copy=False)
    sc = scenario
    deltas = np.array([p.delta for p in sc.phases])
    rewards = np.array([p.daily_reward for p in sc.phases])
    beta, alpha, gamma = sc.params.beta, sc.params.alpha, sc.params.gamma
    s = np.full(m, sc.initial.s)
    e = np.full(m, sc.initial.e)
    i = np.full(m, sc.initial.i)
    r = np.full(m, sc.initial.r)
    dfa = np.zeros(m, dtype=np.intp)
    total = np.zeros(m)
    for d in range(1, n + 1):
        a = acts[:, d - 1]
        scale = deltas[a] * sc.theta.value(d)
        new_inf = scale * beta * s * i
        onset = alpha * e
        recover = gamma * i
        s = _settle_array(s - new_inf, "s", d)
        e = _settle_array(e + new_inf - onset, "e", d)
        i = _settle_array(i + onset - recover, "i", d)
        r = _settle_array(r + recover, "r", d)
        day_reward = np.where(sc.icu_fraction * i > sc.beds.value(d) / 1000.0, sc.bed_penalty, rewards[a])
        if sc.pattern_enabled:
            dfa = DFA_TABLE[dfa, a]
            day_reward = np.where(dfa == DfaState.REJ, sc.pattern_penalty, day_reward)
        total = total + day_reward
    return total


def random_sequences(rng, count, horizon):
    return rng.integers(0, N_ACTIONS, size=(count, horizon))
