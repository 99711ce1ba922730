"""Discrete-time SEIR dynamics.

Compartments are held as fractions of a constant population, so the
transmission term is ``beta * s * i`` with no division by N.  One call to
:func:`seir_step` advances exactly one day.
"""

from dataclasses import dataclass
import math


CLAMP_TOL = 1e-12
SUM_TOL = 1e-9


class InvalidState(ValueError):
    """Raised when a state or parameter set violates its invariants."""


class NumericalBlowup(ArithmeticError):
    """Raised when a step leaves the unit interval by more than float noise."""

    def __init__(self, message, day=None):
        super().__init__(message if day is None else f"day {day}: {message}")
        self.day = day


@dataclass(frozen=True)
class EpidemicParams:
    """SEIR rates, all per day.

    alpha is the inverse incubation period, gamma the inverse infectious
    period and beta the contact rate.
    """

    alpha: float = 0.1923
    beta: float = 0.4482
    gamma: float = 0.1724

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidState(f"{name} must be a positive finite rate, got {v!r}")
        if self.alpha > 1 or self.gamma > 1:
            raise InvalidState("alpha and gamma must be <= 1 for a one-day step")

    @property
    def r0(self):
        return self.beta / self.gamma


@dataclass(frozen=True)
class CompartmentState:
    s: float
    e: float
    i: float
    r: float

    def __post_init__(self):
        vals = (self.s, self.e, self.i, self.r)
        for name, v in zip("seir", vals):
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise InvalidState(f"{name}={v!r} is not a fraction in [0, 1]")
        if abs(sum(vals) - 1.0) > SUM_TOL:
            raise InvalidState(f"fractions sum to {sum(vals)!r}, expected 1")

    @classmethod
    def from_counts(cls, population, exposed=0.0, infectious=0.0, recovered=0.0):
        """Build a state from head counts; the susceptible group takes the rest."""
        if population <= 0:
            raise InvalidState("population must be positive")
        e = exposed / population
        i = infectious / population
        r = recovered / population
        return cls(1.0 - e - i - r, e, i, r)

    def as_tuple(self):
        return (self.s, self.e, self.i, self.r)


def _settle(v, name, day=None):
    if v < 0.0:
        if v < -CLAMP_TOL:
            raise NumericalBlowup(f"{name}={v!r} fell below zero", day)
        return 0.0
    if v > 1.0:
        if v > 1.0 + CLAMP_TOL:
            raise NumericalBlowup(f"{name}={v!r} rose above one", day)
        return 1.0
    return v


def seir_step(state, params, contact_scale):
    """Advance ``state`` by one day with the contact rate scaled by ``contact_scale``.

    ``contact_scale`` carries every multiplicative damping of beta for that
    day (confinement weight times seasonal factor).  Zero is accepted for
    the degenerate no-contact case.
    """
    if not (0.0 <= contact_scale <= 1.0):
        raise InvalidState(f"contact_scale must be in (0, 1], got {contact_scale!r}")
    s, e, i, r = state.s, state.e, state.i, state.r
    new_inf = contact_scale * params.beta * s * i
    onset = params.alpha * e
    recover = params.gamma * i
    s1 = _settle(s - new_inf, "s")
    e1 = _settle(e + new_inf - onset, "e")
    i1 = _settle(i + onset - recover, "i")
    r1 = _settle(r + recover, "r")
    return CompartmentState(s1, e1, i1, r1)


def simulate_trajectory(initial, params, contact_scales):
    """Return ``[initial, day1, ..., dayn]`` for the given daily contact scales."""
    if len(contact_scales) < 1:
        raise ValueError("need at least one contact scale")
    traj = [initial]
    state = initial
    for day, scale in enumerate(contact_scales, start=1):
        try:
            state = seir_step(state, params, scale)
        except NumericalBlowup as exc:
            raise NumericalBlowup(str(exc), day) from exc
        except InvalidState as exc:
            raise InvalidState(f"day {day}: {exc}") from exc
        traj.append(state)
    return traj
