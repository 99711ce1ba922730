"""Epidemic confinement-policy search: SEIR simulator, GA, DQN and a random baseline."""

__version__ = "0.1.0"
