"""Deep Q-learning over the day-by-day scenario environment.

The observation is the infectious percentage over the last ``window`` days.
A single online network is trained from a replay buffer, one minibatch per
simulated day, with no target network.
"""

from dataclasses import dataclass, field
import logging
import time

import numpy as np

from .nn import AdamState, ForwardCache, NetworkSpec, adam_update, backward, forward, init_params, mse_loss
from .scenario import N_ACTIONS, DfaState, Rollout, evaluate_sequence

log = logging.getLogger(__name__)

N_DFA_STATES = len(DfaState)


@dataclass
class DqnConfig:
    episodes: int = 1000
    window: int = 25
    gamma_rl: float = 0.95
    epsilon_start: float = 1.0
    epsilon_decay: float = 0.99
    epsilon_min: float = 0.02
    replay_capacity: int = 10_000
    minibatch_size: int = 32
    eval_every: int = 10
    rng_seed: int = 0
    state_augmentation: bool = False
    hidden_sizes: tuple = (64, 128, 128)
    learning_rate: float = 0.001
    train_every_day: bool = True

    def __post_init__(self):
        if not (0.0 < self.gamma_rl < 1.0):
            raise ValueError("gamma_rl must be in (0, 1)")
        if not (0.0 <= self.epsilon_min <= self.epsilon_start <= 1.0):
            raise ValueError("need 0 <= epsilon_min <= epsilon_start <= 1")
        if not (0.0 < self.epsilon_decay <= 1.0):
            raise ValueError("epsilon_decay must be in (0, 1]")
        if self.replay_capacity < self.minibatch_size or self.minibatch_size < 1:
            raise ValueError("replay_capacity must be >= minibatch_size >= 1")
        if self.window < 1 or self.eval_every < 1 or self.episodes < 0:
            raise ValueError("window and eval_every must be >= 1, episodes >= 0")
        self.hidden_sizes = tuple(self.hidden_sizes)

    @property
    def input_size(self):
        return self.window + (1 + N_DFA_STATES if self.state_augmentation else 0)

    def network_spec(self):
        return NetworkSpec(self.input_size, self.hidden_sizes, N_ACTIONS)


def epsilon_after(config, episodes_done):
    eps = config.epsilon_start
    for _ in range(episodes_done):
        eps = max(config.epsilon_min, eps * config.epsilon_decay)
    return eps


@dataclass
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


class ReplayBuffer:
    """Fixed-capacity FIFO store of transitions backed by numpy arrays."""

    def __init__(self, capacity, state_size):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_size))
        self.next_states = np.zeros((capacity, state_size))
        self.actions = np.zeros(capacity, dtype=np.intp)
        self.rewards = np.zeros(capacity)
        self.terminals = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._head = 0  # next slot to write
        self.pushed = 0

    def __len__(self):
        return self.size

    def push(self, tr):
        k = self._head
        self.states[k] = tr.state
        self.actions[k] = tr.action
        self.rewards[k] = tr.reward
        self.next_states[k] = tr.next_state
        self.terminals[k] = tr.terminal
        self._head = (k + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.pushed += 1

    def oldest_first(self):
        """Indices of stored transitions from oldest to newest."""
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self._head) % self.capacity

    def get(self, k):
        return Transition(self.states[k].copy(), int(self.actions[k]), float(self.rewards[k]),
                          self.next_states[k].copy(), bool(self.terminals[k]))

    def sample(self, batch_size, rng):
        idx = rng.integers(0, self.size, size=batch_size)
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx], self.terminals[idx])

    def checksum(self):
        n = self.size
        return (n, self._head, float(np.abs(self.states[:n]).sum()), float(self.rewards[:n].sum()))


def encode_state(history, day, window=25):
    """Infectious percentages for days ``day-window+1 .. day``, oldest first.

    ``history[k]`` is the infectious fraction on day ``k+1``.  Days before
    day 1 are zero-padded on the left.
    """
    vec = np.zeros(window)
    if day <= 0:
        return vec
    recent = np.asarray(history[max(0, day - window):day], dtype=float) * 100.0
    vec[window - len(recent):] = recent
    return vec


def observe(env, config):
    """Observation for the agent before it chooses the action for day ``env.day + 1``."""
    obs = encode_state(env.history, env.day, config.window)
    if not config.state_augmentation:
        return obs
    extra = np.zeros(1 + N_DFA_STATES)
    extra[0] = env.day / env.scenario.horizon
    extra[1 + int(env.dfa)] = 1.0
    return np.concatenate([obs, extra])


def select_action(q_values, epsilon, rng):
    """Epsilon-greedy choice; greedy ties go to the lowest action index."""
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError("epsilon must be in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(0, len(q_values)))
    return int(np.argmax(q_values))


def bellman_targets(params, states, actions, rewards, next_states, terminals, gamma_rl, q=None, q_next=None):
    """Current Q(s) with the taken action's entry replaced by the one-step target."""
    if q is None:
        q = forward(params, states)
    if q_next is None:
        q_next = forward(params, next_states)
    best_next = q_next.max(axis=1)
    target_vals = np.where(terminals, rewards, rewards + gamma_rl * best_next)
    targets = np.array(q, copy=True)
    targets[np.arange(len(actions)), actions] = target_vals
    return targets


def train_step(params, adam_state, batch, gamma_rl):
    """One Adam regression step towards the Bellman targets; returns the pre-step loss.

    ``batch`` is either a list of :class:`Transition` or the array tuple
    returned by :meth:`ReplayBuffer.sample`.
    """
    if isinstance(batch, (list, tuple)) and batch and isinstance(batch[0], Transition):
        states = np.stack([t.state for t in batch])
        actions = np.array([t.action for t in batch], dtype=np.intp)
        rewards = np.array([t.reward for t in batch], dtype=float)
        next_states = np.stack([t.next_state for t in batch])
        terminals = np.array([t.terminal for t in batch], dtype=bool)
    else:
        states, actions, rewards, next_states, terminals = batch
    if len(actions) == 0:
        raise ValueError("empty minibatch")
    # one pass over s and s' together; only the s half is backpropagated
    n = len(actions)
    both, cache = forward(params, np.concatenate([states, next_states]), return_cache=True)
    pred = both[:n]
    cache = ForwardCache([a[:n] for a in cache.inputs], [z[:n] for z in cache.preacts], True)
    targets = bellman_targets(params, states, actions, rewards, next_states, terminals, gamma_rl,
                              q=pred, q_next=both[n:])
    loss, grad = mse_loss(pred, targets)
    if not np.isfinite(loss):
        raise FloatingPointError(f"training diverged: loss={loss!r}")
    adam_update(params, backward(params, cache, grad), adam_state)
    return loss


@dataclass
class Agent:
    config: DqnConfig
    params: object
    adam: AdamState
    buffer: ReplayBuffer

    @classmethod
    def create(cls, config, rng):
        params = init_params(config.network_spec(), rng)
        adam = AdamState.for_params(params, learning_rate=config.learning_rate)
        return cls(config, params, adam, ReplayBuffer(config.replay_capacity, config.input_size))


def run_episode(scenario, agent, epsilon, rng, learn=True):
    """Roll one full horizon; returns ``(actions, total_reward, losses)``.

    With ``learn=False`` the buffer and network are left untouched.
    """
    cfg = agent.config
    env = Rollout(scenario)
    obs = observe(env, cfg)
    losses = []
    while not env.done:
        # same draws as select_action, but Q-values only computed when needed
        if epsilon > 0.0 and rng.random() < epsilon:
            action = int(rng.integers(0, N_ACTIONS))
        else:
            action = int(np.argmax(forward(agent.params, obs)))
        reward = env.step(action)
        next_obs = observe(env, cfg)
        if learn:
            agent.buffer.push(Transition(obs, action, reward, next_obs, env.done))
            if cfg.train_every_day and len(agent.buffer) >= cfg.minibatch_size:
                batch = agent.buffer.sample(cfg.minibatch_size, rng)
                losses.append(train_step(agent.params, agent.adam, batch, cfg.gamma_rl))
        obs = next_obs
    if learn and not cfg.train_every_day and len(agent.buffer) >= cfg.minibatch_size:
        for _ in range(scenario.horizon):
            batch = agent.buffer.sample(cfg.minibatch_size, rng)
            losses.append(train_step(agent.params, agent.adam, batch, cfg.gamma_rl))
    return env.actions, env.total, losses


def greedy_rollout(scenario, agent):
    actions, total, _ = run_episode(scenario, agent, 0.0, None, learn=False)
    return actions, total


@dataclass
class DqnReport:
    eval_episodes: list
    eval_rewards: list
    episode_rewards: list
    best_actions: list
    best_reward: float
    best_result: object = field(repr=False)
    wall_time: float
    final_epsilon: float
    agent: object = field(default=None, repr=False)

    @property
    def best_fitness(self):
        return self.best_reward


def train(config, scenario, callback=None):
    """Train an agent and return the best greedy rollout seen during training.

    A greedy rollout is taken before training and after every
    ``config.eval_every`` episodes (and after the last one).
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(config.rng_seed)
    agent = Agent.create(config, rng)
    eps = config.epsilon_start
    eval_eps, eval_rewards, ep_rewards = [], [], []
    best_actions, best_reward = None, -np.inf

    def evaluate(ep):
        nonlocal best_actions, best_reward
        acts, total = greedy_rollout(scenario, agent)
        eval_eps.append(ep)
        eval_rewards.append(total)
        if total > best_reward:
            best_actions, best_reward = list(acts), total

    evaluate(0)
    for ep in range(1, config.episodes + 1):
        _, total, _ = run_episode(scenario, agent, eps, rng, learn=True)
        ep_rewards.append(total)
        eps = max(config.epsilon_min, eps * config.epsilon_decay)
        if ep % config.eval_every == 0 or ep == config.episodes:
            evaluate(ep)
            if callback is not None:
                callback(ep, eval_rewards[-1], best_reward)
            log.debug("episode %d eps=%.3f greedy=%.1f best=%.1f", ep, eps, eval_rewards[-1], best_reward)
    return DqnReport(
        eval_episodes=eval_eps,
        eval_rewards=eval_rewards,
        episode_rewards=ep_rewards,
        best_actions=best_actions,
        best_reward=float(best_reward),
        best_result=evaluate_sequence(scenario, best_actions),
        wall_time=time.perf_counter() - t0,
        final_epsilon=eps,
        agent=agent,
    )
