"""Native environments: CartPole, Acrobot, Pendulum, and a foraging grid.

The three classic-control tasks follow the de-facto standard formulations
(Euler cart-pole at dt=0.02, "book" acrobot integrated with RK4 at dt=0.2,
torque-limited pendulum at dt=0.05). The foraging task is a 5-cell line
whose food sits at one end and may jump to the other end at every internal
reset, so the reward source is non-stationary within a single life.

Environments are passive: ``reset``/``step`` take the state and an RNG and
return new values, which keeps rollouts trivially parallelizable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ActionSpaceSpec
from .errors import ConfigError
from .numerics import RngStream, make_rng


@dataclass(frozen=True)
class EnvSpec:
    kind: str
    obs_dim: int
    action_space: ActionSpaceSpec
    max_steps: int
    episodes_default: int  # episodes per lifetime used in training
    min_return: float  # lower bound on an episode return (failure sentinel)


# ---------------------------------------------------------------------------
# CartPole


@dataclass(slots=True)
class CartPoleState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float
    t: int


class CartPole:
    """Pole balancing; +1 per step, episode ends past +-2.4 m or +-12 deg."""

    spec = EnvSpec("cartpole", 4, ActionSpaceSpec.discrete(2), 500, 5, 0.0)

    GRAVITY = 9.8
    MASS_CART = 1.0
    MASS_POLE = 0.1
    TOTAL_MASS = MASS_CART + MASS_POLE
    HALF_LENGTH = 0.5
    POLE_MASS_LENGTH = MASS_POLE * HALF_LENGTH
    FORCE_MAG = 10.0
    TAU = 0.02
    THETA_LIMIT = 12.0 * 2.0 * math.pi / 360.0
    X_LIMIT = 2.4

    def reset(self, rng: RngStream):
        x, xd, th, thd = rng.uniform(-0.05, 0.05, 4)
        s = CartPoleState(float(x), float(xd), float(th), float(thd), 0)
        return s, self._obs(s)

    def step(self, s: CartPoleState, action: int, rng: RngStream):
        if action not in (0, 1):
            raise ValueError(f"cartpole action must be 0 or 1, got {action!r}")
        force = self.FORCE_MAG if action == 1 else -self.FORCE_MAG
        cos_t = math.cos(s.theta)
        sin_t = math.sin(s.theta)
        temp = (
            force + self.POLE_MASS_LENGTH * s.theta_dot**2 * sin_t
        ) / self.TOTAL_MASS
        theta_acc = (self.GRAVITY * sin_t - cos_t * temp) / (
            self.HALF_LENGTH
            * (4.0 / 3.0 - self.MASS_POLE * cos_t**2 / self.TOTAL_MASS)
        )
        x_acc = temp - self.POLE_MASS_LENGTH * theta_acc * cos_t / self.TOTAL_MASS
        ns = CartPoleState(
            x=s.x + self.TAU * s.x_dot,
            x_dot=s.x_dot + self.TAU * x_acc,
            theta=s.theta + self.TAU * s.theta_dot,
            theta_dot=s.theta_dot + self.TAU * theta_acc,
            t=s.t + 1,
        )
        fell = abs(ns.x) > self.X_LIMIT or abs(ns.theta) > self.THETA_LIMIT
        done = fell or ns.t >= self.spec.max_steps
        return ns, self._obs(ns), 1.0, done

    @staticmethod
    def _obs(s: CartPoleState):
        return (s.x, s.x_dot, s.theta, s.theta_dot)


# ---------------------------------------------------------------------------
# Acrobot


@dataclass(slots=True)
class AcrobotState:
    theta1: float
    theta2: float
    omega1: float
    omega2: float
    t: int


def _wrap_pi(x: float) -> float:
    return (x + math.pi) % (2.0 * math.pi) - math.pi


class Acrobot:
    """Two-link swing-up; -1 per step until the free end rises above 1."""

    spec = EnvSpec("acrobot", 6, ActionSpaceSpec.discrete(3), 500, 2, -500.0)

    DT = 0.2
    MAX_VEL_1 = 4.0 * math.pi
    MAX_VEL_2 = 9.0 * math.pi
    TORQUES = (-1.0, 0.0, 1.0)

    def reset(self, rng: RngStream):
        th1, th2, w1, w2 = rng.uniform(-0.1, 0.1, 4)
        s = AcrobotState(float(th1), float(th2), float(w1), float(w2), 0)
        return s, self._obs(s)

    @staticmethod
    def _dsdt(th1, th2, w1, w2, torque):
        # Standard "book" dynamics: unit masses/lengths, COM at mid-link,
        # unit inertia, gravity 9.8.
        g = 9.8
        d1 = 0.25 + 1.0 + 0.25 + 1.0 * math.cos(th2) + 2.0  # m1 lc1^2 + m2(l1^2+lc2^2+2 l1 lc2 cos) + I1 + I2
        d2 = 0.25 + 0.5 * math.cos(th2) + 1.0
        phi2 = 0.5 * g * math.cos(th1 + th2 - math.pi / 2.0)
        phi1 = (
            -0.5 * w2**2 * math.sin(th2)
            - w1 * w2 * math.sin(th2)
            + 1.5 * g * math.cos(th1 - math.pi / 2.0)
            + phi2
        )
        ddth2 = (
            torque + d2 / d1 * phi1 - 0.5 * w1**2 * math.sin(th2) - phi2
        ) / (0.25 + 1.0 - d2**2 / d1)
        ddth1 = -(d2 * ddth2 + phi1) / d1
        return w1, w2, ddth1, ddth2

    def step(self, s: AcrobotState, action: int, rng: RngStream):
        if action not in (0, 1, 2):
            raise ValueError(f"acrobot action must be 0, 1 or 2, got {action!r}")
        torque = self.TORQUES[action]
        y = (s.theta1, s.theta2, s.omega1, s.omega2)
        dt = self.DT
        k1 = self._dsdt(*y, torque)
        y2 = tuple(a + 0.5 * dt * b for a, b in zip(y, k1))
        k2 = self._dsdt(*y2, torque)
        y3 = tuple(a + 0.5 * dt * b for a, b in zip(y, k2))
        k3 = self._dsdt(*y3, torque)
        y4 = tuple(a + dt * b for a, b in zip(y, k3))
        k4 = self._dsdt(*y4, torque)
        th1, th2, w1, w2 = (
            a + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
        )
        ns = AcrobotState(
            theta1=_wrap_pi(th1),
            theta2=_wrap_pi(th2),
            omega1=min(max(w1, -self.MAX_VEL_1), self.MAX_VEL_1),
            omega2=min(max(w2, -self.MAX_VEL_2), self.MAX_VEL_2),
            t=s.t + 1,
        )
        solved = -math.cos(ns.theta1) - math.cos(ns.theta2 + ns.theta1) > 1.0
        done = solved or ns.t >= self.spec.max_steps
        reward = 0.0 if solved else -1.0
        return ns, self._obs(ns), reward, done

    @staticmethod
    def _obs(s: AcrobotState):
        return (
            math.cos(s.theta1),
            math.sin(s.theta1),
            math.cos(s.theta2),
            math.sin(s.theta2),
            s.omega1,
            s.omega2,
        )


# ---------------------------------------------------------------------------
# Pendulum


@dataclass(slots=True)
class PendulumState:
    theta: float
    theta_dot: float
    t: int


class Pendulum:
    """Torque-limited swing-up; cost on angle, velocity and effort."""

    MAX_SPEED = 8.0
    MAX_TORQUE = 2.0
    DT = 0.05
    G = 10.0

    spec = EnvSpec(
        "pendulum",
        3,
        ActionSpaceSpec.continuous([(-2.0, 2.0)]),
        200,
        2,
        -(math.pi**2 + 0.1 * MAX_SPEED**2 + 0.001 * MAX_TORQUE**2) * 200,
    )

    def reset(self, rng: RngStream):
        th = float(rng.uniform(-math.pi, math.pi))
        thd = float(rng.uniform(-1.0, 1.0))
        s = PendulumState(th, thd, 0)
        return s, self._obs(s)

    def step(self, s: PendulumState, action, rng: RngStream):
        u = float(np.asarray(action).ravel()[0])
        u = min(max(u, -self.MAX_TORQUE), self.MAX_TORQUE)
        th_n = _wrap_pi(s.theta)
        cost = th_n**2 + 0.1 * s.theta_dot**2 + 0.001 * u**2
        new_thd = s.theta_dot + (
            3.0 * self.G / 2.0 * math.sin(s.theta) + 3.0 * u
        ) * self.DT
        new_thd = min(max(new_thd, -self.MAX_SPEED), self.MAX_SPEED)
        ns = PendulumState(s.theta + new_thd * self.DT, new_thd, s.t + 1)
        done = ns.t >= self.spec.max_steps
        return ns, self._obs(ns), -cost, done

    @staticmethod
    def _obs(s: PendulumState):
        return (math.cos(s.theta), math.sin(s.theta), s.theta_dot)


# ---------------------------------------------------------------------------
# Foraging


@dataclass(slots=True)
class ForagingState:
    position: int  # cell 0..4
    food_side: int  # food cell: 0 (left end) or 4 (right end)
    steps_since_reset: int  # foodless steps in the current window, 0..9
    p_switch: float
    t: int


ACT_RIGHT, ACT_LEFT, ACT_STAY = 0, 1, 2


class Foraging:
    """5-cell line: reach the food end for +10; the food end may move.

    Finding food (or spending 10 steps without it) triggers an internal
    reset: back to the center cell, and the food jumps to the opposite end
    with probability p_switch. The trial itself runs a fixed number of
    steps; observations are the one-hot agent position.
    """

    CELLS = 5
    CENTER = 2
    FOOD_REWARD = 10.0
    WINDOW = 10

    def __init__(self, p_switch: float = 0.5, max_steps: int = 200):
        if not 0.0 <= p_switch <= 1.0:
            raise ConfigError("p_switch must lie in [0, 1]")
        if max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        self.p_switch = p_switch
        self.spec = EnvSpec(
            "foraging", self.CELLS, ActionSpaceSpec.discrete(3), max_steps, 1, 0.0
        )

    def reset(self, rng: RngStream):
        side = 0 if rng.uniform() < 0.5 else 4
        s = ForagingState(self.CENTER, side, 0, self.p_switch, 0)
        return s, self._obs(s)

    def step(self, s: ForagingState, action: int, rng: RngStream):
        if action == ACT_RIGHT:
            pos = min(s.position + 1, 4)
        elif action == ACT_LEFT:
            pos = max(s.position - 1, 0)
        elif action == ACT_STAY:
            pos = s.position
        else:
            raise ValueError(f"foraging action must be 0, 1 or 2, got {action!r}")
        side = s.food_side
        counter = s.steps_since_reset
        if pos == side:
            reward = self.FOOD_REWARD
            pos = self.CENTER
            counter = 0
            if rng.uniform() < s.p_switch:
                side = 4 - side
        else:
            reward = 0.0
            counter += 1
            if counter >= self.WINDOW:
                pos = self.CENTER
                counter = 0
                if rng.uniform() < s.p_switch:
                    side = 4 - side
        ns = ForagingState(pos, side, counter, s.p_switch, s.t + 1)
        done = ns.t >= self.spec.max_steps
        return ns, self._obs(ns), reward, done

    @staticmethod
    def _obs(s: ForagingState):
        obs = [0.0] * Foraging.CELLS
        obs[s.position] = 1.0
        return tuple(obs)


# ---------------------------------------------------------------------------


def make_env(kind: str, **kwargs):
    """Instantiate an environment by name; kwargs only for foraging."""
    if kind == "cartpole":
        cls = CartPole
    elif kind == "acrobot":
        cls = Acrobot
    elif kind == "pendulum":
        cls = Pendulum
    elif kind == "foraging":
        return Foraging(**kwargs)
    else:
        raise ConfigError(f"unknown environment kind {kind!r}")
    if kwargs:
        raise ConfigError(f"{kind} takes no options, got {sorted(kwargs)}")
    return cls()


ENV_KINDS = ("cartpole", "acrobot", "pendulum", "foraging")


def random_policy_baseline(
    kind: str, trials: int, seed: int = 0, env_kwargs: dict | None = None
) -> float:
    """Mean episode return of uniform-random actions over ``trials`` episodes."""
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    env = make_env(kind, **(env_kwargs or {}))
    spec = env.spec
    rng = make_rng(seed)
    total = 0.0
    for _ in range(trials):
        state, _obs = env.reset(rng)
        done = False
        while not done:
            if spec.action_space.kind == "discrete":
                action = int(rng.integers(spec.action_space.n))
            else:
                action = rng.uniform(
                    np.asarray(spec.action_space.low),
                    np.asarray(spec.action_space.high),
                )
            state, _obs, r, done = env.step(state, action, rng)
            total += r
    return total / trials
