"""CartPole and Acrobot with the standard published dynamics.

Constants follow the classic formulations (Barto, Sutton & Anderson cart-pole
with Euler integration; Sutton's acrobot with RK4 integration and the "book"
dynamics). Reset noise is drawn from the run's :class:`SampleSource` (4 draws);
stepping consumes no draws. See ``docs/environments.md``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampling import SampleSource

RESET_DRAWS = 4


class ClassicControlEnv:
    """Common episode bookkeeping for the continuous-state tasks."""

    kind: str = ""
    obs_dim: int = 0
    n_actions: int = 0
    max_steps: int = 0
    gamma: float = 0.99
    r_max: float = 1.0
    obs_bounds: np.ndarray = None

    def __init__(self, max_steps: int | None = None):
        if max_steps is not None:
            self.max_steps = max_steps
        self.state = None
        self.steps = 0
        self.done = True

    def reset(self, source: SampleSource) -> np.ndarray:
        self.state = self._initial_state(source.uniforms(RESET_DRAWS))
        self.steps = 0
        self.done = False
        return self.observe()

    def step(self, action: int) -> tuple[np.ndarray, float, bool, bool]:
        """Advance one step; returns ``(obs, reward, terminal, truncated)``."""
        if self.done:
            raise RuntimeError("episode is over; call reset()")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"invalid action {action}")
        self.state = self._dynamics(self.state, action)
        self.steps += 1
        terminal = self._terminal(self.state)
        truncated = not terminal and self.steps >= self.max_steps
        self.done = terminal or truncated
        return self.observe(), self._reward(terminal), terminal, truncated

    def observe(self) -> np.ndarray:
        return np.array(self.state, dtype=np.float64)

    def config(self) -> dict:
        return {"name": self.kind, "max_steps": self.max_steps, "gamma": self.gamma}

    def _initial_state(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _dynamics(self, s: np.ndarray, action: int) -> np.ndarray:
        raise NotImplementedError

    def _terminal(self, s: np.ndarray) -> bool:
        raise NotImplementedError

    def _reward(self, terminal: bool) -> float:
        raise NotImplementedError


class CartPole(ClassicControlEnv):
    """Pole balancing on a cart; +1 per step, at most 200 steps."""

    kind = "cartpole"
    obs_dim = 4
    n_actions = 2
    max_steps = 200

    gravity = 9.8
    masscart = 1.0
    masspole = 0.1
    total_mass = masspole + masscart
    length = 0.5  # half the pole length
    polemass_length = masspole * length
    force_mag = 10.0
    tau = 0.02
    theta_threshold = 12 * 2 * math.pi / 360
    x_threshold = 2.4

    obs_bounds = np.array([[-2.4, 2.4], [-3.0, 3.0], [-0.21, 0.21], [-3.5, 3.5]])

    def _initial_state(self, u):
        return -0.05 + 0.1 * u

    def _dynamics(self, s, action):
        x, x_dot, theta, theta_dot = s
        force = self.force_mag if action == 1 else -self.force_mag
        costheta = math.cos(theta)
        sintheta = math.sin(theta)
        temp = (force + self.polemass_length * theta_dot**2 * sintheta) / self.total_mass
        thetaacc = (self.gravity * sintheta - costheta * temp) / (
            self.length * (4.0 / 3.0 - self.masspole * costheta**2 / self.total_mass)
        )
        xacc = temp - self.polemass_length * thetaacc * costheta / self.total_mass
        x = x + self.tau * x_dot
        x_dot = x_dot + self.tau * xacc
        theta = theta + self.tau * theta_dot
        theta_dot = theta_dot + self.tau * thetaacc
        return np.array([x, x_dot, theta, theta_dot])

    def _terminal(self, s):
        return bool(
            s[0] < -self.x_threshold or s[0] > self.x_threshold
            or s[2] < -self.theta_threshold or s[2] > self.theta_threshold
        )

    def _reward(self, terminal):
        return 1.0


def _wrap(x: float, lo: float, hi: float) -> float:
    diff = hi - lo
    while x > hi:
        x -= diff
    while x < lo:
        x += diff
    return x


def _rk4(f, y0: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y0)
    k2 = f(y0 + dt / 2 * k1)
    k3 = f(y0 + dt / 2 * k2)
    k4 = f(y0 + dt * k3)
    return y0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


class Acrobot(ClassicControlEnv):
    """Two-link underactuated pendulum; -1 per step until the tip clears the bar, at most 500 steps."""

    kind = "acrobot"
    obs_dim = 6
    n_actions = 3
    max_steps = 500

    dt = 0.2
    link_length_1 = 1.0
    link_mass_1 = 1.0
    link_mass_2 = 1.0
    link_com_pos_1 = 0.5
    link_com_pos_2 = 0.5
    link_moi = 1.0
    max_vel_1 = 4 * math.pi
    max_vel_2 = 9 * math.pi
    torques = (-1.0, 0.0, 1.0)
    g = 9.8

    obs_bounds = np.array(
        [[-1, 1], [-1, 1], [-1, 1], [-1, 1], [-4 * math.pi, 4 * math.pi], [-9 * math.pi, 9 * math.pi]],
        dtype=np.float64,
    )

    def _initial_state(self, u):
        return -0.1 + 0.2 * u

    def observe(self):
        s = self.state
        return np.array([math.cos(s[0]), math.sin(s[0]), math.cos(s[1]), math.sin(s[1]), s[2], s[3]])

    def _dsdt(self, s_aug: np.ndarray) -> np.ndarray:
        m1, m2 = self.link_mass_1, self.link_mass_2
        l1 = self.link_length_1
        lc1, lc2 = self.link_com_pos_1, self.link_com_pos_2
        I1 = I2 = self.link_moi
        g = self.g
        theta1, theta2, dtheta1, dtheta2, a = s_aug
        d1 = m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * math.cos(theta2)) + I1 + I2
        d2 = m2 * (lc2**2 + l1 * lc2 * math.cos(theta2)) + I2
        phi2 = m2 * lc2 * g * math.cos(theta1 + theta2 - math.pi / 2.0)
        phi1 = (
            -m2 * l1 * lc2 * dtheta2**2 * math.sin(theta2)
            - 2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * math.sin(theta2)
            + (m1 * lc1 + m2 * l1) * g * math.cos(theta1 - math.pi / 2)
            + phi2
        )
        ddtheta2 = (a + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1**2 * math.sin(theta2) - phi2) / (
            m2 * lc2**2 + I2 - d2**2 / d1
        )
        ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
        return np.array([dtheta1, dtheta2, ddtheta1, ddtheta2, 0.0])

    def _dynamics(self, s, action):
        s_aug = np.append(s, self.torques[action])
        ns = _rk4(self._dsdt, s_aug, self.dt)[:4]
        ns[0] = _wrap(ns[0], -math.pi, math.pi)
        ns[1] = _wrap(ns[1], -math.pi, math.pi)
        ns[2] = min(max(ns[2], -self.max_vel_1), self.max_vel_1)
        ns[3] = min(max(ns[3], -self.max_vel_2), self.max_vel_2)
        return ns

    def _terminal(self, s):
        return bool(-math.cos(s[0]) - math.cos(s[1] + s[0]) > 1.0)

    def _reward(self, terminal):
        return 0.0 if terminal else -1.0


@dataclass(frozen=True)
class EpisodeResult:
    ret: float
    length: int
