"""Agents for evaluation: the learned policy and two scripted references."""
from typing import Optional

import numpy as np

from ..envs import UNREACHABLE, Action, Heading, NavEnv, PointNavEnv
from ..nn import NetSpec, ParamVector, forward, greedy_actions, sample_action


class Agent:
    def reset(self) -> None:
        pass

    def act(self, env: NavEnv, obs: np.ndarray) -> int:
        raise NotImplementedError


class PolicyAgent(Agent):
    """Greedy argmax or sampled actions from a parameter vector."""

    def __init__(
        self,
        spec: NetSpec,
        params: ParamVector,
        greedy: bool = True,
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        params.check_layout(spec)
        self.spec = spec
        self.params = params
        self.greedy = greedy
        self.rng = rng or np.random.default_rng(0)

    def act(self, env: NavEnv, obs: np.ndarray) -> int:
        out = forward(self.spec, self.params, obs)
        if self.greedy:
            actions, _ = greedy_actions(out.action_logits[None, :])
            return int(actions[0])
        action, _, _ = sample_action(out.action_logits, self.rng)
        return action


class StopAgent(Agent):
    def act(self, env: NavEnv, obs: np.ndarray) -> int:
        return int(Action.STOP)


class ShortestPathAgent(Agent):
    """Follows the BFS gradient towards the goal and stops on it; every forward
    move shortens the geodesic distance, so SPL is 1 on success."""

    def act(self, env: NavEnv, obs: np.ndarray) -> int:
        if not isinstance(env, PointNavEnv):
            raise TypeError("ShortestPathAgent needs a PointNav env")
        assert env.agent is not None
        here = env.cells_to_goal()
        if here == 0 or here == UNREACHABLE:
            return int(Action.STOP)
        x, y = env.agent.cell
        target = None
        for heading in Heading:
            dx, dy = heading.delta
            nxt = (x + dx, y + dy)
            if env.grid.is_free(nxt) and env.goal_field[nxt[1], nxt[0]] == here - 1:
                target = heading
                break
        assert target is not None
        current = env.agent.heading
        if current == target:
            return int(Action.MOVE_FORWARD)
        if current.right() == target:
            return int(Action.TURN_RIGHT)
        return int(Action.TURN_LEFT)
