"""Episode metrics."""
from ..exceptions import InvalidEpisodeError

SLACK_REWARD = -0.01
SUCCESS_REWARD_SCALE = 2.5
FLEE_REWARD_SCALE = 5.0
EXPLORE_REWARD_SCALE = 0.25


def compute_spl(success: bool, shortest_path_len: float, agent_path_len: float) -> float:
    """Success weighted by (normalized inverse) Path Length: ``S * l / max(l, p)``.

    Raises:
        InvalidEpisodeError: ``shortest_path_len`` is not positive.
    """

    if shortest_path_len <= 0:
        raise InvalidEpisodeError(shortest_path_len)
    if not success:
        return 0.0
    return shortest_path_len / max(shortest_path_len, agent_path_len)
