from .delay import DelayModel, wait
from .episode import AgentState, Episode, GeodesicCache, generate_episode
from .grid import (
    HELDOUT_SPLIT,
    TRAIN_SPLIT,
    UNREACHABLE,
    GridWorld,
    Heading,
    bfs_geodesic,
    load_map,
    load_maps,
    map_split,
    random_map,
    save_map,
)
from .metrics import compute_spl
from .tasks import (
    DUMMY_GOAL,
    Action,
    EnvConfig,
    ExploreEnv,
    FleeEnv,
    NavEnv,
    PointNavEnv,
    make_env,
    obs_dim,
    step_explore,
    step_flee,
    step_pointnav,
)
from .vector import BatchStep, EnvBatch, make_env_batch

__all__ = [
    "Action",
    "AgentState",
    "BatchStep",
    "DUMMY_GOAL",
    "DelayModel",
    "EnvBatch",
    "EnvConfig",
    "Episode",
    "ExploreEnv",
    "FleeEnv",
    "GeodesicCache",
    "GridWorld",
    "HELDOUT_SPLIT",
    "Heading",
    "NavEnv",
    "PointNavEnv",
    "TRAIN_SPLIT",
    "UNREACHABLE",
    "bfs_geodesic",
    "compute_spl",
    "generate_episode",
    "load_map",
    "load_maps",
    "make_env",
    "make_env_batch",
    "map_split",
    "obs_dim",
    "random_map",
    "save_map",
    "step_explore",
    "step_flee",
    "step_pointnav",
    "wait",
]
