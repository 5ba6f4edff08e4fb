"""Per-worker training entry point."""
import os
from dataclasses import dataclass
from typing import Optional, Sequence

from tqdm import tqdm

from ..config_utils import TrainConfig, dump_config
from ..distrib import CollectiveHandle, KvClient, WorkerGroup, rendezvous
from ..envs import TRAIN_SPLIT, GridWorld, load_maps, map_split
from ..file_utils import JsonlWriter, create_dir
from ..nn import Checkpoint, save_checkpoint
from ..nn.checkpoint import encode_rng_state
from ..utils import get_logger
from .ddppo import DDPPOWorker
from .ppo import make_net_spec, make_rngs
from .transfer import load_pretrained

CHECKPOINT_DIR = "checkpoints"
FINAL_CHECKPOINT = "final.ddpp"
METRICS_FILE = "metrics.jsonl"
EPISODES_FILE = "episodes.jsonl"
CONFIG_FILE = "config.yaml"


@dataclass(frozen=True)
class TrainResult:
    checkpoint: str
    metrics: Optional[str]
    total_steps: int
    iterations: int


def checkpoint_path(output_dir: str, iteration: Optional[int] = None) -> str:
    name = FINAL_CHECKPOINT if iteration is None else f"ckpt-{iteration:06d}.ddpp"
    return os.path.join(output_dir, CHECKPOINT_DIR, name)


def split_maps(
    config: TrainConfig, split: str, count: Optional[int] = None
) -> Sequence[GridWorld]:
    """Maps of ``split``: the files of ``config.maps_dir`` when set, otherwise
    ``count`` generated maps (default ``num_train_maps``/``num_eval_maps``)."""

    if config.maps_dir:
        return load_maps(config.maps_dir, split, config.cell_size)
    if count is None:
        count = config.num_train_maps if split == TRAIN_SPLIT else config.num_eval_maps
    return map_split(
        split,
        count,
        config.map_size,
        config.obstacle_density,
        config.seed,
        config.cell_size,
    )


def train_maps(config: TrainConfig) -> Sequence[GridWorld]:
    return split_maps(config, TRAIN_SPLIT)


def connect(config: TrainConfig, group: WorkerGroup) -> CollectiveHandle:
    spec = make_net_spec(config)
    store = KvClient(group.kv_address) if group.kv_address else None
    return rendezvous(
        group,
        spec.layout.hash,
        store,
        timeout=config.rendezvous_timeout,
        barrier_timeout=config.barrier_timeout,
    )


def make_worker(config: TrainConfig, handle: CollectiveHandle) -> DDPPOWorker:
    spec = make_net_spec(config)
    params, mask = load_pretrained(config, spec, make_rngs(config.seed, handle.rank).init)
    return DDPPOWorker(config, train_maps(config), handle, params, mask)


def _save(worker: DDPPOWorker, path: str) -> str:
    ckpt = Checkpoint(
        spec=worker.spec,
        params=worker.params,
        step=worker.total_steps,
        rng_state=encode_rng_state(worker.rngs.policy),
        extra={
            "iteration": worker.iteration,
            "task": worker.config.task,
            "config": worker.config.to_dict(),
        },
    )
    return save_checkpoint(path, ckpt)


def train(
    config: TrainConfig,
    group: Optional[WorkerGroup] = None,
    handle: Optional[CollectiveHandle] = None,
) -> TrainResult:
    """Alternate collect -> optimise until the group-wide step budget is met.

    The budget is compared against the sum of all ranks' steps, so preempted
    workers do not skew termination. Rank 0 writes metrics, checkpoints and the
    log of the episodes its own envs finished.
    """

    group = group or WorkerGroup(0, 1)
    owns_handle = handle is None
    handle = handle or connect(config, group)
    logger = get_logger("trainer.train", group.detail)
    worker = make_worker(config, handle)
    is_main = handle.rank == 0
    final = checkpoint_path(config.output_dir)

    metrics: Optional[JsonlWriter] = None
    episodes: Optional[JsonlWriter] = None
    if is_main:
        create_dir(config.output_dir)
        dump_config(config, os.path.join(config.output_dir, CONFIG_FILE))
        metrics = JsonlWriter(os.path.join(config.output_dir, METRICS_FILE), mode="wb")
        episodes = JsonlWriter(os.path.join(config.output_dir, EPISODES_FILE), mode="wb")
    try:
        if config.total_steps == 0:
            if is_main:
                _save(worker, final)
                logger.info("Empty step budget, wrote initial parameters to %s", final)
            return TrainResult(final, metrics.path if metrics else None, 0, 0)

        with tqdm(
            total=config.total_steps, unit="step", disable=not is_main, leave=False
        ) as pbar:
            while worker.total_steps < config.total_steps:
                stats = worker.train_iteration()
                pbar.update(min(stats.steps_total, config.total_steps - pbar.n))
                if metrics is not None:
                    metrics.write(stats.to_dict())
                if episodes is not None:
                    episodes.write_all(
                        [
                            {"iteration": stats.iteration, **record}
                            for record in worker.finished
                        ]
                    )
                report = logger.info if is_main else logger.debug
                report(
                    "Iteration %d: %d steps (%d total), %d preempted, "
                    "success %s, spl %s, loss %s",
                    stats.iteration,
                    stats.steps_total,
                    stats.total_steps_so_far,
                    stats.num_preempted,
                    _fmt(stats.success),
                    _fmt(stats.spl),
                    _fmt(stats.losses.get("total_loss")),
                )
                if is_main and worker.iteration % config.checkpoint_interval == 0:
                    path = _save(worker, checkpoint_path(config.output_dir, worker.iteration))
                    logger.info("Checkpoint written to %s", path)
        if is_main:
            _save(worker, final)
            logger.info(
                "Training done after %d steps, final checkpoint %s", worker.total_steps, final
            )
        handle.barrier("train.done")
    finally:
        if metrics is not None:
            metrics.close()
        if episodes is not None:
            episodes.close()
        if owns_handle:
            handle.close()
    return TrainResult(
        final, metrics.path if metrics else None, worker.total_steps, worker.iteration
    )


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.3f}"
