"""Parameter initialisation for the transfer settings."""
from typing import Tuple

import numpy as np

from ..config_utils import TrainConfig
from ..exceptions import ConfigurationError
from ..nn import FreezeMask, NetSpec, ParamVector, init_params, load_checkpoint
from ..nn.net import TRUNK, reinit_critic, reinit_heads
from ..utils import get_logger

logger = get_logger("trainer.transfer")

SCRATCH = "scratch"
FROZEN_ENCODER = "frozen_encoder"
FINETUNE = "finetune"


def load_pretrained(
    config: TrainConfig, spec: NetSpec, rng: np.random.Generator
) -> Tuple[ParamVector, FreezeMask]:
    """Initial parameters and freeze mask for ``config.transfer_mode``.

    - ``scratch``: fresh init, nothing frozen; the checkpoint is not read
    - ``frozen_encoder``: trunk from the checkpoint and frozen, heads re-initialised
    - ``finetune``: everything from the checkpoint, critic re-initialised, trunk frozen

    Raises:
        LayoutMismatchError: the checkpoint was trained with another net layout.
    """

    mode = config.transfer_mode
    if mode == SCRATCH:
        return init_params(spec, rng), FreezeMask.none(spec.layout)
    if not config.pretrained:
        raise ConfigurationError("pretrained", f"required for transfer_mode={mode}")

    ckpt = load_checkpoint(config.pretrained, expected=spec)
    trunk_mask = FreezeMask.for_layers(spec.layout, [TRUNK])
    if mode == FROZEN_ENCODER:
        params = reinit_heads(spec, ckpt.params, rng)
    elif mode == FINETUNE:
        params = reinit_critic(spec, ckpt.params, rng)
    else:
        raise ConfigurationError("transfer_mode", f"unknown mode '{mode}'")
    logger.info(
        "Loaded %s (step %d) for %s, %d of %d parameters frozen",
        config.pretrained,
        ckpt.step,
        mode,
        int(trunk_mask.frozen.sum()),
        len(params),
    )
    return params, trunk_mask
