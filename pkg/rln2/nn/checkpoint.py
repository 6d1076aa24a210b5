"""

    rln2.nn.checkpoint.py
    ~~~~~~~~~~~~~~~~~~~~~
    Single-file checkpoints: versioned header, model config as canonical key-value text,
    parameters, optimizer state, RNG state, step counter and training history.

    @author: z33k

"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import torch

from rln2.constants import CHECKPOINT_HEADER, Json, PathLike
from rln2.nn.model import ModelConfig, Rln2, build
from rln2.utils import DataIntegrityError, from_kv_text, getdir, getfile, to_kv_text

_log = logging.getLogger(__name__)


@dataclass
class Checkpoint:
    config: ModelConfig
    model_state: Dict[str, torch.Tensor]
    optimizer_state: Optional[Dict[str, Any]] = None
    rng_state: Optional[Dict[str, Any]] = None
    step: int = 0
    history: Optional[List[Json]] = None
    train_config: Optional[Json] = None

    def model(self) -> Rln2:
        dtype = next(iter(self.model_state.values())).dtype
        model = build(self.config).to(dtype)
        model.load_state_dict(self.model_state)
        return model


def save_checkpoint(path: PathLike, model: Rln2, optimizer: Optional[torch.optim.Optimizer] = None,
                    step=0, rng_state: Optional[Dict[str, Any]] = None,
                    history: Optional[List[Json]] = None,
                    train_config: Optional[Json] = None) -> Path:
    dest = Path(path)
    getdir(dest.parent)
    archive = {
        "header": CHECKPOINT_HEADER,
        "config": to_kv_text(model.config.as_dict),
        "model": model.state_dict(),
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
        "rng": rng_state,
        "step": int(step),
        "history": history,
        "train_config": to_kv_text(train_config) if train_config is not None else None,
    }
    torch.save(archive, dest)
    _log.info(f"Saved checkpoint at step {step} to '{dest}'")
    return dest


def load_checkpoint(path: PathLike) -> Checkpoint:
    """Load a checkpoint written by ``save_checkpoint()``.

    Raises:
        DataIntegrityError: on an unreadable archive or a header mismatch
    """
    src = getfile(path)
    try:
        archive = torch.load(src, map_location="cpu", weights_only=True)
    except Exception as e:
        raise DataIntegrityError(f"Unreadable checkpoint '{src}': {e}") from e
    header = archive.get("header") if isinstance(archive, dict) else None
    if header != CHECKPOINT_HEADER:
        raise DataIntegrityError(f"Checkpoint '{src}' has header {header!r}, expected "
                                 f"{CHECKPOINT_HEADER!r}")
    train_config = archive.get("train_config")
    return Checkpoint(
        config=ModelConfig.from_dict(from_kv_text(archive["config"])),
        model_state=archive["model"],
        optimizer_state=archive.get("optimizer"),
        rng_state=archive.get("rng"),
        step=archive.get("step", 0),
        history=archive.get("history"),
        train_config=from_kv_text(train_config) if train_config else None,
    )


def load_model(path: PathLike) -> Rln2:
    """Restore a ready-to-use network from the checkpoint at ``path``.
    """
    model = load_checkpoint(path).model()
    model.eval()
    return model
