"""

    rln2.training.py
    ~~~~~~~~~~~~~~~~
    The optimization recipe: Adam on an L1 loss, cosine learning rate with warm restarts,
    global L1-norm gradient clipping and progressively growing training patches.

    @author: z33k

"""
import logging
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch

from rln2.constants import DEFAULT_ADAM_EPS, DEFAULT_CLIP, DEFAULT_COSINE_PERIODS, DEFAULT_LR, \
    DEFAULT_PATCH_SCHEDULE, Json, PathLike
from rln2.data.triplet import SceneTriplet
from rln2.imaging.plane import ImagePlane
from rln2.nn.checkpoint import load_checkpoint, save_checkpoint
from rln2.nn.model import Rln2
from rln2.utils import ConfigError, NumericalError, ShapeError, getdir, is_increasing, timed, \
    type_checker

_log = logging.getLogger(__name__)

HISTORY_COLUMNS = ["step", "lr", "loss", "patch_size", "grad_l1", "wall_time"]
DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass
class TrainConfig:
    lr: float = DEFAULT_LR
    total_steps: int = 1000
    batch_size: int = 4
    patch_schedule: Tuple[Tuple[int, int], ...] = DEFAULT_PATCH_SCHEDULE
    clip_value: float = DEFAULT_CLIP
    cosine_periods: int = DEFAULT_COSINE_PERIODS
    seed: int = 0
    checkpoint_every: int = 0  # 0 keeps only the final checkpoint
    log_every: int = 50
    dtype: str = "float32"
    adam_eps: float = DEFAULT_ADAM_EPS
    flip: bool = True  # random horizontal flips of training patches

    def __post_init__(self) -> None:
        self.patch_schedule = tuple((int(t), int(p)) for t, p in self.patch_schedule)

    def validate(self, stages: Optional[int] = None) -> "TrainConfig":
        if self.lr <= 0:
            raise ConfigError(f"Learning rate must be positive, got: {self.lr}")
        if self.total_steps < 1 or self.batch_size < 1:
            raise ConfigError(f"Step count and batch size must be positive, got: "
                              f"{self.total_steps}, {self.batch_size}")
        if self.clip_value <= 0:
            raise ConfigError(f"Clip value must be positive, got: {self.clip_value}")
        if self.adam_eps <= 0:
            raise ConfigError(f"Adam epsilon must be positive, got: {self.adam_eps}")
        if self.cosine_periods < 1:
            raise ConfigError(f"Cosine periods must be positive, got: {self.cosine_periods}")
        if self.checkpoint_every < 0:
            raise ConfigError(f"Checkpoint cadence can't be negative: {self.checkpoint_every}")
        if self.dtype not in DTYPES:
            raise ConfigError(f"Unsupported dtype: {self.dtype!r} (expected one of "
                              f"{tuple(DTYPES)})")
        if not self.patch_schedule or self.patch_schedule[0][0] != 0:
            raise ConfigError(f"Patch schedule must start at step 0, got: {self.patch_schedule}")
        thresholds = [t for t, _ in self.patch_schedule]
        sizes = [p for _, p in self.patch_schedule]
        if not is_increasing(thresholds) or not is_increasing(sizes):
            raise ConfigError(f"Patch schedule must ascend in both steps and sizes, got: "
                              f"{self.patch_schedule}")
        if stages is not None and any(p % 2 ** stages for p in sizes):
            raise ConfigError(f"Patch sizes must divide by {2 ** stages}, got: {sizes}")
        return self

    @property
    def as_dict(self) -> Json:
        data = asdict(self)
        data["patch_schedule"] = [list(item) for item in self.patch_schedule]
        return data

    @classmethod
    def from_dict(cls, data: Json) -> "TrainConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown train config field(s): {sorted(unknown)}")
        return cls(**data)


def l1_loss_tensor(pred: torch.Tensor, ref: torch.Tensor) -> torch.Tensor:
    if pred.shape != ref.shape:
        raise ShapeError(f"Loss operands differ in shape: {tuple(pred.shape)} vs "
                         f"{tuple(ref.shape)}")
    return (pred - ref).abs().mean()


@type_checker(ImagePlane, ImagePlane)
def l1_loss(pred: ImagePlane, ref: ImagePlane) -> float:
    """Mean absolute difference over all elements.
    """
    if pred.shape != ref.shape:
        raise ShapeError(f"Loss operands differ in shape: {pred.shape} vs {ref.shape}")
    return float(np.mean(np.abs(pred.data - ref.data)))


def cosine_lr(step: int, total: int, base_lr: float, periods=DEFAULT_COSINE_PERIODS) -> float:
    """Cosine schedule with ``periods`` warm restarts over ``total`` steps.

    Every period decays from ``base_lr`` to 0 along a half cosine. A step landing exactly on a
    period's end reports 0; the following step restarts near ``base_lr``.
    """
    if total < 1 or not 0 <= step <= total:
        raise ValueError(f"Step must lie in [0, {total}], got: {step}")
    phase = (step * periods) % total
    if phase == 0 and step > 0:
        return 0.0
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * phase / total))


def grad_l1_norm(parameters: Iterable[torch.nn.Parameter]) -> float:
    return float(sum(p.grad.detach().double().abs().sum() for p in parameters
                     if p.grad is not None))


def clip_gradients(parameters: Iterable[torch.nn.Parameter], clip: float) -> float:
    """Rescale all gradients by clip / Σ|g| when their global L1 norm exceeds ``clip``.

    Returns:
        the pre-clip global L1 norm
    """
    if clip <= 0:
        raise ValueError(f"Clip value must be positive, got: {clip}")
    params = [p for p in parameters if p.grad is not None]
    total = grad_l1_norm(params)
    if total > clip:
        scale = clip / total
        for p in params:
            p.grad.detach().mul_(scale)
    return total


def patch_size_at(schedule: Sequence[Tuple[int, int]], step: int) -> int:
    """Return the patch size active at ``step`` under an ascending ``schedule``.
    """
    active = [size for threshold, size in schedule if threshold <= step]
    if not active:
        raise ConfigError(f"No patch size is scheduled for step {step}")
    return active[-1]


class PatchSampler:
    """Seeded random crops with horizontal flips of (color-lit input, ambient target) pairs.
    """
    def __init__(self, triplets: Sequence[SceneTriplet], seed: int, dtype=torch.float32,
                 flip=True) -> None:
        if not triplets:
            raise ConfigError("Training needs at least one triplet")
        shapes = {t.color_lit.shape for t in triplets}
        if len(shapes) != 1:
            raise ShapeError(f"Training triplets must share a resolution, got: {sorted(shapes)}")
        self.inputs = torch.cat([t.color_lit.to_tensor(dtype) for t in triplets])
        self.targets = torch.cat([t.ambient.to_tensor(dtype) for t in triplets])
        self.generator = torch.Generator().manual_seed(seed)
        self.flip = flip

    def sample(self, batch_size: int, patch: int) -> Tuple[torch.Tensor, torch.Tensor]:
        n, _, h, w = self.inputs.shape
        ph, pw = min(patch, h), min(patch, w)
        idx = torch.randint(n, (batch_size,), generator=self.generator)
        tops = torch.randint(h - ph + 1, (batch_size,), generator=self.generator)
        lefts = torch.randint(w - pw + 1, (batch_size,), generator=self.generator)
        flips = torch.rand(batch_size, generator=self.generator) < 0.5
        xs, ys = [], []
        for i, top, left, flip in zip(idx.tolist(), tops.tolist(), lefts.tolist(),
                                      flips.tolist()):
            x = self.inputs[i, :, top:top + ph, left:left + pw]
            y = self.targets[i, :, top:top + ph, left:left + pw]
            if flip and self.flip:
                x, y = x.flip(-1), y.flip(-1)
            xs.append(x)
            ys.append(y)
        return torch.stack(xs), torch.stack(ys)

    def state_dict(self) -> Json:
        return {"generator": self.generator.get_state()}

    def load_state_dict(self, state: Json) -> None:
        self.generator.set_state(state["generator"])


class Trainer:
    """Resumable training loop.

    The color-lit image is the input, the ambient image the target. Checkpoints land in
    ``run_dir`` every ``checkpoint_every`` steps and as ``last.pt`` at the end.
    """
    def __init__(self, model: Rln2, triplets: Sequence[SceneTriplet], config: TrainConfig,
                 run_dir: Optional[PathLike] = None) -> None:
        self.config = config.validate(model.config.stages)
        self.dtype = DTYPES[config.dtype]
        self.model = model.to(self.dtype)
        self.sampler = PatchSampler(triplets, config.seed, self.dtype, config.flip)
        self.optimizer = torch.optim.Adam(self.model.parameters(), lr=config.lr,
                                          eps=config.adam_eps)
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.step = 0
        self.records: List[Json] = []

    @property
    def history(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=HISTORY_COLUMNS)

    def save(self, path: PathLike) -> Path:
        return save_checkpoint(path, self.model, self.optimizer, step=self.step,
                               rng_state={"sampler": self.sampler.state_dict()},
                               history=self.records, train_config=self.config.as_dict)

    def resume(self, path: PathLike) -> None:
        ckpt = load_checkpoint(path)
        if ckpt.config != self.model.config:
            raise ConfigError(f"Checkpoint model config {ckpt.config.as_dict} doesn't match "
                              f"{self.model.config.as_dict}")
        self.model.load_state_dict(ckpt.model_state)
        self.model.to(self.dtype)
        if ckpt.optimizer_state is not None:
            self.optimizer.load_state_dict(ckpt.optimizer_state)
        if ckpt.rng_state is not None:
            self.sampler.load_state_dict(ckpt.rng_state["sampler"])
        self.step = ckpt.step
        self.records = list(ckpt.history or [])
        _log.info(f"Resumed from '{path}' at step {self.step}")

    def train_step(self) -> Json:
        cfg = self.config
        start = time.perf_counter()
        lr = cosine_lr(self.step, cfg.total_steps, cfg.lr, cfg.cosine_periods)
        for group in self.optimizer.param_groups:
            group["lr"] = lr
        patch = patch_size_at(cfg.patch_schedule, self.step)
        x, y = self.sampler.sample(cfg.batch_size, patch)

        self.optimizer.zero_grad(set_to_none=True)
        loss = l1_loss_tensor(self.model(x).restored, y)
        if not torch.isfinite(loss):
            if self.run_dir is not None:
                self.save(self.run_dir / "nonfinite.pt")
            raise NumericalError(f"Non-finite loss ({float(loss)}) at step {self.step}")
        loss.backward()
        clip_gradients(self.model.parameters(), cfg.clip_value)
        grad_l1 = grad_l1_norm(self.model.parameters())
        self.optimizer.step()

        record = {
            "step": self.step,
            "lr": lr,
            "loss": float(loss.detach()),
            "patch_size": min(patch, x.shape[-2], x.shape[-1]),
            "grad_l1": grad_l1,
            "wall_time": time.perf_counter() - start,
        }
        self.records.append(record)
        self.step += 1
        return record

    def fit(self, resume_from: Optional[PathLike] = None,
            stop_at: Optional[int] = None) -> pd.DataFrame:
        """Train until ``total_steps`` (or ``stop_at``) and return the history.
        """
        if resume_from is not None:
            self.resume(resume_from)
        cfg = self.config
        end = cfg.total_steps if stop_at is None else min(stop_at, cfg.total_steps)
        self.model.train()
        while self.step < end:
            record = self.train_step()
            if cfg.log_every and (self.step % cfg.log_every == 0 or self.step == end):
                _log.info(f"step {record['step']}: lr={record['lr']:.3e}, "
                          f"loss={record['loss']:.5f}, patch={record['patch_size']}")
            if self.run_dir is not None and cfg.checkpoint_every \
                    and self.step % cfg.checkpoint_every == 0:
                self.save(getdir(self.run_dir) / f"step_{self.step:06d}.pt")
        if self.run_dir is not None:
            self.save(getdir(self.run_dir) / "last.pt")
        self.model.eval()
        return self.history


@timed("training")
def train(model: Rln2, triplets: Sequence[SceneTriplet], config: TrainConfig,
          run_dir: Optional[PathLike] = None,
          resume_from: Optional[PathLike] = None) -> Tuple[Rln2, pd.DataFrame]:
    """Train ``model`` on ``triplets`` and return it with its per-step history.
    """
    trainer = Trainer(model, triplets, config, run_dir)
    history = trainer.fit(resume_from)
    return trainer.model, history
