"""

    rln2.harness.commands.py
    ~~~~~~~~~~~~~~~~~~~~~~~~
    Experiment commands: dataset generation, training, evaluation, the guidance ablation grid,
    inference and complexity reporting.

    @author: z33k

"""
import json
import logging
import traceback
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import pandas as pd
import torch

from rln2.constants import DEFAULT_RESOLUTION, GENERATOR_VERSION, MAC_REPORT_PATCH, MAX_LIGHTS, \
    PathLike, SPLIT_RATIOS, Size
from rln2.data.dataset import load_dataset, save_triplet
from rln2.data.synth import assign_splits, scene_id, synthesize_dataset
from rln2.data.triplet import SceneTriplet
from rln2.harness.manifest import ExperimentManifest
from rln2.imaging.plane import ImagePlane, read_png, write_png
from rln2.metrics import MetricReport, evaluate_pairs
from rln2.nn.checkpoint import load_model
from rln2.nn.macs import count_macs
from rln2.nn.model import FUSIONS, GUIDANCES, ModelConfig, Rln2, build, param_count
from rln2.training import Trainer
from rln2.utils import ConfigError, DataIntegrityError, Rln2Error, getdir, timed, to_kv_text

_log = logging.getLogger(__name__)

# guidance ablation rows: (guidance, fusion)
DEFAULT_GRID = (("none", "concat"), ("rgb", "concat"), ("lab", "concat"), ("hsv", "concat"),
                ("hsv", "cdffa"))


@timed("dataset generation", precision=1)
def cmd_generate(count: int, seed: int, out: PathLike, resolution: Size = DEFAULT_RESOLUTION,
                 lights_per_scene=MAX_LIGHTS, samples_per_scene=1,
                 ratios: Sequence[float] = SPLIT_RATIOS, force=False,
                 workers: Optional[int] = None) -> Path:
    """Render a scene-disjoint synthetic dataset into ``out`` and describe it in
    ``dataset.json``.

    Raises:
        ConfigError: if ``out`` exists and isn't empty (unless ``force``)
    """
    root = Path(out)
    if root.exists() and any(root.iterdir()) and not force:
        raise ConfigError(f"Output directory '{root}' isn't empty (use force to overwrite)")
    getdir(root)
    splits = synthesize_dataset(count, seed, tuple(resolution), lights_per_scene,
                                samples_per_scene, ratios, workers=workers)
    for split, triplets in splits.items():
        getdir(root / split)
        for triplet in triplets:
            save_triplet(triplet, root, split)
    descriptor = {
        "seed": seed,
        "count": count,
        "resolution": list(resolution),
        "lights_per_scene": lights_per_scene,
        "samples_per_scene": samples_per_scene,
        "ratios": list(ratios),
        "generator_version": GENERATOR_VERSION,
        "splits": {split: [scene_id(i) for i in indices]
                   for split, indices in assign_splits(count, seed, ratios).items()},
    }
    with (root / "dataset.json").open("w", encoding="utf8") as f:
        json.dump(descriptor, f, indent=4, ensure_ascii=False)
    _log.info(f"Generated {count} scene(s) under '{root}': "
              f"{ {split: len(ids) for split, ids in descriptor['splits'].items()} }")
    return root


@dataclass
class EvalReport:
    """Model metrics side by side with the unprocessed (input vs. reference) baseline.
    """
    model: MetricReport
    unprocessed: MetricReport

    @property
    def table(self) -> pd.DataFrame:
        return pd.DataFrame([
            {"method": "unprocessed", "psnr": self.unprocessed.psnr_db,
             "ssim": self.unprocessed.ssim, "samples": self.unprocessed.sample_count},
            {"method": self.model.label, "psnr": self.model.psnr_db, "ssim": self.model.ssim,
             "samples": self.model.sample_count},
        ])

    @property
    def gain_db(self) -> float:
        return self.model.psnr_db - self.unprocessed.psnr_db

    def to_kv_text(self) -> str:
        data = {f"unprocessed.{k}": v for k, v in self.unprocessed.summary.items()}
        data.update({f"model.{k}": v for k, v in self.model.summary.items()})
        return f"# ssim_mode: {self.model.ssim_mode}\n" + to_kv_text(data)

    def dump(self, out_dir: PathLike) -> Path:
        dest = getdir(out_dir)
        (dest / "report.txt").write_text(self.to_kv_text(), encoding="utf-8")
        self.model.to_csv(dest / "model.csv")
        self.unprocessed.to_csv(dest / "unprocessed.csv")
        self.table.to_csv(dest / "summary.csv", index=False)
        return dest


def evaluate_model(model: Rln2, triplets: Iterable[SceneTriplet],
                   workers: Optional[int] = None) -> EvalReport:
    """Score ``model`` restorations and the unprocessed inputs against ambient references.
    """
    model_pairs: List[Tuple[str, ImagePlane, ImagePlane]] = []
    baseline_pairs: List[Tuple[str, ImagePlane, ImagePlane]] = []
    for triplet in triplets:
        model_pairs.append((triplet.id, model.restore(triplet.color_lit), triplet.ambient))
        baseline_pairs.append((triplet.id, triplet.color_lit, triplet.ambient))
    return EvalReport(evaluate_pairs(model_pairs, model.config.label, workers=workers),
                      evaluate_pairs(baseline_pairs, "unprocessed", workers=workers))


def latest_checkpoint(run_dir: PathLike) -> Optional[Path]:
    run_dir = Path(run_dir)
    if (run_dir / "last.pt").is_file():
        return run_dir / "last.pt"
    steps = sorted(run_dir.glob("step_*.pt"))
    return steps[-1] if steps else None


@dataclass
class TrainOutcome:
    run_dir: Path
    model: Rln2
    history: pd.DataFrame
    evaluation: Optional[EvalReport]


def cmd_train(manifest: PathLike | ExperimentManifest, resume=False) -> TrainOutcome:
    """Run the training described by ``manifest``; artifacts land in the run directory.

    The run directory receives a manifest copy, checkpoints, ``history.csv`` (with a final
    evaluation row) and the evaluation report.
    """
    if not isinstance(manifest, ExperimentManifest):
        manifest = ExperimentManifest.load(manifest)
    manifest.validate()
    try:
        return _train(manifest, resume)
    except Rln2Error as e:
        raise type(e)(f"[run {manifest.run_id!r}] {e}") from e


@timed("training run", precision=1)
def _train(manifest: ExperimentManifest, resume: bool) -> TrainOutcome:
    run_dir = getdir(manifest.run_dir)
    manifest.dump(run_dir / "manifest.json")
    train_set = manifest.dataset.triplets("train")
    trainer = Trainer(build(manifest.model), train_set, manifest.train, run_dir)
    resume_from = latest_checkpoint(run_dir) if resume else None
    if resume and resume_from is None:
        _log.warning(f"Nothing to resume in '{run_dir}', starting afresh")
    history = trainer.fit(resume_from)

    evaluation = None
    eval_set = manifest.dataset.triplets(manifest.eval_split)
    if eval_set:
        evaluation = evaluate_model(trainer.model, eval_set)
        evaluation.dump(run_dir / f"eval_{manifest.eval_split}")
        final = {
            "step": trainer.step,
            f"{manifest.eval_split}_psnr": evaluation.model.psnr_db,
            f"{manifest.eval_split}_ssim": evaluation.model.ssim,
            "unprocessed_psnr": evaluation.unprocessed.psnr_db,
            "unprocessed_ssim": evaluation.unprocessed.ssim,
        }
        history = pd.concat([history, pd.DataFrame([final])], ignore_index=True)
    else:
        _log.warning(f"Split {manifest.eval_split!r} is empty, skipping the final evaluation")
    history.to_csv(run_dir / "history.csv", index=False)
    return TrainOutcome(run_dir, trainer.model, history, evaluation)


@timed("evaluation", precision=1)
def cmd_eval(checkpoint: PathLike, dataset: PathLike, split="test",
             out: Optional[PathLike] = None) -> EvalReport:
    """Evaluate the checkpointed model on ``split`` of the dataset at ``dataset``.
    """
    model = load_model(checkpoint)
    report = evaluate_model(model, load_dataset(dataset, split))
    if out is not None:
        report.dump(out)
    _log.info(f"{split}: {model.config.label} {report.model.psnr_db:.3f} dB vs. unprocessed "
              f"{report.unprocessed.psnr_db:.3f} dB")
    return report


def _check_grid(grid: Sequence[Tuple[str, str]]) -> None:
    if not grid:
        raise ConfigError("Ablation grid is empty")
    for guidance, fusion in grid:
        if guidance not in GUIDANCES or fusion not in FUSIONS:
            raise ConfigError(f"Invalid ablation cell: ({guidance!r}, {fusion!r})")


@timed("ablation", precision=1)
def cmd_ablate(base_manifest: PathLike | ExperimentManifest,
               grid: Sequence[Tuple[str, str]] = DEFAULT_GRID,
               patch=MAC_REPORT_PATCH) -> pd.DataFrame:
    """Train and evaluate one run per (guidance, fusion) cell under the base manifest's budget.

    A failing cell is reported in the table's ``status`` column and doesn't stop the others.
    The merged table is written next to the run directories.
    """
    if not isinstance(base_manifest, ExperimentManifest):
        base_manifest = ExperimentManifest.load(base_manifest)
    _check_grid(grid)
    base_manifest.validate()
    rows = []
    for guidance, fusion in grid:
        manifest = base_manifest.derive(f"{base_manifest.run_id}-{guidance}-{fusion}",
                                        guidance=guidance, fusion=fusion)
        row = {"guidance": guidance, "fusion": fusion, "gmacs": None, "psnr": None,
               "ssim": None, "status": "ok"}
        try:
            row["gmacs"] = count_macs(manifest.model, patch).gmacs
            outcome = cmd_train(manifest)
            if outcome.evaluation is not None:
                row["psnr"] = outcome.evaluation.model.psnr_db
                row["ssim"] = outcome.evaluation.model.ssim
        except Exception as e:
            _log.error(f"Cell ({guidance}, {fusion}) failed: {type(e).__qualname__}: {e}:\n"
                       f"{traceback.format_exc()}")
            row["status"] = f"{type(e).__qualname__}: {e}"
        rows.append(row)
    table = pd.DataFrame(rows, columns=["guidance", "fusion", "gmacs", "psnr", "ssim", "status"])
    dest = getdir(base_manifest.output_dir) / f"{base_manifest.run_id}-ablation.csv"
    table.to_csv(dest, index=False)
    _log.info(f"Ablation table written to '{dest}'")
    return table


def _restore_tiled(model: Rln2, img: ImagePlane, tile: int) -> ImagePlane:
    param = next(model.parameters())
    x = img.to_tensor(param.dtype)
    out = torch.empty_like(x)
    model.eval()
    with torch.no_grad():
        for top in range(0, img.height, tile):
            for left in range(0, img.width, tile):
                patch = x[..., top:top + tile, left:left + tile]
                out[..., top:top + tile, left:left + tile] = model(patch).restored
    return ImagePlane.from_tensor(out)


def cmd_infer(checkpoint: PathLike, image: PathLike, out: PathLike,
              tile: Optional[int] = None) -> Path:
    """Restore the image at ``image`` and write the result as PNG to ``out``.

    Args:
        checkpoint: model checkpoint
        image: input RGB image
        out: output path
        tile: if given, restore in non-overlapping tiles of that size
    """
    try:
        img = read_png(image)
    except (OSError, ValueError) as e:
        raise DataIntegrityError(f"Unreadable input image '{image}': {e}") from e
    model = load_model(checkpoint)
    if tile is not None and tile < 1:
        raise ConfigError(f"Tile size must be positive, got: {tile}")
    restored = _restore_tiled(model, img, tile) if tile else model.restore(img)
    dest = write_png(restored, out)
    _log.info(f"Restored '{image}' ({img.height}×{img.width}) into '{dest}'")
    return dest


def cmd_macs(variants: Sequence[str] = ("S", "Sf", "L", "Lf"),
             guidances: Sequence[str] = ("hsv",), fusions: Sequence[str] = ("cdffa",),
             patch=MAC_REPORT_PATCH, base: Optional[ModelConfig] = None) -> pd.DataFrame:
    """Tabulate MACs (per ``patch``×``patch`` input) and parameter counts per configuration.
    """
    base = base or ModelConfig()
    rows = []
    for variant in variants:
        for guidance in guidances:
            for fusion in fusions:
                config = ModelConfig(variant=variant, guidance=guidance, fusion=fusion,
                                     stages=base.stages, base_width=base.base_width,
                                     seed=base.seed, heads=base.heads)
                report = count_macs(config, patch)
                rows.append({"variant": variant, "guidance": guidance, "fusion": fusion,
                             **report.as_dict, "gmacs": report.gmacs,
                             "params": param_count(build(config))})
    return pd.DataFrame(rows)
