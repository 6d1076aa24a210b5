"""

    rln2.data.dataset.py
    ~~~~~~~~~~~~~~~~~~~~
    On-disk layout of triplets.

    Layout:
        root/<split>/input/<scene>_<sample>.png    colored-light image
        root/<split>/white/<scene>_<sample>.png    white-light image
        root/<split>/gt/<scene>_<sample>.png       ambient reference
        root/<split>/meta/<scene>_<sample>.txt     key-value sidecar (optional)

    @author: z33k

"""
import logging
from pathlib import Path
from typing import Iterator, List

from rln2.constants import GT_DIR, INPUT_DIR, META_DIR, PathLike, SPLITS, WHITE_DIR
from rln2.data.triplet import LightSpec, SceneTriplet
from rln2.imaging.plane import read_png, write_png
from rln2.utils import ConfigError, DataIntegrityError, from_kv_text, getdir, to_kv_text

_log = logging.getLogger(__name__)


def save_triplet(triplet: SceneTriplet, root: PathLike, split: str) -> Path:
    """Write ``triplet`` under ``root``/``split`` and return the split directory.
    """
    if split not in SPLITS:
        raise ConfigError(f"Unknown split: {split!r} (expected one of {SPLITS})")
    split_dir = Path(root) / split
    write_png(triplet.color_lit, split_dir / INPUT_DIR / f"{triplet.id}.png")
    write_png(triplet.white_lit, split_dir / WHITE_DIR / f"{triplet.id}.png")
    write_png(triplet.ambient, split_dir / GT_DIR / f"{triplet.id}.png")
    meta = getdir(split_dir / META_DIR) / f"{triplet.id}.txt"
    meta.write_text(to_kv_text(triplet.metadata), encoding="utf-8")
    return split_dir


def _read_triplet(split_dir: Path, sample: str) -> SceneTriplet:
    paths = [split_dir / d / f"{sample}.png" for d in (INPUT_DIR, WHITE_DIR, GT_DIR)]
    missing = [str(p.relative_to(split_dir)) for p in paths if not p.is_file()]
    if missing:
        raise DataIntegrityError(f"Sample {sample!r} lacks its counterpart(s): {missing}")
    try:
        images = [read_png(p) for p in paths]
    except OSError as e:
        raise DataIntegrityError(f"Sample {sample!r} is unreadable: {e}") from e
    if len({img.shape for img in images}) != 1:
        raise DataIntegrityError(f"Sample {sample!r} isn't pixel-aligned: "
                                 f"{[img.shape for img in images]}")

    scene_id, _, sample_id = sample.rpartition("_")
    if not scene_id:
        scene_id, sample_id = sample, "0"
    lights, seed, generator = [], None, None
    meta = split_dir / META_DIR / f"{sample}.txt"
    if meta.is_file():
        try:
            data = from_kv_text(meta.read_text(encoding="utf-8"))
            lights = [LightSpec.from_dict(d) for d in data.get("lights", [])]
        except (ValueError, KeyError) as e:
            raise DataIntegrityError(f"Sample {sample!r} has a malformed sidecar: {e}") from e
        seed, generator = data.get("seed"), data.get("generator_version")
    return SceneTriplet(*images, lights=lights, scene_id=scene_id, sample_id=sample_id,
                        seed=seed, generator=generator)


def sample_ids(root: PathLike, split: str) -> List[str]:
    """Return sorted ids of all samples present in any of the split's image directories.

    Raises:
        DataIntegrityError: if the split directory doesn't exist
    """
    if split not in SPLITS:
        raise ConfigError(f"Unknown split: {split!r} (expected one of {SPLITS})")
    split_dir = Path(root) / split
    if not split_dir.is_dir():
        raise DataIntegrityError(f"Missing split directory: '{split_dir}'")
    ids = set()
    for d in (INPUT_DIR, WHITE_DIR, GT_DIR):
        if (split_dir / d).is_dir():
            ids.update(p.stem for p in (split_dir / d).glob("*.png"))
    return sorted(ids)


def load_dataset(root: PathLike, split: str) -> Iterator[SceneTriplet]:
    """Lazily iterate the triplets of ``split`` under ``root`` in lexicographic id order.

    Raises:
        DataIntegrityError: on a missing split directory (immediately), a missing counterpart
            or misaligned images (when the offending sample is reached)
    """
    ids = sample_ids(root, split)
    split_dir = Path(root) / split
    _log.info(f"Found {len(ids)} sample(s) in '{split_dir}'")
    return (_read_triplet(split_dir, sample) for sample in ids)
