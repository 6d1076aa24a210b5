"""

    rln2.harness.manifest.py
    ~~~~~~~~~~~~~~~~~~~~~~~~
    Experiment manifests: everything a reproducible run depends on, stored as JSON.

    @author: z33k

"""
import json
import logging
import os
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

from rln2 import __version__
from rln2.constants import DATA_ROOT_ENV, DEFAULT_RESOLUTION, FILENAME_TIMESTAMP_FORMAT, Json, \
    MAX_LIGHTS, OUTPUT_DIR, PathLike, Size
from rln2.data.dataset import load_dataset
from rln2.data.synth import synthesize_dataset
from rln2.data.triplet import SceneTriplet
from rln2.nn.model import ModelConfig
from rln2.training import TrainConfig
from rln2.utils import ConfigError, DataIntegrityError, getdir, getfile

_log = logging.getLogger(__name__)


def default_data_root() -> Optional[str]:
    return os.environ.get(DATA_ROOT_ENV) or None


@dataclass
class DatasetDescriptor:
    """Either a dataset root on disk or a synthetic dataset rendered on the fly.

    With neither a root nor a synthetic scene count given, the root is taken from the
    ``RLN2_DATA_ROOT`` environment variable.
    """
    root: Optional[str] = None
    seed: int = 0
    count: int = 0  # synthetic scenes
    resolution: Size = DEFAULT_RESOLUTION
    lights_per_scene: int = MAX_LIGHTS
    samples_per_scene: int = 1
    _cache: Dict[str, List[SceneTriplet]] = field(default_factory=dict, repr=False,
                                                 compare=False)

    def __post_init__(self) -> None:
        self.resolution = tuple(self.resolution)
        if self.root is None and self.count == 0:
            self.root = default_data_root()

    @property
    def synthetic(self) -> bool:
        return self.root is None

    def validate(self) -> "DatasetDescriptor":
        if self.synthetic and self.count < 1:
            raise ConfigError(f"Dataset needs a root (or ${DATA_ROOT_ENV}) or a positive "
                              f"synthetic scene count")
        if not 1 <= self.lights_per_scene <= MAX_LIGHTS:
            raise ConfigError(f"Lights per scene must lie in [1, {MAX_LIGHTS}], got: "
                              f"{self.lights_per_scene}")
        return self

    def triplets(self, split: str) -> List[SceneTriplet]:
        if not self.synthetic:
            return list(load_dataset(self.root, split))
        if not self._cache:
            self._cache.update(synthesize_dataset(
                self.count, self.seed, self.resolution, self.lights_per_scene,
                self.samples_per_scene))
        if split not in self._cache:
            raise DataIntegrityError(f"Missing split: {split!r}")
        return self._cache[split]

    @property
    def as_dict(self) -> Json:
        return {
            "root": self.root,
            "seed": self.seed,
            "count": self.count,
            "resolution": list(self.resolution),
            "lights_per_scene": self.lights_per_scene,
            "samples_per_scene": self.samples_per_scene,
        }

    @classmethod
    def from_dict(cls, data: Json) -> "DatasetDescriptor":
        unknown = set(data) - set(cls().as_dict)
        if unknown:
            raise ConfigError(f"Unknown dataset field(s): {sorted(unknown)}")
        return cls(**data)


def _default_run_id() -> str:
    return f"run_{datetime.now().strftime(FILENAME_TIMESTAMP_FORMAT)}"


@dataclass
class ExperimentManifest:
    run_id: str = field(default_factory=_default_run_id)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    dataset: DatasetDescriptor = field(default_factory=DatasetDescriptor)
    version: str = f"rln2-{__version__}"
    output_dir: str = str(OUTPUT_DIR)
    eval_split: str = "val"

    @property
    def run_dir(self) -> Path:
        return Path(self.output_dir) / self.run_id

    def validate(self) -> "ExperimentManifest":
        if not self.run_id or "/" in self.run_id or "\\" in self.run_id:
            raise ConfigError(f"Invalid run id: {self.run_id!r}")
        self.model.validate()
        self.train.validate(self.model.stages)
        self.dataset.validate()
        return self

    def derive(self, run_id: str, **model_changes) -> "ExperimentManifest":
        """Return a copy under ``run_id`` with ``model_changes`` applied to the model config.
        """
        return replace(self, run_id=run_id, model=replace(self.model, **model_changes))

    @property
    def as_dict(self) -> Json:
        return {
            "run_id": self.run_id,
            "model": self.model.as_dict,
            "train": self.train.as_dict,
            "dataset": self.dataset.as_dict,
            "version": self.version,
            "output_dir": self.output_dir,
            "eval_split": self.eval_split,
        }

    @classmethod
    def from_dict(cls, data: Json) -> "ExperimentManifest":
        try:
            return cls(
                run_id=data["run_id"],
                model=ModelConfig.from_dict(data.get("model", {})),
                train=TrainConfig.from_dict(data.get("train", {})),
                dataset=DatasetDescriptor.from_dict(data.get("dataset", {})),
                version=data.get("version", f"rln2-{__version__}"),
                output_dir=data.get("output_dir", str(OUTPUT_DIR)),
                eval_split=data.get("eval_split", "val"),
            )
        except (KeyError, TypeError) as e:
            raise ConfigError(f"Malformed manifest: {e}") from e

    def dump(self, path: PathLike) -> Path:
        dest = Path(path)
        getdir(dest.parent)
        with dest.open("w", encoding="utf8") as f:
            json.dump(self.as_dict, f, indent=4, ensure_ascii=False)
        _log.info(f"Dumped manifest to '{dest}'")
        return dest

    @classmethod
    def load(cls, path: PathLike) -> "ExperimentManifest":
        src = getfile(path, ext=".json")
        try:
            data = json.loads(src.read_text(encoding="utf8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Manifest '{src}' isn't valid JSON: {e}") from e
        return cls.from_dict(data)
