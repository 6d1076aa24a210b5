"""

    rln2.data.triplet.py
    ~~~~~~~~~~~~~~~~~~~~
    Data objects of the synthetic capture protocol: lights and triplets.

    @author: z33k

"""
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
import torch

from rln2.constants import GENERATOR_VERSION, Json, LIGHT_INTENSITY_RANGE
from rln2.imaging.colorspace import hsv_to_rgb_tensor
from rln2.imaging.plane import ImagePlane
from rln2.utils import ConfigError, DataIntegrityError, RangeError, ShapeError


@dataclass(frozen=True)
class LightSpec:
    direction: Tuple[float, float, float]
    intensity: float
    hue: float
    saturation: float
    kind: str = "directional"

    def __post_init__(self) -> None:
        d = np.asarray(self.direction, dtype=np.float64)
        norm = float(np.linalg.norm(d))
        if d.shape != (3,) or not math.isfinite(norm) or norm == 0:
            raise ConfigError(f"Light direction must be a non-zero 3-vector, got: "
                              f"{self.direction}")
        if not math.isclose(norm, 1.0, rel_tol=0.0, abs_tol=1e-12):
            d = d / norm
        object.__setattr__(self, "direction", tuple(float(c) for c in d))
        lo, hi = LIGHT_INTENSITY_RANGE
        if not lo <= self.intensity <= hi:
            raise RangeError(f"Light intensity must lie in [{lo}, {hi}], got: {self.intensity}")
        if not 0.0 <= self.hue < 360.0:
            raise RangeError(f"Light hue must lie in [0, 360), got: {self.hue}")
        if not 0.0 <= self.saturation <= 1.0:
            raise RangeError(f"Light saturation must lie in [0, 1], got: {self.saturation}")
        if self.kind != "directional":
            raise ConfigError(f"Unsupported light kind: {self.kind!r}")

    @property
    def rgb(self) -> np.ndarray:
        """Light color scaled by intensity.
        """
        hsv = torch.tensor([self.hue, self.saturation, 1.0], dtype=torch.float64)[:, None, None]
        return hsv_to_rgb_tensor(hsv)[:, 0, 0].numpy() * self.intensity

    def white(self) -> "LightSpec":
        return replace(self, saturation=0.0)

    @property
    def as_dict(self) -> Json:
        return {
            "direction": list(self.direction),
            "intensity": self.intensity,
            "hue": self.hue,
            "saturation": self.saturation,
            "kind": self.kind,
        }

    @classmethod
    def from_dict(cls, data: Json) -> "LightSpec":
        return cls(tuple(data["direction"]), data["intensity"], data["hue"], data["saturation"],
                   data.get("kind", "directional"))


@dataclass
class SceneTriplet:
    color_lit: ImagePlane
    white_lit: ImagePlane
    ambient: ImagePlane
    lights: List[LightSpec] = field(default_factory=list)
    scene_id: str = "scene"
    sample_id: str = "0"
    seed: Optional[int] = None
    generator: Optional[str] = None

    def __post_init__(self) -> None:
        shapes = {self.color_lit.shape, self.white_lit.shape, self.ambient.shape}
        if len(shapes) != 1:
            raise ShapeError(f"Triplet {self.id!r} isn't pixel-aligned: {sorted(shapes)}")
        # ids split on the last '_' when read back
        if "_" in self.sample_id:
            raise DataIntegrityError(f"Sample id must not contain '_', got: {self.sample_id!r}")

    @property
    def id(self) -> str:
        return f"{self.scene_id}_{self.sample_id}"

    @property
    def metadata(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "sample_id": self.sample_id,
            "seed": self.seed,
            "generator_version": self.generator or GENERATOR_VERSION,
            "lights": [light.as_dict for light in self.lights],
            "encoding": "png8",
            "linear": True,
        }
