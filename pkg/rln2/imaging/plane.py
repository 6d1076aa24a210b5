"""

    rln2.imaging.plane.py
    ~~~~~~~~~~~~~~~~~~~~~
    The image plane: H×W×C array of intensities, the currency of all image operations.

    @author: z33k

"""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import torch
from PIL import Image

from rln2.constants import PathLike
from rln2.utils import RangeError, ShapeError, getdir, getfile, type_checker

Bounds = Tuple[Tuple[float, float], ...]


@dataclass
class ImagePlane:
    """H×W×C array of real intensities with a per-channel range declaration.

    The declaration is informative: only finiteness is enforced on construction. Use
    ``in_bounds()`` to check conformity.
    """
    data: np.ndarray
    bounds: Optional[Bounds] = None

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[..., None]
        if data.ndim != 3:
            raise ShapeError(f"Image plane must be a H×W×C array, got shape: {data.shape}")
        h, w, c = data.shape
        if h < 1 or w < 1:
            raise ShapeError(f"Image plane must be at least 1×1, got: {h}×{w}")
        if c not in (1, 2, 3):
            raise ShapeError(f"Image plane must have 1, 2 or 3 channels, got: {c}")
        if not np.all(np.isfinite(data)):
            raise RangeError("Image plane holds non-finite values")
        self.data = data
        if self.bounds is None:
            self.bounds = ((0.0, 1.0),) * c
        else:
            self.bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
            if len(self.bounds) != c:
                raise ShapeError(f"Expected {c} channel bounds, got: {len(self.bounds)}")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape

    def in_bounds(self, tolerance=0.0) -> bool:
        for ch, (lo, hi) in enumerate(self.bounds):
            plane = self.data[..., ch]
            if plane.min() < lo - tolerance or plane.max() > hi + tolerance:
                return False
        return True

    def clamped(self) -> "ImagePlane":
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return ImagePlane(np.clip(self.data, lo, hi), self.bounds)

    def to_tensor(self, dtype=torch.float64) -> torch.Tensor:
        """Return the plane as a 1×C×H×W tensor.
        """
        return torch.from_numpy(np.ascontiguousarray(self.data.transpose(2, 0, 1)))[None].to(dtype)

    @classmethod
    def from_tensor(cls, tensor: torch.Tensor, bounds: Optional[Bounds] = None) -> "ImagePlane":
        """Build a plane from a C×H×W or 1×C×H×W tensor.
        """
        if tensor.ndim == 4:
            if tensor.shape[0] != 1:
                raise ShapeError(f"Expected a single-item batch, got: {tuple(tensor.shape)}")
            tensor = tensor[0]
        if tensor.ndim != 3:
            raise ShapeError(f"Expected a C×H×W tensor, got: {tuple(tensor.shape)}")
        data = tensor.detach().to("cpu", torch.float64).numpy().transpose(1, 2, 0)
        return cls(data, bounds)


@type_checker(PathLike)
def read_png(path: PathLike) -> ImagePlane:
    """Read an 8-bit image into an RGB plane in [0, 1].
    """
    src = getfile(path)
    with Image.open(src) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return ImagePlane(arr)


@type_checker(ImagePlane, PathLike)
def write_png(img: ImagePlane, path: PathLike) -> Path:
    """Write ``img`` as an 8-bit PNG (values clamped to [0, 1] and rounded).
    """
    dest = Path(path)
    getdir(dest.parent)
    arr = np.clip(img.data, 0.0, 1.0)
    arr = np.round(arr * 255.0).astype(np.uint8)
    if img.channels == 1:
        Image.fromarray(arr[..., 0], mode="L").save(dest)
    elif img.channels == 3:
        Image.fromarray(arr, mode="RGB").save(dest)
    else:
        raise ShapeError(f"Only 1 or 3 channel planes can be written as PNG, got: {img.channels}")
    return dest
