"""

    rln2.imaging.retinex.py
    ~~~~~~~~~~~~~~~~~~~~~~~
    Retinex decomposition into luminance and reflectance, and recomposition of
    residual-compensated components.

    An image factors pixelwise as I = L · R. The luminance is initialized from the HSV value
    channel (floored at ``eps``), which keeps the reflectance within [0, 1]. Compensation is
    additive on both components: I_out = (L' + dL) · (R' + dR), clamped to [0, 1] only at the
    very end.

    @author: z33k

"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch

from rln2.constants import LUMINANCE_EPS
from rln2.imaging.plane import ImagePlane
from rln2.utils import RangeError, ShapeError, type_checker
from rln2.utils.check_type import channels_checker


def decompose_tensor(rgb: torch.Tensor,
                     eps=LUMINANCE_EPS) -> Tuple[torch.Tensor, torch.Tensor]:
    """Split a (..., 3, H, W) tensor into luminance (..., 1, H, W) and reflectance.
    """
    if rgb.ndim < 3 or rgb.shape[-3] != 3:
        raise ShapeError(f"Expected a (..., 3, H, W) tensor, got: {tuple(rgb.shape)}")
    if eps <= 0:
        raise RangeError(f"Luminance floor must be positive, got: {eps}")
    luminance = rgb.amax(dim=-3, keepdim=True).clamp(min=eps)
    return luminance, rgb / luminance


def recompose_tensor(luminance: torch.Tensor, reflectance: torch.Tensor,
                     d_luminance: Optional[torch.Tensor] = None,
                     d_reflectance: Optional[torch.Tensor] = None,
                     clamp=True) -> torch.Tensor:
    """Return (L + dL) · (R + dR), clamped to [0, 1] if ``clamp``.
    """
    if luminance.shape[-3] != 1 or reflectance.shape[-3] != 3 \
            or luminance.shape[-2:] != reflectance.shape[-2:]:
        raise ShapeError(f"Inconsistent components: {tuple(luminance.shape)} vs "
                         f"{tuple(reflectance.shape)}")
    if d_luminance is not None:
        if d_luminance.shape != luminance.shape:
            raise ShapeError(f"Luminance residual shape {tuple(d_luminance.shape)} doesn't match "
                             f"{tuple(luminance.shape)}")
        luminance = luminance + d_luminance
    if d_reflectance is not None:
        if d_reflectance.shape != reflectance.shape:
            raise ShapeError(f"Reflectance residual shape {tuple(d_reflectance.shape)} doesn't "
                             f"match {tuple(reflectance.shape)}")
        reflectance = reflectance + d_reflectance
    out = luminance * reflectance
    return out.clamp(0.0, 1.0) if clamp else out


@dataclass
class RetinexPair:
    luminance: np.ndarray  # H×W×1, strictly positive
    reflectance: np.ndarray  # H×W×3, nonnegative

    def __post_init__(self) -> None:
        self.luminance = np.asarray(self.luminance, dtype=np.float64)
        self.reflectance = np.asarray(self.reflectance, dtype=np.float64)
        if self.luminance.ndim != 3 or self.luminance.shape[-1] != 1:
            raise ShapeError(f"Luminance must be H×W×1, got: {self.luminance.shape}")
        if self.reflectance.shape != self.luminance.shape[:2] + (3,):
            raise ShapeError(f"Reflectance must be H×W×3 aligned with luminance, got: "
                             f"{self.reflectance.shape}")
        if self.luminance.min() <= 0:
            raise RangeError("Luminance must be strictly positive")


@dataclass
class ResidualPair:
    d_luminance: np.ndarray  # H×W×1
    d_reflectance: np.ndarray  # H×W×3

    def __post_init__(self) -> None:
        self.d_luminance = np.asarray(self.d_luminance, dtype=np.float64)
        self.d_reflectance = np.asarray(self.d_reflectance, dtype=np.float64)
        if not (np.all(np.isfinite(self.d_luminance)) and np.all(np.isfinite(self.d_reflectance))):
            raise RangeError("Residuals must be finite")

    @classmethod
    def zeros(cls, height: int, width: int) -> "ResidualPair":
        return cls(np.zeros((height, width, 1)), np.zeros((height, width, 3)))


def _channels_first(arr: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(2, 0, 1)))


@type_checker(ImagePlane)
@channels_checker(3)
def decompose(img: ImagePlane, eps=LUMINANCE_EPS) -> RetinexPair:
    """Decompose an RGB plane into its luminance and reflectance components.
    """
    luminance, reflectance = decompose_tensor(img.to_tensor()[0], eps=eps)
    return RetinexPair(luminance.numpy().transpose(1, 2, 0),
                       reflectance.numpy().transpose(1, 2, 0))


@type_checker(RetinexPair)
def recompose(pair: RetinexPair, residual: Optional[ResidualPair] = None,
              clamp=True) -> ImagePlane:
    """Recompose the compensated components of ``pair`` into an RGB plane.
    """
    d_lum = d_refl = None
    if residual is not None:
        d_lum, d_refl = _channels_first(residual.d_luminance), _channels_first(
            residual.d_reflectance)
    out = recompose_tensor(_channels_first(pair.luminance), _channels_first(pair.reflectance),
                           d_lum, d_refl, clamp=clamp)
    data = out.numpy().transpose(1, 2, 0)
    if clamp:
        return ImagePlane(data)
    lo, hi = float(min(data.min(), 0.0)), float(max(data.max(), 1.0))
    return ImagePlane(data, ((lo, hi),) * 3)
