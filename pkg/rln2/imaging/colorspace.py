"""

    rln2.imaging.colorspace.py
    ~~~~~~~~~~~~~~~~~~~~~~~~~~
    Conversions between RGB and the guidance color spaces (HSV, CIE L*a*b*).

    Tensor kernels work on channel-first tensors of shape (..., 3, H, W). Image plane
    functions wrap them for H×W×C numpy planes.

    @author: z33k

"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch

from rln2.constants import D65_WHITE, HUE_PERIOD, SRGB_TO_XYZ
from rln2.imaging.plane import ImagePlane
from rln2.utils import ConfigError, RangeError, ShapeError, type_checker
from rln2.utils.check_type import channels_checker

_LAB_DELTA = 6.0 / 29.0


def _check_rgb_tensor(rgb: torch.Tensor) -> None:
    if rgb.ndim < 3 or rgb.shape[-3] != 3:
        raise ShapeError(f"Expected a (..., 3, H, W) tensor, got: {tuple(rgb.shape)}")


def rgb_to_hsv_tensor(rgb: torch.Tensor) -> torch.Tensor:
    """Convert RGB in [0, 1] to stacked (hue in degrees, saturation, value).

    Undefined hue (zero chroma) is 0.
    """
    _check_rgb_tensor(rgb)
    r, g, b = rgb.unbind(dim=-3)
    maxc = rgb.amax(dim=-3)
    minc = rgb.amin(dim=-3)
    delta = maxc - minc
    ones = torch.ones_like(maxc)
    zeros = torch.zeros_like(maxc)

    saturation = torch.where(maxc > 0, delta / torch.where(maxc > 0, maxc, ones), zeros)
    safe = torch.where(delta > 0, delta, ones)
    hue_r = torch.remainder((g - b) / safe, 6.0)
    hue_g = (b - r) / safe + 2.0
    hue_b = (r - g) / safe + 4.0
    hue = torch.where(maxc == r, hue_r, torch.where(maxc == g, hue_g, hue_b))
    hue = torch.where(delta > 0, hue * 60.0, zeros)
    hue = torch.where(hue >= HUE_PERIOD, hue - HUE_PERIOD, hue)
    return torch.stack([hue, saturation, maxc], dim=-3)


def hsv_to_rgb_tensor(hsv: torch.Tensor) -> torch.Tensor:
    """Convert stacked (hue in degrees, saturation, value) to RGB.
    """
    _check_rgb_tensor(hsv)
    hue, saturation, value = hsv.unbind(dim=-3)
    sector = hue / 60.0
    channels = []
    for n in (5.0, 3.0, 1.0):
        k = torch.remainder(n + sector, 6.0)
        ramp = torch.clamp(torch.minimum(k, 4.0 - k), 0.0, 1.0)
        channels.append(value - value * saturation * ramp)
    return torch.stack(channels, dim=-3)


def srgb_to_linear(rgb: torch.Tensor) -> torch.Tensor:
    rgb = rgb.clamp(min=0.0)
    return torch.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)


def rgb_to_lab_tensor(rgb: torch.Tensor) -> torch.Tensor:
    """Convert sRGB in [0, 1] to CIE L*a*b* (D65), L in [0, 100].
    """
    _check_rgb_tensor(rgb)
    linear = srgb_to_linear(rgb)
    matrix = torch.tensor(SRGB_TO_XYZ, dtype=rgb.dtype, device=rgb.device)
    white = torch.tensor(D65_WHITE, dtype=rgb.dtype, device=rgb.device)
    xyz = torch.einsum("ij,...jhw->...ihw", matrix, linear)
    t = xyz / white[:, None, None]
    threshold = _LAB_DELTA ** 3
    f = torch.where(t > threshold, t.clamp(min=threshold) ** (1.0 / 3.0),
                    t / (3.0 * _LAB_DELTA ** 2) + 4.0 / 29.0)
    fx, fy, fz = f.unbind(dim=-3)
    return torch.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], dim=-3)


def guidance_planes(rgb: torch.Tensor,
                    mode: str) -> Tuple[torch.Tensor, torch.Tensor]:
    """Return the (luminance-branch, reflectance-branch) guidance images for ``mode``.

    All guidance channels are normalized to [0, 1]:
        hsv: V for the luminance branch, (H/360, S) for the reflectance branch
        lab: L/100 for the luminance branch, ((a+128)/255, (b+128)/255) for the reflectance one
    """
    if mode == "hsv":
        hsv = rgb_to_hsv_tensor(rgb)
        return hsv[..., 2:3, :, :], torch.stack(
            [hsv[..., 0, :, :] / HUE_PERIOD, hsv[..., 1, :, :]], dim=-3)
    if mode == "lab":
        lab = rgb_to_lab_tensor(rgb)
        return lab[..., 0:1, :, :] / 100.0, (lab[..., 1:, :, :] + 128.0) / 255.0
    raise ConfigError(f"No explicit guidance planes for mode: {mode!r}")


@dataclass
class GuidanceMaps:
    """Hue (degrees), saturation and value maps of an RGB image.
    """
    hue: np.ndarray
    saturation: np.ndarray
    value: np.ndarray

    def __post_init__(self) -> None:
        self.hue = np.asarray(self.hue, dtype=np.float64)
        self.saturation = np.asarray(self.saturation, dtype=np.float64)
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.hue.ndim != 2 or not (
                self.hue.shape == self.saturation.shape == self.value.shape):
            raise ShapeError(f"Guidance maps must be equally shaped H×W arrays, got: "
                             f"{self.hue.shape}, {self.saturation.shape}, {self.value.shape}")


def _check_unit_range(img: ImagePlane, name: str) -> None:
    if img.data.min() < 0.0 or img.data.max() > 1.0:
        raise RangeError(f"{name}() expects values in [0, 1], got: "
                         f"[{img.data.min():.6g}, {img.data.max():.6g}]")


@type_checker(ImagePlane)
@channels_checker(3)
def rgb_to_hsv(img: ImagePlane) -> GuidanceMaps:
    """Convert an RGB plane to hue (degrees), saturation and value maps.
    """
    _check_unit_range(img, "rgb_to_hsv")
    hsv = rgb_to_hsv_tensor(img.to_tensor())[0].numpy()
    return GuidanceMaps(hsv[0], hsv[1], hsv[2])


@type_checker(GuidanceMaps)
def hsv_to_rgb(maps: GuidanceMaps) -> ImagePlane:
    """Convert hue (degrees), saturation and value maps back to an RGB plane.
    """
    if maps.hue.min() < 0.0 or maps.hue.max() >= HUE_PERIOD:
        raise RangeError(f"Hue must lie in [0, {HUE_PERIOD:g}), got: "
                         f"[{maps.hue.min():.6g}, {maps.hue.max():.6g}]")
    for name, arr in (("saturation", maps.saturation), ("value", maps.value)):
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise RangeError(f"{name.capitalize()} must lie in [0, 1]")
    hsv = torch.from_numpy(np.stack([maps.hue, maps.saturation, maps.value]))
    return ImagePlane(hsv_to_rgb_tensor(hsv).numpy().transpose(1, 2, 0))


@type_checker(ImagePlane)
@channels_checker(3)
def rgb_to_lab(img: ImagePlane) -> ImagePlane:
    """Convert an sRGB plane to CIE L*a*b* under D65.
    """
    _check_unit_range(img, "rgb_to_lab")
    lab = rgb_to_lab_tensor(img.to_tensor())
    return ImagePlane.from_tensor(lab, ((0.0, 100.0), (-128.0, 127.0), (-128.0, 127.0)))


def hue_of(rgb: np.ndarray, saturation_floor: Optional[float] = None) -> np.ndarray:
    """Return per-pixel hue (degrees) of an H×W×3 array, NaN where saturation is at or below
    ``saturation_floor`` (if given).
    """
    hsv = rgb_to_hsv_tensor(torch.from_numpy(
        np.ascontiguousarray(np.asarray(rgb, dtype=np.float64).transpose(2, 0, 1)))).numpy()
    hue = hsv[0]
    if saturation_floor is not None:
        hue = np.where(hsv[1] > saturation_floor, hue, np.nan)
    return hue
