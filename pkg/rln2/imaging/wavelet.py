"""

    rln2.imaging.wavelet.py
    ~~~~~~~~~~~~~~~~~~~~~~~
    Single-level orthonormal 2-D Haar DWT and its inverse, applied per channel.

    With a 2×2 block [a, b; c, d] the subbands are:
        ll = (a + b + c + d) / 2
        lh = (a + b - c - d) / 2
        hl = (a - b + c - d) / 2
        hh = (a - b - c + d) / 2

    @author: z33k

"""
from collections import Counter
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import torch

from rln2.imaging.plane import ImagePlane
from rln2.utils import ShapeError, type_checker

_call_counts: Counter = Counter()


def call_count(name="dwt2") -> int:
    """Return how many times the forward (``"dwt2"``) or inverse (``"idwt2"``) transform ran.
    """
    return _call_counts[name]


def reset_call_counts() -> None:
    _call_counts.clear()


def haar_dwt(x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """Transform a (..., H, W) tensor with even H and W into (ll, lh, hl, hh).
    """
    if x.ndim < 2 or x.shape[-1] == 0 or x.shape[-2] == 0:
        raise ShapeError(f"Cannot transform an empty image, got shape: {tuple(x.shape)}")
    if x.shape[-1] % 2 or x.shape[-2] % 2:
        raise ShapeError(f"Haar DWT needs even spatial sizes, got: {tuple(x.shape[-2:])}")
    _call_counts["dwt2"] += 1
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    ll = (a + b + c + d) / 2
    lh = (a + b - c - d) / 2
    hl = (a - b + c - d) / 2
    hh = (a - b - c + d) / 2
    return ll, lh, hl, hh


def haar_idwt(ll: torch.Tensor, lh: torch.Tensor, hl: torch.Tensor,
              hh: torch.Tensor) -> torch.Tensor:
    """Invert ``haar_dwt()`` exactly.
    """
    if not (ll.shape == lh.shape == hl.shape == hh.shape):
        raise ShapeError(f"Subband shapes differ: {tuple(ll.shape)}, {tuple(lh.shape)}, "
                         f"{tuple(hl.shape)}, {tuple(hh.shape)}")
    _call_counts["idwt2"] += 1
    a = (ll + lh + hl + hh) / 2
    b = (ll + lh - hl - hh) / 2
    c = (ll - lh + hl - hh) / 2
    d = (ll - lh - hl + hh) / 2
    *lead, h, w = ll.shape
    top = torch.stack([a, b], dim=-1).reshape(*lead, h, 2 * w)
    bottom = torch.stack([c, d], dim=-1).reshape(*lead, h, 2 * w)
    return torch.stack([top, bottom], dim=-2).reshape(*lead, 2 * h, 2 * w)


@dataclass
class SubbandSet:
    """Haar subbands as (H/2)×(W/2)×C arrays, plus the reflection padding applied to reach
    even sizes (removed again on inversion).
    """
    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray
    pad: Tuple[int, int] = (0, 0)  # (bottom rows, right columns)

    def __post_init__(self) -> None:
        bands = [np.asarray(b, dtype=np.float64) for b in (self.ll, self.lh, self.hl, self.hh)]
        self.ll, self.lh, self.hl, self.hh = bands
        if self.ll.ndim != 3 or any(b.shape != self.ll.shape for b in bands):
            raise ShapeError(f"Subbands must be equally shaped h×w×C arrays, got: "
                             f"{[b.shape for b in bands]}")
        if self.pad[0] not in (0, 1) or self.pad[1] not in (0, 1):
            raise ShapeError(f"Invalid padding record: {self.pad}")

    @property
    def energy(self) -> float:
        return float(sum(np.sum(b ** 2) for b in (self.ll, self.lh, self.hl, self.hh)))


def _pad_to_even(data: np.ndarray) -> Tuple[np.ndarray, Tuple[int, int]]:
    pad_h, pad_w = data.shape[0] % 2, data.shape[1] % 2
    if not (pad_h or pad_w):
        return data, (0, 0)
    widths = ((0, pad_h), (0, pad_w), (0, 0))
    # reflection needs at least two samples along the padded axis
    mode = "reflect" if min(data.shape[0], data.shape[1]) > 1 else "edge"
    return np.pad(data, widths, mode=mode), (pad_h, pad_w)


def _to_channels_first(arr: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(2, 0, 1)))


@type_checker(ImagePlane)
def dwt2(img: ImagePlane) -> SubbandSet:
    """Decompose ``img`` into orthonormal Haar subbands.

    Odd sizes are reflection-padded to even ones first; the padding is recorded in the
    returned set.
    """
    data, pad = _pad_to_even(img.data)
    bands = haar_dwt(_to_channels_first(data))
    return SubbandSet(*[b.numpy().transpose(1, 2, 0) for b in bands], pad=pad)


@type_checker(SubbandSet)
def idwt2(subbands: SubbandSet) -> ImagePlane:
    """Reconstruct the image plane decomposed into ``subbands``.
    """
    bands = [_to_channels_first(b) for b in
             (subbands.ll, subbands.lh, subbands.hl, subbands.hh)]
    data = haar_idwt(*bands).numpy().transpose(1, 2, 0)
    pad_h, pad_w = subbands.pad
    data = data[:data.shape[0] - pad_h, :data.shape[1] - pad_w]
    return ImagePlane(data)
