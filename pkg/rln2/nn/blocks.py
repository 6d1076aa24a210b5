"""

    rln2.nn.blocks.py
    ~~~~~~~~~~~~~~~~~
    Building blocks: normalization, gated refinement, the ConvNeXt-style wide-context
    extractor and the learned RGB guidance filter.

    @author: z33k

"""
import logging
from typing import List, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from rln2.constants import PathLike
from rln2.imaging.plane import ImagePlane
from rln2.utils import ConfigError, ShapeError, getfile

_log = logging.getLogger(__name__)

# (stage widths, stage depths)
BACKBONES = {
    "tiny": ((16, 32, 64), (1, 1, 1)),
    "large": ((48, 96, 192), (2, 2, 2)),
}


class LayerNorm2d(nn.Module):
    """Layer normalization over the channel dimension of B×C×H×W maps.
    """
    def __init__(self, channels: int, eps=1e-6) -> None:
        super().__init__()
        self.weight = nn.Parameter(torch.ones(channels))
        self.bias = nn.Parameter(torch.zeros(channels))
        self.eps = eps

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        mean = x.mean(dim=1, keepdim=True)
        var = (x - mean).pow(2).mean(dim=1, keepdim=True)
        x = (x - mean) / torch.sqrt(var + self.eps)
        return self.weight[:, None, None] * x + self.bias[:, None, None]


def pad_to_multiple(x: torch.Tensor, multiple: int) -> Tuple[torch.Tensor, Tuple[int, int]]:
    """Pad the bottom and right of a B×C×H×W tensor so both sizes divide by ``multiple``.

    Reflection is used where the tensor is large enough, replication otherwise.
    """
    h, w = x.shape[-2:]
    pad_h = (multiple - h % multiple) % multiple
    pad_w = (multiple - w % multiple) % multiple
    if not (pad_h or pad_w):
        return x, (0, 0)
    mode = "reflect" if pad_h < h and pad_w < w else "replicate"
    return F.pad(x, (0, pad_w, 0, pad_h), mode=mode), (pad_h, pad_w)


class GatedConvBlock(nn.Module):
    """Gated convolutional refinement: pointwise expansion into gate and value halves, a
    depthwise convolution on the value, gate ⊙ value, pointwise projection, residual.
    """
    def __init__(self, dim: int, expansion=2, kernel_size=3) -> None:
        super().__init__()
        hidden = dim * expansion
        self.norm = LayerNorm2d(dim)
        self.expand = nn.Conv2d(dim, 2 * hidden, 1)
        self.dwconv = nn.Conv2d(hidden, hidden, kernel_size, padding=kernel_size // 2,
                                groups=hidden)
        self.project = nn.Conv2d(hidden, dim, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        gate, value = self.expand(self.norm(x)).chunk(2, dim=1)
        return x + self.project(F.gelu(gate) * self.dwconv(value))


class ConvNeXtBlock(nn.Module):
    def __init__(self, dim: int, layer_scale=1e-6) -> None:
        super().__init__()
        self.dwconv = nn.Conv2d(dim, dim, 7, padding=3, groups=dim)
        self.norm = nn.LayerNorm(dim, eps=1e-6)
        self.pwconv1 = nn.Linear(dim, 4 * dim)
        self.pwconv2 = nn.Linear(4 * dim, dim)
        self.gamma = nn.Parameter(layer_scale * torch.ones(dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        y = self.dwconv(x).permute(0, 2, 3, 1)
        y = self.pwconv2(F.gelu(self.pwconv1(self.norm(y))))
        return x + (self.gamma * y).permute(0, 3, 1, 2)


class WideContextExtractor(nn.Module):
    """ConvNeXt-style hierarchical feature extractor providing wide contextual information.

    A 4×4 patchifying stem is followed by stages at 1/4, 1/8 and 1/16 of the input resolution
    (inputs are padded to a multiple of 16). Weights start random; pretrained ones may be
    supplied through ``load_pretrained()``.
    """
    def __init__(self, kind="tiny") -> None:
        super().__init__()
        if kind not in BACKBONES:
            raise ConfigError(f"Unknown context backbone: {kind!r}")
        self.kind = kind
        dims, depths = BACKBONES[kind]
        self.stem = nn.Sequential(nn.Conv2d(3, dims[0], 4, stride=4), LayerNorm2d(dims[0]))
        self.downsamples = nn.ModuleList([nn.Identity()])
        for prev, dim in zip(dims, dims[1:]):
            self.downsamples.append(nn.Sequential(LayerNorm2d(prev),
                                                  nn.Conv2d(prev, dim, 2, stride=2)))
        self.stages = nn.ModuleList(
            [nn.Sequential(*[ConvNeXtBlock(dim) for _ in range(depth)])
             for dim, depth in zip(dims, depths)])
        self.stage_channels = tuple(dims)
        self.out_channels = dims[-1]
        self.stride = 4 * 2 ** (len(dims) - 1)

    def features(self, x: torch.Tensor) -> List[torch.Tensor]:
        """Return the feature map of every stage, finest first.
        """
        x, _ = pad_to_multiple(x, self.stride)
        x = self.stem(x)
        feats = []
        for down, stage in zip(self.downsamples, self.stages):
            x = stage(down(x))
            feats.append(x)
        return feats

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.features(x)[-1]

    def load_pretrained(self, path: PathLike) -> None:
        """Load externally supplied weights (non-strict; mismatches are logged).
        """
        state = torch.load(getfile(path), map_location="cpu", weights_only=True)
        if isinstance(state, dict) and "model" in state:
            state = state["model"]
        result = self.load_state_dict(state, strict=False)
        if result.missing_keys:
            _log.warning(f"Missing {len(result.missing_keys)} backbone key(s), e.g.: "
                         f"{result.missing_keys[:3]}")
        if result.unexpected_keys:
            _log.warning(f"Ignored {len(result.unexpected_keys)} unexpected key(s), e.g.: "
                         f"{result.unexpected_keys[:3]}")
        _log.info(f"Loaded {self.kind!r} backbone weights from '{path}'")


class RgbGuidanceFilter(nn.Module):
    """Learned 3×3 depthwise filter splitting an RGB image into two guidance streams: the
    filtered output and its residual complement. Starts as a box filter.
    """
    def __init__(self) -> None:
        super().__init__()
        self.filter = nn.Conv2d(3, 3, 3, padding=1, groups=3, padding_mode="replicate")
        with torch.no_grad():
            self.filter.weight.fill_(1.0 / 9.0)
            self.filter.bias.zero_()

    def forward(self, rgb: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        filtered = self.filter(rgb)
        return filtered, rgb - filtered


def wide_context_features(extractor: WideContextExtractor | str,
                          img: torch.Tensor | ImagePlane) -> List[torch.Tensor]:
    """Hierarchical wide-context features of an RGB image (strides 4, 8 and 16).

    Args:
        extractor: an extractor or a backbone name (a freshly initialized one is built)
        img: B×3×H×W tensor or an RGB plane
    """
    if isinstance(extractor, str):
        extractor = WideContextExtractor(extractor)
    if isinstance(img, ImagePlane):
        param = next(extractor.parameters())
        img = img.to_tensor(param.dtype)
    if img.ndim != 4 or img.shape[1] != 3:
        raise ShapeError(f"Expected a B×3×H×W input, got: {tuple(img.shape)}")
    return extractor.features(img)
