"""

    rln2.nn.model.py
    ~~~~~~~~~~~~~~~~
    The dual-branch Retinex restoration network.

    The input is decomposed into luminance L' and reflectance R'. Each component runs through
    its own encoder - refinement block - decoder branch which predicts an additive residual;
    the compensated components are multiplied back into the restored image. Guidance (V for
    the luminance branch, H and S for the reflectance branch in the default HSV mode) steers
    the refinement block. With the frequency stream on, successive Haar DWTs of the component
    feed the low-frequency band into the refinement block and the high-frequency bands into
    the decoder. A ConvNeXt-style extractor shared by both branches provides wide context
    through cross-attention at the bottleneck and after every decoder stage, each attending to
    the context map closest in scale.

    Variants:
        S   - no frequency stream, tiny context backbone
        Sf  - frequency stream, tiny context backbone
        L   - no frequency stream, large context backbone
        Lf  - frequency stream, large context backbone

    @author: z33k

"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from rln2.constants import Json, LUMINANCE_EPS
from rln2.imaging.colorspace import guidance_planes
from rln2.imaging.plane import ImagePlane
from rln2.imaging.retinex import decompose_tensor, recompose_tensor
from rln2.imaging.wavelet import haar_dwt
from rln2.nn.attention import CDFFA, ChannelAttention, CrossAttention
from rln2.nn.blocks import GatedConvBlock, RgbGuidanceFilter, WideContextExtractor, \
    pad_to_multiple
from rln2.utils import ConfigError, ShapeError, type_checker
from rln2.utils.check_type import channels_checker

_log = logging.getLogger(__name__)

VARIANTS = ("S", "Sf", "L", "Lf")
GUIDANCES = ("none", "rgb", "lab", "hsv")
FUSIONS = ("concat", "cdffa")
CONTEXT_BACKBONES = ("tiny", "large", "none")
# guidance channels fed to (luminance branch, reflectance branch)
GUIDANCE_CHANNELS = {"none": (0, 0), "rgb": (3, 3), "lab": (1, 2), "hsv": (1, 2)}


def context_level(stride: int, levels: int) -> int:
    """Index of the context map (strides 4, 8, 16...) closest in scale to features at
    ``stride``.
    """
    return min(max(stride.bit_length() - 3, 0), levels - 1)


@dataclass
class ModelConfig:
    variant: str = "Sf"
    guidance: str = "hsv"
    fusion: str = "cdffa"
    stages: int = 3
    base_width: int = 16
    context_backbone: Optional[str] = None  # derived from the variant if not given
    seed: int = 0
    eps: float = LUMINANCE_EPS
    heads: int = 2
    context_grid: int = 4
    guidance_normalization: str = "unit"  # guidance channels scaled to [0, 1]

    def __post_init__(self) -> None:
        if self.context_backbone is None:
            self.context_backbone = "large" if self.variant in ("L", "Lf") else "tiny"

    @property
    def frequency(self) -> bool:
        return self.variant in ("Sf", "Lf")

    @property
    def padding_multiple(self) -> int:
        return 2 ** self.stages

    @property
    def bottleneck_width(self) -> int:
        return self.base_width * 2 ** self.stages

    @property
    def effective_fusion(self) -> Optional[str]:
        return None if self.guidance == "none" else self.fusion

    @property
    def label(self) -> str:
        fusion = self.effective_fusion or "plain"
        return f"RLN2-{self.variant}[{self.guidance}/{fusion}]"

    def validate(self) -> "ModelConfig":
        if self.variant not in VARIANTS:
            raise ConfigError(f"Unknown variant: {self.variant!r} (expected one of {VARIANTS})")
        if self.guidance not in GUIDANCES:
            raise ConfigError(f"Unknown guidance: {self.guidance!r} (expected one of {GUIDANCES})")
        if self.fusion not in FUSIONS:
            raise ConfigError(f"Unknown fusion: {self.fusion!r} (expected one of {FUSIONS})")
        if self.context_backbone not in CONTEXT_BACKBONES:
            raise ConfigError(f"Unknown context backbone: {self.context_backbone!r}")
        if (self.variant in ("L", "Lf")) != (self.context_backbone == "large"):
            raise ConfigError(f"Variant {self.variant!r} doesn't go with the "
                              f"{self.context_backbone!r} context backbone (the large backbone "
                              f"is exclusive to L and Lf)")
        if self.stages < 1 or self.base_width < 1:
            raise ConfigError(f"Stages and base width must be positive, got: {self.stages}, "
                              f"{self.base_width}")
        if self.heads < 1 or self.base_width % self.heads:
            raise ConfigError(f"Head count ({self.heads}) must divide the base width "
                              f"({self.base_width})")
        if self.eps <= 0:
            raise ConfigError(f"Luminance floor must be positive, got: {self.eps}")
        if self.guidance_normalization != "unit":
            raise ConfigError(f"Unsupported guidance normalization: "
                              f"{self.guidance_normalization!r}")
        return self

    @property
    def as_dict(self) -> Json:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Json) -> "ModelConfig":
        known = cls.__dataclass_fields__
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"Unknown model config field(s): {sorted(unknown)}")
        return cls(**data)


@dataclass
class Rln2Output:
    restored: torch.Tensor  # B×3×H×W in [0, 1]
    d_luminance: torch.Tensor  # B×1×H×W
    d_reflectance: torch.Tensor  # B×3×H×W
    diagnostics: Dict[str, float] = field(default_factory=dict)


class Rln2Branch(nn.Module):
    """One compensation branch (luminance or reflectance).

    Encoder stage k refines features at 1/2^k resolution and downsamples them with a strided
    convolution. The refinement block fuses the bottleneck features with the low-frequency
    band and the guidance features. Decoder stage k concatenates the high-frequency bands of
    the matching DWT level, upsamples, concatenates the encoder skip, projects, applies
    channel attention, a gated refinement and cross-attention to the wide context. A
    zero-initialized head emits the residual.
    """
    def __init__(self, name: str, channels: int, guide_channels: int, config: ModelConfig,
                 context_channels: Sequence[int] = ()) -> None:
        super().__init__()
        self.name = name
        self.stages = config.stages
        self.frequency = config.frequency
        widths = [config.base_width * 2 ** k for k in range(config.stages + 1)]
        n = widths[-1]
        high = 3 * channels if self.frequency else 0

        self.intro = nn.Conv2d(channels, widths[0], 3, padding=1)
        self.encoders = nn.ModuleList([GatedConvBlock(widths[k]) for k in range(self.stages)])
        self.downs = nn.ModuleList([nn.Conv2d(widths[k], widths[k + 1], 2, stride=2)
                                    for k in range(self.stages)])

        self.lf_embed = nn.Conv2d(channels, n, 3, padding=1) if self.frequency else None
        self.fusion = config.effective_fusion if guide_channels else None
        self.guide_embed = None
        if self.fusion is not None:
            self.guide_embed = nn.Conv2d(guide_channels, n, 3, padding=1)
        if self.fusion == "cdffa":
            self.fuse = CDFFA(n, n if self.frequency else None, n, n)
        elif self.fusion == "concat":
            self.fuse = nn.Conv2d(n * (3 if self.frequency else 2), n, 3, padding=1)
        else:
            self.fuse = None
        self.refine = GatedConvBlock(n)
        self.context_attn = None
        self.context_levels = []
        if context_channels:
            level = context_level(2 ** self.stages, len(context_channels))
            self.context_levels.append(level)
            self.context_attn = CrossAttention(n, context_channels[level], heads=config.heads,
                                               grid=config.context_grid)
        self.decoder_context_attns = nn.ModuleList()

        self.ups, self.projs, self.channel_attns, self.decoders = (
            nn.ModuleList(), nn.ModuleList(), nn.ModuleList(), nn.ModuleList())
        for k in reversed(range(self.stages)):
            self.ups.append(nn.Sequential(
                nn.Conv2d(widths[k + 1] + high, 4 * widths[k], 1, bias=False),
                nn.PixelShuffle(2)))
            self.projs.append(nn.Conv2d(2 * widths[k], widths[k], 1))
            self.channel_attns.append(ChannelAttention(widths[k]))
            self.decoders.append(GatedConvBlock(widths[k]))
            if context_channels:
                level = context_level(2 ** k, len(context_channels))
                self.context_levels.append(level)
                self.decoder_context_attns.append(CrossAttention(
                    widths[k], context_channels[level], heads=config.heads,
                    grid=config.context_grid))

        self.head = nn.Conv2d(widths[0], channels, 3, padding=1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, component: torch.Tensor, guide: Optional[torch.Tensor],
                context: Optional[Sequence[torch.Tensor]],
                diagnostics: Dict[str, float]) -> torch.Tensor:
        x = self.intro(component)
        skips = []
        for k, (encoder, down) in enumerate(zip(self.encoders, self.downs)):
            x = encoder(x)
            skips.append(x)
            diagnostics[f"{self.name}.enc{k}"] = float(x.detach().norm())
            x = down(x)

        highs, lf = [], None
        if self.frequency:
            ll = component
            for _ in range(self.stages):
                ll, lh, hl, hh = haar_dwt(ll)
                highs.append(torch.cat([lh, hl, hh], dim=1))
            lf = self.lf_embed(ll)

        if self.fusion is None:
            if lf is not None:
                x = x + lf
        else:
            g = self.guide_embed(F.avg_pool2d(guide, 2 ** self.stages))
            if self.fusion == "cdffa":
                x = self.fuse(x, lf, g)
            else:
                x = self.fuse(torch.cat([x, g] if lf is None else [x, lf, g], dim=1))
        x = self.refine(x)
        if self.context_attn is not None:
            x = self.context_attn(x, context[self.context_levels[0]])
        diagnostics[f"{self.name}.refined"] = float(x.detach().norm())

        for i, k in enumerate(reversed(range(self.stages))):
            if self.frequency:
                x = torch.cat([x, highs[k]], dim=1)
            x = self.ups[i](x)
            x = self.projs[i](torch.cat([x, skips[k]], dim=1))
            x = self.decoders[i](self.channel_attns[i](x))
            if self.decoder_context_attns:
                x = self.decoder_context_attns[i](x, context[self.context_levels[i + 1]])
            diagnostics[f"{self.name}.dec{k}"] = float(x.detach().norm())
        return self.head(x)


class Rln2(nn.Module):
    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.config = config.validate()
        l_guide, r_guide = GUIDANCE_CHANNELS[config.guidance]
        self.rgb_filter = RgbGuidanceFilter() if config.guidance == "rgb" else None
        self.context = None
        context_channels = ()
        if config.context_backbone != "none":
            self.context = WideContextExtractor(config.context_backbone)
            context_channels = self.context.stage_channels
        self.l_branch = Rln2Branch("L", 1, l_guide, config, context_channels)
        self.r_branch = Rln2Branch("R", 3, r_guide, config, context_channels)

    def guidance(self, rgb: torch.Tensor) -> Tuple[Optional[torch.Tensor],
                                                   Optional[torch.Tensor]]:
        mode = self.config.guidance
        if mode == "none":
            return None, None
        if mode == "rgb":
            return self.rgb_filter(rgb)
        return guidance_planes(rgb, mode)

    def forward(self, x: torch.Tensor) -> Rln2Output:
        if x.ndim != 4 or x.shape[1] != 3:
            raise ShapeError(f"Expected a B×3×H×W input, got: {tuple(x.shape)}")
        h, w = x.shape[-2:]
        padded, _ = pad_to_multiple(x, self.config.padding_multiple)
        luminance, reflectance = decompose_tensor(padded, eps=self.config.eps)
        guide_l, guide_r = self.guidance(padded)
        context = self.context.features(padded) if self.context is not None else None

        diagnostics = {}
        d_lum = self.l_branch(luminance, guide_l, context, diagnostics)
        d_refl = self.r_branch(reflectance, guide_r, context, diagnostics)
        restored = recompose_tensor(luminance, reflectance, d_lum, d_refl)
        return Rln2Output(restored[..., :h, :w], d_lum[..., :h, :w], d_refl[..., :h, :w],
                          diagnostics)

    @type_checker(ImagePlane, is_method=True)
    @channels_checker(3, is_method=True)
    def restore(self, img: ImagePlane) -> ImagePlane:
        """Restore a single RGB plane with the frozen model.
        """
        param = next(self.parameters())
        was_training = self.training
        self.eval()
        try:
            with torch.no_grad():
                out = self(img.to_tensor(param.dtype).to(param.device))
        finally:
            self.train(was_training)
        return ImagePlane.from_tensor(out.restored)

    def parameter_vector(self) -> torch.Tensor:
        return torch.cat([p.detach().reshape(-1) for p in self.parameters()])


def param_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


def build(config: ModelConfig) -> Rln2:
    """Build a network deterministically from ``config`` (parameters seeded by its seed).

    Residual heads start at zero, so a freshly built network maps any input onto itself.
    """
    config.validate()
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(config.seed)
        model = Rln2(config)
    _log.info(f"Built {config.label} with {param_count(model):,} parameters")
    return model
