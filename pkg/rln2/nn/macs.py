"""

    rln2.nn.macs.py
    ~~~~~~~~~~~~~~~
    Analytic multiply-accumulate counting.

    Convolutions count k·k·C_in/groups·C_out per output pixel, linear layers in·out per token.
    Modules doing arithmetic outside of those layers report it through an
    ``extra_macs(inputs, output)`` method. Biases, normalizations and activations are not
    counted.

    @author: z33k

"""
import logging
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Tuple

import torch
import torch.nn as nn

from rln2.constants import Json, MAC_REPORT_PATCH
from rln2.nn.attention import CDFFA, ChannelAttention, CrossAttention
from rln2.nn.model import ModelConfig, build

_log = logging.getLogger(__name__)


@dataclass
class MacReport:
    conv: int = 0
    linear: int = 0
    attention: int = 0
    elementwise: int = 0

    @property
    def total(self) -> int:
        return self.conv + self.linear + self.attention + self.elementwise

    @property
    def gmacs(self) -> float:
        return self.total / 1e9

    @property
    def as_dict(self) -> Json:
        return {**asdict(self), "total": self.total}

    def __add__(self, other: "MacReport") -> "MacReport":
        return MacReport(self.conv + other.conv, self.linear + other.linear,
                         self.attention + other.attention, self.elementwise + other.elementwise)


def _first(output):
    return output[0] if isinstance(output, (tuple, list)) else output


def count_module_macs(module: nn.Module, input_shape: Optional[Sequence[int]] = None,
                      inputs: Optional[Tuple[torch.Tensor, ...]] = None) -> MacReport:
    """Count MACs of one forward pass of ``module`` on a single-image batch.

    Either ``input_shape`` (a seeded random tensor of that shape in the module's dtype is
    used) or explicit ``inputs`` must be given.

    Returns:
        the report, per image
    """
    if not inputs:
        if input_shape is None:
            raise ValueError("Either an input shape or input tensors are required")
        param = next(module.parameters(), None)
        dtype = param.dtype if param is not None else torch.float64
        inputs = (torch.rand(*input_shape, generator=torch.Generator().manual_seed(0),
                             dtype=dtype),)
    batch = inputs[0].shape[0] if inputs[0].ndim == 4 else 1
    report = MacReport()

    def conv_hook(m: nn.Conv2d, args, output) -> None:
        out = _first(output)
        report.conv += m.weight.numel() * out.shape[-2] * out.shape[-1] * out.shape[0] // batch

    def linear_hook(m: nn.Linear, args, output) -> None:
        tokens = _first(output).numel() // m.out_features
        report.linear += m.in_features * m.out_features * tokens // batch

    def extra_hook(m: nn.Module, args, output) -> None:
        macs = m.extra_macs(args, output)
        if isinstance(m, ChannelAttention):
            report.elementwise += macs
        else:
            report.attention += macs

    handles = []
    for m in module.modules():
        if isinstance(m, nn.Conv2d):
            handles.append(m.register_forward_hook(conv_hook))
        elif isinstance(m, nn.Linear):
            handles.append(m.register_forward_hook(linear_hook))
        if isinstance(m, (CDFFA, ChannelAttention, CrossAttention)):
            handles.append(m.register_forward_hook(extra_hook))
    try:
        with torch.no_grad():
            module(*inputs)
    finally:
        for h in handles:
            h.remove()
    return report


def count_macs(config: ModelConfig, patch=MAC_REPORT_PATCH) -> MacReport:
    """Count MACs of the network described by ``config`` on a ``patch``×``patch`` RGB input.
    """
    model = build(config)
    report = count_module_macs(model, (1, 3, patch, patch))
    _log.info(f"{config.label} at {patch}×{patch}: {report.gmacs:.4f} GMACs")
    return report
