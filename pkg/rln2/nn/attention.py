"""

    rln2.nn.attention.py
    ~~~~~~~~~~~~~~~~~~~~
    Attention mechanisms: cross-domain feature fusion attention (CDFFA), channel attention
    and cross-attention to wide-context features.

    @author: z33k

"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from rln2.utils import ConfigError, ShapeError


def similarity(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Scaled dot product ⟨a, b⟩ / √d of two equal-length (flattened) slices.
    """
    a, b = a.reshape(-1), b.reshape(-1)
    if a.numel() != b.numel():
        raise ShapeError(f"Slice lengths differ: {a.numel()} vs {b.numel()}")
    return torch.dot(a, b) / math.sqrt(a.numel())


def channel_similarity(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Per-channel ``similarity()`` of two B×N×H×W maps, returned as B×N.
    """
    if x.shape != y.shape:
        raise ShapeError(f"Feature maps differ in shape: {tuple(x.shape)} vs {tuple(y.shape)}")
    d = x.shape[-1] * x.shape[-2]
    return (x * y).flatten(2).sum(dim=-1) / math.sqrt(d)


@dataclass
class RelevanceWeights:
    alpha: torch.Tensor  # B×n, rows sum to 1
    beta: Optional[torch.Tensor]  # B×n, rows sum to 1 (None without a low-frequency stream)


def cdffa_fuse(x_main: torch.Tensor, x_lf: Optional[torch.Tensor],
               x_guid: torch.Tensor) -> Tuple[torch.Tensor, RelevanceWeights]:
    """Fuse projected n-channel maps by channel relevance to the guidance features.

    α = softmax_i(sim(x_main_i, x_guid_i)), β = softmax_i(sim(x_lf_i, x_guid_i)) and the
    output is α_i · x_main_i + β_i · x_lf_i per channel i. Without a low-frequency stream
    only the α term remains.
    """
    if x_main.shape != x_guid.shape or (x_lf is not None and x_lf.shape != x_main.shape):
        raise ShapeError(f"Projected streams must align: main {tuple(x_main.shape)}, "
                         f"lf {None if x_lf is None else tuple(x_lf.shape)}, "
                         f"guidance {tuple(x_guid.shape)}")
    alpha = torch.softmax(channel_similarity(x_main, x_guid), dim=1)
    out = alpha[:, :, None, None] * x_main
    beta = None
    if x_lf is not None:
        beta = torch.softmax(channel_similarity(x_lf, x_guid), dim=1)
        out = out + beta[:, :, None, None] * x_lf
    return out, RelevanceWeights(alpha, beta)


class CDFFA(nn.Module):
    """Cross-domain feature fusion attention.

    Main (RGB-feature) and low-frequency streams as well as the guidance features are
    projected to ``n`` channels by 1×1 convolutions before ``cdffa_fuse()``.
    """
    def __init__(self, main_channels: int, lf_channels: Optional[int], guide_channels: int,
                 n: int) -> None:
        super().__init__()
        self.n = n
        self.proj_main = nn.Conv2d(main_channels, n, 1)
        self.proj_lf = nn.Conv2d(lf_channels, n, 1) if lf_channels else None
        self.proj_guid = nn.Conv2d(guide_channels, n, 1)
        self.last_weights: Optional[RelevanceWeights] = None

    def forward(self, x_main: torch.Tensor, x_lf: Optional[torch.Tensor],
                x_guid: torch.Tensor) -> torch.Tensor:
        if (x_lf is None) != (self.proj_lf is None):
            raise ShapeError("Low-frequency stream presence doesn't match the module's setup")
        lf = self.proj_lf(x_lf) if x_lf is not None else None
        out, weights = cdffa_fuse(self.proj_main(x_main), lf, self.proj_guid(x_guid))
        beta = None if weights.beta is None else weights.beta.detach()
        self.last_weights = RelevanceWeights(weights.alpha.detach(), beta)
        return out

    def extra_macs(self, inputs: Tuple[torch.Tensor, ...], output: torch.Tensor) -> int:
        # similarity products and the weighted sums, per stream
        streams = 2 if self.proj_lf is not None else 1
        return 2 * streams * output[0].numel()


class ChannelAttention(nn.Module):
    """CBAM-style channel gate: a shared MLP over average- and max-pooled descriptors,
    summed and squashed by a sigmoid.
    """
    def __init__(self, channels: int, reduction=4) -> None:
        super().__init__()
        hidden = max(1, channels // reduction)
        self.mlp = nn.Sequential(
            nn.Conv2d(channels, hidden, 1),
            nn.GELU(),
            nn.Conv2d(hidden, channels, 1),
        )

    def gates(self, x: torch.Tensor) -> torch.Tensor:
        avg = F.adaptive_avg_pool2d(x, 1)
        max_ = F.adaptive_max_pool2d(x, 1)
        return torch.sigmoid(self.mlp(avg) + self.mlp(max_))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.gates(x) * x

    def extra_macs(self, inputs: Tuple[torch.Tensor, ...], output: torch.Tensor) -> int:
        # gating multiply
        return output[0].numel()


class CrossAttention(nn.Module):
    """Multi-head cross-attention from feature-map queries to context tokens.

    Queries come from a B×C×H×W map, keys and values from a B×C_ctx×h×w context map pooled
    to at most ``grid``×``grid`` tokens. The attended values are projected back and added to
    the query stream.
    """
    def __init__(self, dim: int, context_dim: int, heads=2, grid=4) -> None:
        super().__init__()
        if heads < 1 or dim % heads:
            raise ConfigError(f"Head count ({heads}) must divide the embedding width ({dim})")
        self.dim, self.heads, self.grid = dim, heads, grid
        self.query = nn.Linear(dim, dim)
        self.key = nn.Linear(context_dim, dim)
        self.value = nn.Linear(context_dim, dim)
        self.out = nn.Linear(dim, dim, bias=False)

    def tokens(self, context: torch.Tensor) -> torch.Tensor:
        h, w = context.shape[-2:]
        context = F.adaptive_avg_pool2d(context, (min(h, self.grid), min(w, self.grid)))
        return context.flatten(2).transpose(1, 2)

    def attend(self, queries: torch.Tensor, tokens: torch.Tensor) -> torch.Tensor:
        """Attend B×Nq×C query tokens to B×Nk×C_ctx context tokens (no residual).
        """
        b, nq, _ = queries.shape
        nk = tokens.shape[1]
        dh = self.dim // self.heads
        q = self.query(queries).view(b, nq, self.heads, dh).transpose(1, 2)
        k = self.key(tokens).view(b, nk, self.heads, dh).transpose(1, 2)
        v = self.value(tokens).view(b, nk, self.heads, dh).transpose(1, 2)
        weights = torch.softmax(q @ k.transpose(-2, -1) / math.sqrt(dh), dim=-1)
        mixed = (weights @ v).transpose(1, 2).reshape(b, nq, self.dim)
        return self.out(mixed)

    def forward(self, x: torch.Tensor, context: torch.Tensor) -> torch.Tensor:
        b, c, h, w = x.shape
        if c != self.dim:
            raise ShapeError(f"Expected {self.dim} query channels, got: {c}")
        queries = x.flatten(2).transpose(1, 2)
        attended = self.attend(queries, self.tokens(context))
        return x + attended.transpose(1, 2).reshape(b, c, h, w)

    def extra_macs(self, inputs: Tuple[torch.Tensor, ...], output: torch.Tensor) -> int:
        queries = output.shape[-1] * output.shape[-2]
        h, w = inputs[1].shape[-2:]
        context_tokens = min(h, self.grid) * min(w, self.grid)
        # q·kᵀ and weights·v over all heads
        return 2 * queries * context_tokens * self.dim

