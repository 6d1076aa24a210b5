"""

    rln2.nn.__init__.py
    ~~~~~~~~~~~~~~~~~~~
    The lighting-normalization network, its building blocks, checkpoints and complexity accounting.

    @author: z33k

"""
from rln2.nn.attention import CDFFA, ChannelAttention, CrossAttention, RelevanceWeights, \
    cdffa_fuse, similarity
from rln2.nn.blocks import GatedConvBlock, WideContextExtractor, wide_context_features
from rln2.nn.model import ModelConfig, Rln2, Rln2Output, build, param_count
from rln2.nn.checkpoint import Checkpoint, load_checkpoint, load_model, save_checkpoint
from rln2.nn.macs import MacReport, count_macs, count_module_macs
