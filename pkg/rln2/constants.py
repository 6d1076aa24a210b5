"""

    rln2.constants.py
    ~~~~~~~~~~~~~~~~~
    Project's constants

    @author: z33k

"""
from pathlib import Path
from typing import Any, Callable, Dict, Tuple

# type hints
Json = Dict[str, Any]
PathLike = str | Path
Method = Callable[[Any, Tuple[Any, ...]], Any]  # method with signature def methodname(self, *args)
Function = Callable[[Tuple[Any, ...]], Any]  # function with signature def funcname(*args)
Size = Tuple[int, int]  # (height, width)

FILENAME_TIMESTAMP_FORMAT = "%Y%m%d_%H%M%S"

OUTPUT_DIR = Path("temp") / "runs"
LOG_DIR = Path("temp") / "logs"
DATA_ROOT_ENV = "RLN2_DATA_ROOT"

# colorspace
HUE_PERIOD = 360.0  # degrees
# D65 reference white for sRGB-derived XYZ (row sums of the sRGB->XYZ matrix)
D65_WHITE = (0.95047, 1.0, 1.08883)
SRGB_TO_XYZ = (
    (0.4124564, 0.3575761, 0.1804375),
    (0.2126729, 0.7151522, 0.0721750),
    (0.0193339, 0.1191920, 0.9503041),
)

# retinex
LUMINANCE_EPS = 1e-4

# metrics
PSNR_CAP = 99.0  # dB, reported for exact matches
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1, SSIM_K2 = 0.01, 0.03
SSIM_MODE = "rgb-channel-mean"

# training
DEFAULT_LR = 2e-4
DEFAULT_CLIP = 0.01  # L1 norm
# clipped gradients sit far below the customary 1e-8 per element
DEFAULT_ADAM_EPS = 1e-12
DEFAULT_COSINE_PERIODS = 2
DEFAULT_PATCH_SCHEDULE = ((0, 32), (2000, 64), (4000, 128))

# model
CHECKPOINT_HEADER = "rln2-ckpt-v1"
MAC_REPORT_PATCH = 128

# synthetic data
GENERATOR_VERSION = "rln2-synth-v1"
LIGHT_INTENSITY_RANGE = (0.3, 1.0)
MAX_LIGHTS = 3
ALBEDO_RANGE = (0.05, 0.95)
SPLITS = ("train", "val", "test")
INPUT_DIR, WHITE_DIR, GT_DIR, META_DIR = "input", "white", "gt", "meta"
AMBIENT_LEVEL = 0.8
SPLIT_RATIOS = (0.8, 0.1, 0.1)  # train, val, test
DEFAULT_RESOLUTION = (64, 64)
