"""

    rln2.metrics.py
    ~~~~~~~~~~~~~~~
    Restoration fidelity metrics: PSNR and SSIM, plus a plugin registry for further
    (e.g. perceptual) metrics.

    @author: z33k

"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import ndimage
from skimage.metrics import structural_similarity

from rln2.constants import Json, PathLike, PSNR_CAP, SSIM_K1, SSIM_K2, SSIM_MODE, SSIM_SIGMA, \
    SSIM_WINDOW
from rln2.imaging.plane import ImagePlane
from rln2.utils import ConfigError, ShapeError, getdir, to_kv_text, type_checker

_log = logging.getLogger(__name__)

MetricFunction = Callable[[ImagePlane, ImagePlane], float]
METRIC_PLUGINS: Dict[str, MetricFunction] = {}
_BUILTIN = ("psnr", "ssim")


def register_metric(name: str, fn: MetricFunction) -> None:
    """Register ``fn(pred, ref) -> float`` under ``name`` for use in ``evaluate_pairs()``.
    """
    if name in _BUILTIN or name in METRIC_PLUGINS:
        raise ConfigError(f"Metric {name!r} is already registered")
    if not callable(fn):
        raise ConfigError(f"Metric {name!r} isn't callable")
    METRIC_PLUGINS[name] = fn


def _check_pair(pred: ImagePlane, ref: ImagePlane) -> None:
    if pred.shape != ref.shape:
        raise ShapeError(f"Compared images differ in shape: {pred.shape} vs {ref.shape}")


def _check_ssim_size(img: ImagePlane) -> None:
    if img.height < SSIM_WINDOW or img.width < SSIM_WINDOW:
        raise ShapeError(f"SSIM needs images of at least {SSIM_WINDOW}×{SSIM_WINDOW}, got: "
                         f"{img.height}×{img.width}")


@type_checker(ImagePlane, ImagePlane)
def psnr(pred: ImagePlane, ref: ImagePlane, peak=1.0) -> float:
    """Return 10·log10(peak² / MSE) in dB, ``PSNR_CAP`` for identical images.
    """
    _check_pair(pred, ref)
    if peak <= 0:
        raise ValueError(f"Peak must be positive, got: {peak}")
    mse = float(np.mean((pred.data - ref.data) ** 2))
    if mse == 0:
        return PSNR_CAP
    return min(10.0 * math.log10(peak ** 2 / mse), PSNR_CAP)


def _gaussian_window() -> np.ndarray:
    r = SSIM_WINDOW // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-x ** 2 / (2 * SSIM_SIGMA ** 2))
    return g / g.sum()


def _local_mean(plane: np.ndarray) -> np.ndarray:
    # separable Gaussian, valid region only
    g = _gaussian_window()
    out = ndimage.correlate1d(plane, g, axis=0, mode="reflect")
    out = ndimage.correlate1d(out, g, axis=1, mode="reflect")
    r = SSIM_WINDOW // 2
    return out[r:-r, r:-r]


@type_checker(ImagePlane, ImagePlane)
def ssim_components(pred: ImagePlane, ref: ImagePlane,
                    data_range=1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Return the luminance and contrast-structure SSIM maps, each (H-10)×(W-10)×C.

    Their product averaged over pixels and channels equals ``ssim()``.
    """
    _check_pair(pred, ref)
    _check_ssim_size(pred)
    c1, c2 = (SSIM_K1 * data_range) ** 2, (SSIM_K2 * data_range) ** 2
    lum, cs = [], []
    for ch in range(pred.channels):
        x, y = pred.data[..., ch], ref.data[..., ch]
        mu_x, mu_y = _local_mean(x), _local_mean(y)
        var_x = _local_mean(x * x) - mu_x * mu_x
        var_y = _local_mean(y * y) - mu_y * mu_y
        cov = _local_mean(x * y) - mu_x * mu_y
        lum.append((2 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1))
        cs.append((2 * cov + c2) / (var_x + var_y + c2))
    return np.stack(lum, axis=-1), np.stack(cs, axis=-1)


@type_checker(ImagePlane, ImagePlane)
def ssim(pred: ImagePlane, ref: ImagePlane, data_range=1.0) -> float:
    """Return mean SSIM (11×11 Gaussian window, σ=1.5, K1=0.01, K2=0.03) averaged over channels.
    """
    _check_pair(pred, ref)
    _check_ssim_size(pred)
    return float(structural_similarity(
        pred.data, ref.data, data_range=data_range, channel_axis=-1, gaussian_weights=True,
        sigma=SSIM_SIGMA, use_sample_covariance=False, K1=SSIM_K1, K2=SSIM_K2))


@dataclass
class SampleScore:
    sample_id: str
    psnr: float
    ssim: float
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def as_dict(self) -> Json:
        return {"sample_id": self.sample_id, "psnr": self.psnr, "ssim": self.ssim, **self.extra}


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float
    sample_count: int
    per_sample: List[SampleScore] = field(default_factory=list)
    label: str = "model"
    ssim_mode: str = SSIM_MODE
    extra: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_scores(cls, scores: Sequence[SampleScore], label="model") -> "MetricReport":
        """Aggregate ``scores`` as arithmetic means.
        """
        if not scores:
            return cls(float("nan"), float("nan"), 0, [], label)
        extra_names = sorted(set().union(*(s.extra for s in scores)))
        extra = {name: float(np.mean([s.extra[name] for s in scores if name in s.extra]))
                 for name in extra_names}
        return cls(float(np.mean([s.psnr for s in scores])),
                   float(np.mean([s.ssim for s in scores])),
                   len(scores), list(scores), label, extra=extra)

    @property
    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([s.as_dict for s in self.per_sample],
                            columns=["sample_id", "psnr", "ssim", *sorted(self.extra)])

    @property
    def summary(self) -> Json:
        return {
            "label": self.label,
            "psnr_db": self.psnr_db,
            "ssim": self.ssim,
            "sample_count": self.sample_count,
            "ssim_mode": self.ssim_mode,
            **{f"extra.{k}": v for k, v in self.extra.items()},
        }

    @property
    def as_dict(self) -> Json:
        return {**self.summary, "per_sample": [s.as_dict for s in self.per_sample]}

    @classmethod
    def from_dict(cls, data: Json) -> "MetricReport":
        per_sample = []
        for row in data.get("per_sample", []):
            row = dict(row)
            per_sample.append(SampleScore(row.pop("sample_id"), row.pop("psnr"),
                                          row.pop("ssim"), row))
        extra = {k[len("extra."):]: v for k, v in data.items() if k.startswith("extra.")}
        return cls(data["psnr_db"], data["ssim"], data["sample_count"], per_sample,
                   data.get("label", "model"), data.get("ssim_mode", SSIM_MODE), extra)

    def to_kv_text(self) -> str:
        return f"# ssim_mode: {self.ssim_mode}\n" + to_kv_text(self.summary)

    def to_csv(self, path: PathLike) -> Path:
        dest = Path(path)
        getdir(dest.parent)
        self.frame.to_csv(dest, index=False)
        return dest


def score_pair(sample_id: str, pred: ImagePlane, ref: ImagePlane,
               plugins: Iterable[str] = ()) -> SampleScore:
    extra = {}
    for name in plugins:
        if name not in METRIC_PLUGINS:
            raise ConfigError(f"Unknown metric plugin: {name!r}")
        extra[name] = float(METRIC_PLUGINS[name](pred, ref))
    return SampleScore(sample_id, psnr(pred, ref), ssim(pred, ref), extra)


def evaluate_pairs(pairs: Sequence[Tuple[str, ImagePlane, ImagePlane]], label="model",
                   plugins: Iterable[str] = (), workers: Optional[int] = None) -> MetricReport:
    """Score (sample id, prediction, reference) ``pairs`` in parallel and aggregate.
    """
    plugins = tuple(plugins)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        scores = list(executor.map(lambda p: score_pair(*p, plugins=plugins), pairs))
    report = MetricReport.from_scores(scores, label)
    _log.info(f"{label}: PSNR {report.psnr_db:.3f} dB, SSIM {report.ssim:.4f} over "
              f"{report.sample_count} sample(s)")
    return report
