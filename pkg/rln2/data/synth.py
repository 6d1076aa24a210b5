"""

    rln2.data.synth.py
    ~~~~~~~~~~~~~~~~~~
    Procedural scenes lit by colored directional lights.

    Each scene is a height field (cluttered with boxes and domes) carrying an albedo, per-pixel
    normals and a roughness map. A triplet renders the scene three ways: under colored
    lights, under the same lights with their saturation dropped, and under uniform ambient
    light (shadow-free by construction).

    Coordinates: x grows along columns, y along rows, z points up out of the image plane.

    @author: z33k

"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import ndimage

from rln2.constants import ALBEDO_RANGE, AMBIENT_LEVEL, DEFAULT_RESOLUTION, GENERATOR_VERSION, \
    LIGHT_INTENSITY_RANGE, MAX_LIGHTS, SPLIT_RATIOS, SPLITS, Size
from rln2.data.triplet import LightSpec, SceneTriplet
from rln2.imaging.colorspace import hue_of
from rln2.imaging.plane import ImagePlane
from rln2.utils import ConfigError, RangeError, ShapeError, timed, type_checker

_log = logging.getLogger(__name__)

MIN_RESOLUTION = 32
SPECULAR_WEIGHT = 0.25
_SHADOW_BIAS = 1e-3


@dataclass
class SceneGeometry:
    height: np.ndarray  # H×W, in pixel units
    albedo: np.ndarray  # H×W×3, within ALBEDO_RANGE
    normals: np.ndarray  # H×W×3, unit length
    roughness: np.ndarray  # H×W, in (0, 1]
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        h, w = self.height.shape
        if self.albedo.shape != (h, w, 3) or self.normals.shape != (h, w, 3) \
                or self.roughness.shape != (h, w):
            raise ShapeError(f"Scene maps don't align with the {h}×{w} height field")

    @property
    def resolution(self) -> Size:
        return self.height.shape

    @classmethod
    def from_height(cls, height: np.ndarray, albedo: np.ndarray,
                    roughness: Optional[np.ndarray] = None,
                    seed: Optional[int] = None) -> "SceneGeometry":
        """Derive normals from the height field's gradient.
        """
        height = np.asarray(height, dtype=np.float64)
        albedo = np.asarray(albedo, dtype=np.float64)
        if albedo.ndim == 1:
            albedo = np.broadcast_to(albedo, height.shape + (3,)).copy()
        gy, gx = np.gradient(height)
        normals = np.stack([-gx, -gy, np.ones_like(height)], axis=-1)
        normals /= np.linalg.norm(normals, axis=-1, keepdims=True)
        if roughness is None:
            roughness = np.full(height.shape, 0.5)
        return cls(height, albedo, normals, np.asarray(roughness, dtype=np.float64), seed)


@type_checker(int, tuple)
def generate_scene(seed: int, resolution: Size) -> SceneGeometry:
    """Generate a cluttered procedural scene, deterministic in ``seed``.

    Args:
        seed: RNG seed
        resolution: (height, width), both at least 32

    Returns:
        the scene geometry
    """
    h, w = resolution
    if h < MIN_RESOLUTION or w < MIN_RESOLUTION:
        raise ShapeError(f"Scene resolution must be at least {MIN_RESOLUTION}×{MIN_RESOLUTION}, "
                         f"got: {h}×{w}")
    rng = np.random.default_rng(seed)
    lo, hi = ALBEDO_RANGE
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)

    height = np.zeros((h, w))
    albedo = np.broadcast_to(rng.uniform(0.3, 0.8, size=3), (h, w, 3)).copy()
    roughness = np.full((h, w), rng.uniform(0.3, 0.9))
    size = min(h, w)
    for _ in range(int(rng.integers(3, 8))):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        radius = rng.uniform(0.08, 0.22) * size
        peak = rng.uniform(0.1, 0.3) * size
        if rng.random() < 0.5:
            r2 = ((ys - cy) ** 2 + (xs - cx) ** 2) / radius ** 2
            obj = peak * np.sqrt(np.clip(1.0 - r2, 0.0, None))
        else:
            aspect = rng.uniform(0.5, 1.5)
            inside = (np.abs(ys - cy) < radius) & (np.abs(xs - cx) < radius * aspect)
            obj = np.where(inside, peak, 0.0)
        on_top = obj > height
        height = np.where(on_top, obj, height)
        albedo[on_top] = rng.uniform(lo, hi, size=3)
        roughness[on_top] = rng.uniform(0.1, 0.9)

    height = ndimage.gaussian_filter(height, sigma=1.0)
    texture = ndimage.gaussian_filter(rng.standard_normal((h, w)), sigma=2.0)
    texture /= max(float(np.abs(texture).max()), 1e-12)
    albedo = np.clip(albedo * (1.0 + 0.15 * texture[..., None]), lo, hi)
    _log.debug(f"Generated scene {seed} at {h}×{w}")
    return SceneGeometry.from_height(height, albedo, roughness, seed=seed)


def random_lights(rng: np.random.Generator, count: int) -> List[LightSpec]:
    """Sample ``count`` lights: elevation 25°-80°, any azimuth, intensity in the capture range,
    any hue, saturation 0.4-1.
    """
    if not 1 <= count <= MAX_LIGHTS:
        raise ConfigError(f"Light count must lie in [1, {MAX_LIGHTS}], got: {count}")
    lights = []
    for _ in range(count):
        azimuth = rng.uniform(0.0, 2 * math.pi)
        elevation = math.radians(rng.uniform(25.0, 80.0))
        direction = (math.cos(elevation) * math.cos(azimuth),
                     math.cos(elevation) * math.sin(azimuth), math.sin(elevation))
        lights.append(LightSpec(direction, float(rng.uniform(*LIGHT_INTENSITY_RANGE)),
                                float(rng.uniform(0.0, 360.0)) % 360.0,
                                float(rng.uniform(0.4, 1.0))))
    return lights


def shadow_mask(height: np.ndarray, direction: Sequence[float], step=0.5) -> np.ndarray:
    """Return a boolean H×W mask of pixels that see the light along ``direction``.

    A ray is marched from every pixel toward the light over the bilinearly sampled height
    field; a pixel is shadowed when the terrain rises above the ray anywhere along it.
    """
    dx, dy, dz = direction
    h, w = height.shape
    if dz <= 0:
        return np.zeros((h, w), dtype=bool)
    horizontal = math.hypot(dx, dy)
    if horizontal < 1e-12:
        return np.ones((h, w), dtype=bool)
    ux, uy, slope = dx / horizontal, dy / horizontal, dz / horizontal
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    lit = np.ones((h, w), dtype=bool)
    top = float(height.max())
    for t in np.arange(step, math.hypot(h, w), step):
        px, py = xs + ux * t, ys + uy * t
        ray = height + slope * t
        active = (px > -0.5) & (px < w - 0.5) & (py > -0.5) & (py < h - 0.5) \
            & (ray <= top) & lit
        if not active.any():
            break
        terrain = ndimage.map_coordinates(height, [py[active], px[active]], order=1,
                                          mode="nearest")
        blocked = terrain > ray[active] + _SHADOW_BIAS
        idx = np.flatnonzero(active)[blocked]
        lit.flat[idx] = False
    return lit


def _shade(geom: SceneGeometry, lights: Sequence[LightSpec], masks: Dict[tuple, np.ndarray],
           specular: bool) -> np.ndarray:
    out = np.zeros(geom.albedo.shape)
    view = np.array([0.0, 0.0, 1.0])
    for light in lights:
        d = np.asarray(light.direction)
        cos = np.clip(geom.normals @ d, 0.0, None)
        if light.direction in masks:
            cos = cos * masks[light.direction]
        out += geom.albedo * light.rgb * cos[..., None]
        if specular:
            half = (d + view) / np.linalg.norm(d + view)
            shininess = 2.0 / np.maximum(geom.roughness, 0.05) ** 2
            lobe = np.clip(geom.normals @ half, 0.0, None) ** shininess * (cos > 0)
            out += SPECULAR_WEIGHT * light.rgb * lobe[..., None]
    return np.clip(out, 0.0, 1.0)


def render_triplet(geom: SceneGeometry, lights: Sequence[LightSpec], ambient_level: float,
                   specular=False, shadows=True, scene_id="scene", sample_id="0",
                   seed: Optional[int] = None) -> SceneTriplet:
    """Render the colored-light, white-light and ambient images of ``geom``.

    Per light, a pixel receives albedo ⊙ light color · max(0, n·d), gated by a hard shadow
    test unless ``shadows`` is off. The white-light image uses the same lights with zero
    saturation. The ambient image is albedo · ``ambient_level``.

    Raises:
        ConfigError: on zero or more than three lights
    """
    if not 1 <= len(lights) <= MAX_LIGHTS:
        raise ConfigError(f"A triplet needs 1 to {MAX_LIGHTS} lights, got: {len(lights)}")
    if not 0.0 <= ambient_level <= 1.0:
        raise RangeError(f"Ambient level must lie in [0, 1], got: {ambient_level}")
    masks = {}
    if shadows:
        for light in lights:
            if light.direction not in masks:
                masks[light.direction] = shadow_mask(geom.height, light.direction)
    color_lit = _shade(geom, lights, masks, specular)
    white_lit = _shade(geom, [light.white() for light in lights], masks, specular)
    ambient = np.clip(geom.albedo * ambient_level, 0.0, 1.0)
    return SceneTriplet(ImagePlane(color_lit), ImagePlane(white_lit), ImagePlane(ambient),
                        list(lights), scene_id, sample_id,
                        seed=geom.seed if seed is None else seed,
                        generator=GENERATOR_VERSION)


@type_checker(ImagePlane)
def hue_modes(img: ImagePlane, bins=36, min_fraction=0.05, min_saturation=0.1) -> int:
    """Count the modes of the hue histogram of ``img``.

    Pixels with saturation at or below ``min_saturation`` are ignored. A bin is populated when
    it holds at least ``min_fraction`` of the remaining pixels; modes are circular runs of
    populated bins.
    """
    hue = hue_of(img.data, min_saturation)
    hue = hue[~np.isnan(hue)]
    if hue.size == 0:
        return 0
    hist, _ = np.histogram(hue, bins=bins, range=(0.0, 360.0))
    populated = hist / hue.size >= min_fraction
    if populated.all():
        return 1
    return int(np.sum(populated & ~np.roll(populated, 1)))


def split_sizes(count: int, ratios: Sequence[float] = SPLIT_RATIOS) -> Dict[str, int]:
    """Return scene counts per split: validation and test get their rounded shares, training
    the rest.
    """
    if len(ratios) != len(SPLITS) or any(r < 0 for r in ratios) or not math.isclose(
            sum(ratios), 1.0):
        raise ConfigError(f"Split ratios must be {len(SPLITS)} non-negative shares summing to 1, "
                          f"got: {ratios}")
    if count < 1:
        raise ConfigError(f"Scene count must be positive, got: {count}")
    val, test = round(count * ratios[1]), round(count * ratios[2])
    return {"train": count - val - test, "val": val, "test": test}


def assign_splits(count: int, seed: int,
                  ratios: Sequence[float] = SPLIT_RATIOS) -> Dict[str, List[int]]:
    """Assign scene indices to splits (every scene lands in exactly one split).
    """
    sizes = split_sizes(count, ratios)
    order = np.random.default_rng(seed).permutation(count).tolist()
    splits, start = {}, 0
    for split in SPLITS:
        splits[split] = sorted(order[start:start + sizes[split]])
        start += sizes[split]
    return splits


def scene_id(index: int) -> str:
    return f"scene{index:04d}"


def synthesize_scene(index: int, seed: int, resolution: Size = DEFAULT_RESOLUTION,
                     lights_per_scene=MAX_LIGHTS, samples_per_scene=1,
                     ambient_level=AMBIENT_LEVEL) -> List[SceneTriplet]:
    """Render ``samples_per_scene`` lightings of scene ``index`` of a dataset seeded with
    ``seed``; each lighting has 1 to ``lights_per_scene`` lights.
    """
    if not 1 <= lights_per_scene <= MAX_LIGHTS:
        raise ConfigError(f"Lights per scene must lie in [1, {MAX_LIGHTS}], got: "
                          f"{lights_per_scene}")
    if samples_per_scene < 1:
        raise ConfigError(f"Samples per scene must be positive, got: {samples_per_scene}")
    seq = np.random.SeedSequence([seed, index])
    scene_seed = int(seq.generate_state(1)[0])
    geom = generate_scene(scene_seed, tuple(resolution))
    rng = np.random.default_rng(seq)
    triplets = []
    for sample in range(samples_per_scene):
        lights = random_lights(rng, int(rng.integers(1, lights_per_scene + 1)))
        triplets.append(render_triplet(geom, lights, ambient_level, scene_id=scene_id(index),
                                       sample_id=f"{sample:02d}", seed=scene_seed))
    return triplets


@timed("synthetic dataset rendering")
def synthesize_dataset(count: int, seed: int, resolution: Size = DEFAULT_RESOLUTION,
                       lights_per_scene=MAX_LIGHTS, samples_per_scene=1,
                       ratios: Sequence[float] = SPLIT_RATIOS, ambient_level=AMBIENT_LEVEL,
                       workers: Optional[int] = None) -> Dict[str, List[SceneTriplet]]:
    """Render a scene-disjoint synthetic dataset, scenes in parallel.
    """
    splits = assign_splits(count, seed, ratios)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        rendered = dict(zip(range(count), executor.map(
            lambda i: synthesize_scene(i, seed, resolution, lights_per_scene, samples_per_scene,
                                       ambient_level),
            range(count))))
    return {split: [t for i in indices for t in rendered[i]] for split, indices in splits.items()}
