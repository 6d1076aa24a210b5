"""

    tests.test_synth.py
    ~~~~~~~~~~~~~~~~~~~

    @author: z33k

"""
import math

import numpy as np
import pytest

from rln2.constants import ALBEDO_RANGE
from rln2.data.synth import SceneGeometry, assign_splits, generate_scene, hue_modes, \
    random_lights, render_triplet, shadow_mask, split_sizes, synthesize_dataset, synthesize_scene
from rln2.data.triplet import LightSpec, SceneTriplet
from rln2.imaging.colorspace import rgb_to_hsv
from rln2.imaging.plane import ImagePlane
from rln2.utils import ConfigError, RangeError, ShapeError


def _light(elevation_deg: float, azimuth_deg=0.0, intensity=1.0, hue=0.0,
           saturation=0.0) -> LightSpec:
    el, az = math.radians(elevation_deg), math.radians(azimuth_deg)
    return LightSpec((math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)),
                     intensity, hue, saturation)


def _ridge(albedo=(0.7, 0.5, 0.5)) -> SceneGeometry:
    xs = np.arange(64, dtype=np.float64)
    height = np.broadcast_to(np.maximum(0.0, 20.0 - np.abs(xs - 32.0)), (32, 64)).copy()
    return SceneGeometry.from_height(height, np.array(albedo))


class TestLightSpec:
    def test_direction_is_normalized(self):
        light = LightSpec((0.0, 3.0, 4.0), 0.5, 10.0, 0.5)
        assert light.direction == pytest.approx((0.0, 0.6, 0.8))

    @pytest.mark.parametrize("intensity, hue, saturation", [
        (0.2, 0.0, 0.0), (1.1, 0.0, 0.0), (0.5, 360.0, 0.0), (0.5, 0.0, 1.5)])
    def test_out_of_range(self, intensity, hue, saturation):
        with pytest.raises(RangeError):
            LightSpec((0.0, 0.0, 1.0), intensity, hue, saturation)

    def test_zero_direction(self):
        with pytest.raises(ConfigError):
            LightSpec((0.0, 0.0, 0.0), 0.5, 0.0, 0.0)

    def test_rgb(self):
        assert np.allclose(_light(90, hue=120.0, saturation=1.0, intensity=0.5).rgb,
                           [0.0, 0.5, 0.0])
        assert np.allclose(_light(90, intensity=0.4).rgb, [0.4, 0.4, 0.4])

    def test_dict_round_trip(self):
        light = _light(40, azimuth_deg=30, intensity=0.7, hue=200.0, saturation=0.6)
        assert LightSpec.from_dict(light.as_dict) == light

    def test_white_keeps_direction(self):
        light = _light(33, azimuth_deg=71, intensity=0.5, hue=10.0, saturation=0.9)
        assert light.white().direction == light.direction
        assert light.white().saturation == 0.0


class TestGenerateScene:
    def test_deterministic(self):
        a, b = generate_scene(5, (48, 40)), generate_scene(5, (48, 40))
        assert np.array_equal(a.height, b.height) and np.array_equal(a.albedo, b.albedo)
        assert not np.array_equal(a.height, generate_scene(6, (48, 40)).height)

    def test_albedo_range(self):
        lo, hi = ALBEDO_RANGE
        for seed in range(5):
            albedo = generate_scene(seed, (32, 32)).albedo
            assert albedo.min() >= lo and albedo.max() <= hi

    def test_unit_normals(self):
        normals = generate_scene(1, (40, 32)).normals
        assert np.allclose(np.linalg.norm(normals, axis=-1), 1.0, atol=1e-6)
        assert normals.shape == (40, 32, 3)

    def test_too_small(self):
        with pytest.raises(ShapeError):
            generate_scene(0, (31, 64))

    def test_type_checked(self):
        with pytest.raises(TypeError):
            generate_scene(0, [32, 32])


class TestShadowMask:
    def test_overhead_light_lights_everything(self):
        assert shadow_mask(_ridge().height, (0.0, 0.0, 1.0)).all()

    def test_ridge_casts_shadow_away_from_light(self):
        lit = shadow_mask(_ridge().height, _light(20).direction)
        # light from +x: the flat ground left of the ridge lies in its shadow
        assert not lit[:, :12].any()
        assert lit[:, 40:].all()

    def test_light_below_horizon(self):
        assert not shadow_mask(np.zeros((4, 4)), (1.0, 0.0, -0.1)).any()


class TestRenderTriplet:
    def test_shapes_and_range(self):
        geom = generate_scene(2, (32, 48))
        triplet = render_triplet(geom, random_lights(np.random.default_rng(0), 3), 0.8)
        for img in (triplet.color_lit, triplet.white_lit, triplet.ambient):
            assert img.shape == (32, 48, 3)
            assert img.data.min() >= 0.0 and img.data.max() <= 1.0

    def test_unsaturated_lights_make_color_equal_white(self):
        geom = generate_scene(3, (32, 32))
        lights = [_light(50, 10, 0.6, hue=100.0), _light(35, 200, 0.9, hue=300.0)]
        triplet = render_triplet(geom, lights, 0.8)
        assert np.array_equal(triplet.color_lit.data, triplet.white_lit.data)

    def test_calibration_against_ambient(self, flat_geometry):
        triplet = render_triplet(flat_geometry, [_light(90)], 1.0)
        assert np.array_equal(triplet.color_lit.data, triplet.ambient.data)

    def test_red_light_hue(self):
        geom = SceneGeometry.from_height(np.zeros((32, 32)), np.array([0.9, 0.9, 0.9]))
        triplet = render_triplet(geom, [_light(60, 45, 0.8, hue=0.0, saturation=1.0)], 0.8)
        expected = 0.9 * 0.8 * math.sin(math.radians(60))
        assert np.allclose(triplet.color_lit.data[..., 0], expected)
        maps = rgb_to_hsv(triplet.color_lit)
        assert np.all(maps.hue == 0.0) and np.all(maps.saturation == 1.0)

    def test_ambient_is_uniform_albedo_scaling(self):
        geom = generate_scene(4, (32, 32))
        triplet = render_triplet(geom, [_light(45)], 0.8)
        assert np.allclose(triplet.ambient.data, geom.albedo * 0.8)

    def test_shadows_never_brighten(self):
        geom = generate_scene(7, (48, 48))
        lights = random_lights(np.random.default_rng(7), 3)
        shadowed = render_triplet(geom, lights, 0.8).color_lit.data
        unshadowed = render_triplet(geom, lights, 0.8, shadows=False).color_lit.data
        assert np.all(shadowed <= unshadowed)
        assert np.any(shadowed < unshadowed)

    def test_specular_only_adds(self):
        geom = generate_scene(8, (32, 32))
        lights = [_light(70, 30, 0.9, hue=30.0, saturation=0.5)]
        plain = render_triplet(geom, lights, 0.8).color_lit.data
        glossy = render_triplet(geom, lights, 0.8, specular=True).color_lit.data
        assert np.all(glossy >= plain)

    @pytest.mark.parametrize("count", [0, 4])
    def test_light_count(self, flat_geometry, count):
        with pytest.raises(ConfigError):
            render_triplet(flat_geometry, [_light(60)] * count, 0.8)

    def test_ambient_level_range(self, flat_geometry):
        with pytest.raises(RangeError):
            render_triplet(flat_geometry, [_light(60)], 1.2)

    def test_deterministic(self):
        a = synthesize_scene(3, seed=9, resolution=(32, 32), samples_per_scene=2)
        b = synthesize_scene(3, seed=9, resolution=(32, 32), samples_per_scene=2)
        for x, y in zip(a, b):
            assert np.array_equal(x.color_lit.data, y.color_lit.data)
            assert x.lights == y.lights and x.id == y.id


class TestHueModes:
    def test_two_colored_lights_vs_ambient(self):
        geom = _ridge()
        lights = [_light(20, 0, hue=0.0, saturation=1.0),
                  _light(20, 180, hue=240.0, saturation=1.0)]
        triplet = render_triplet(geom, lights, 0.8)
        assert hue_modes(triplet.color_lit) >= 2
        assert hue_modes(triplet.ambient) == 1

    def test_grey_image_has_no_modes(self):
        assert hue_modes(ImagePlane(np.full((4, 4, 3), 0.5))) == 0


class TestSplits:
    @pytest.mark.parametrize("count, expected", [
        (20, (16, 2, 2)), (60, (48, 6, 6)), (10, (8, 1, 1)), (1, (1, 0, 0))])
    def test_sizes(self, count, expected):
        sizes = split_sizes(count)
        assert (sizes["train"], sizes["val"], sizes["test"]) == expected

    def test_scene_disjoint_cover(self):
        splits = assign_splits(30, seed=4)
        indices = [i for split in splits.values() for i in split]
        assert sorted(indices) == list(range(30))

    def test_invalid_ratios(self):
        with pytest.raises(ConfigError):
            split_sizes(10, (0.5, 0.5, 0.5))

    def test_dataset_keeps_scenes_together(self):
        dataset = synthesize_dataset(10, seed=1, resolution=(32, 32), samples_per_scene=2,
                                     workers=2)
        scenes = {split: {t.scene_id for t in triplets} for split, triplets in dataset.items()}
        assert sum(len(t) for t in dataset.values()) == 20
        assert not scenes["train"] & scenes["val"]
        assert not scenes["train"] & scenes["test"]
        assert not scenes["val"] & scenes["test"]


def test_triplet_requires_alignment():
    a, b = ImagePlane(np.zeros((4, 4, 3))), ImagePlane(np.zeros((4, 5, 3)))
    with pytest.raises(ShapeError):
        SceneTriplet(a, a, b)
