"""

    rln2.data.__init__.py
    ~~~~~~~~~~~~~~~~~~~~~
    Synthetic triplet generation and dataset I/O.

    @author: z33k

"""
from rln2.data.triplet import LightSpec, SceneTriplet
from rln2.data.dataset import load_dataset, sample_ids, save_triplet
from rln2.data.synth import SceneGeometry, assign_splits, generate_scene, hue_modes, \
    random_lights, render_triplet, shadow_mask, split_sizes, synthesize_dataset, synthesize_scene
