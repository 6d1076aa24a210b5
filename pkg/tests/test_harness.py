"""

    tests.test_harness.py
    ~~~~~~~~~~~~~~~~~~~~~

    @author: z33k

"""
import json
from types import SimpleNamespace

import numpy as np
import pandas as pd
import pytest

import rln2.harness.cli as cli
import rln2.harness.commands as commands
from rln2.data.dataset import load_dataset
from rln2.harness.commands import cmd_ablate, cmd_eval, cmd_generate, cmd_infer, cmd_macs, \
    cmd_train
from rln2.harness.manifest import DatasetDescriptor, ExperimentManifest
from rln2.imaging.plane import ImagePlane, read_png, write_png
from rln2.metrics import psnr
from rln2.nn.checkpoint import save_checkpoint
from rln2.nn.model import ModelConfig, build
from rln2.training import TrainConfig
from rln2.utils import ConfigError, DataIntegrityError, NumericalError


@pytest.fixture
def manifest(tiny_config, tmp_path) -> ExperimentManifest:
    return ExperimentManifest(
        run_id="smoke",
        model=tiny_config,
        train=TrainConfig(total_steps=4, batch_size=2, patch_schedule=((0, 16),), log_every=0),
        dataset=DatasetDescriptor(count=10, seed=2, resolution=(32, 32)),
        output_dir=str(tmp_path / "runs"),
    )


@pytest.fixture
def identity_checkpoint(tiny_config, tmp_path):
    return save_checkpoint(tmp_path / "identity.pt", build(tiny_config).double())


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    root = tmp_path_factory.mktemp("generated") / "data"
    return cmd_generate(20, seed=3, out=root, resolution=(32, 32))


class TestGenerate:
    def test_split_sizes(self, generated):
        descriptor = json.loads((generated / "dataset.json").read_text(encoding="utf8"))
        assert {k: len(v) for k, v in descriptor["splits"].items()} == {
            "train": 16, "val": 2, "test": 2}
        for split, count in (("train", 16), ("val", 2), ("test", 2)):
            assert len(list((generated / split / "input").glob("*.png"))) == count

    def test_scene_disjoint(self, generated):
        scenes = {split: {p.stem.rpartition("_")[0]
                          for p in (generated / split / "input").glob("*.png")}
                  for split in ("train", "val", "test")}
        assert not scenes["train"] & scenes["val"] and not scenes["val"] & scenes["test"]
        assert not scenes["train"] & scenes["test"]

    def test_every_triplet_loads(self, generated):
        assert sum(len(list(load_dataset(generated, split)))
                   for split in ("train", "val", "test")) == 20

    def test_deterministic(self, generated, tmp_path):
        again = cmd_generate(20, seed=3, out=tmp_path / "again", resolution=(32, 32))
        first = sorted(p.relative_to(generated) for p in generated.rglob("*.png"))
        second = sorted(p.relative_to(again) for p in again.rglob("*.png"))
        assert first == second
        for rel in first:
            assert (generated / rel).read_bytes() == (again / rel).read_bytes()

    def test_refuses_non_empty_directory(self, generated):
        with pytest.raises(ConfigError):
            cmd_generate(2, seed=0, out=generated, resolution=(32, 32))


class TestManifest:
    def test_json_round_trip(self, manifest, tmp_path):
        path = manifest.dump(tmp_path / "manifest.json")
        loaded = ExperimentManifest.load(path)
        assert loaded.as_dict == manifest.as_dict

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf8")
        with pytest.raises(ConfigError):
            ExperimentManifest.load(path)

    def test_missing_run_id(self):
        with pytest.raises(ConfigError):
            ExperimentManifest.from_dict({"model": {}})

    def test_dataset_root_from_environment(self, monkeypatch):
        monkeypatch.setenv("RLN2_DATA_ROOT", "/data/cl3an")
        assert DatasetDescriptor().root == "/data/cl3an"

    def test_dataset_needs_a_source(self, monkeypatch):
        monkeypatch.delenv("RLN2_DATA_ROOT", raising=False)
        with pytest.raises(ConfigError):
            DatasetDescriptor().validate()

    def test_derive(self, manifest):
        derived = manifest.derive("cell", guidance="lab", fusion="concat")
        assert derived.run_id == "cell" and derived.model.guidance == "lab"
        assert manifest.model.guidance == "hsv"


class TestTrain:
    def test_run_directory(self, manifest):
        outcome = cmd_train(manifest)
        run_dir = outcome.run_dir
        for name in ("manifest.json", "history.csv", "last.pt"):
            assert (run_dir / name).is_file()
        assert (run_dir / "eval_val" / "report.txt").is_file()
        history = pd.read_csv(run_dir / "history.csv")
        assert history["step"].tolist() == [0, 1, 2, 3, 4]
        assert history["val_psnr"].iloc[-1] == pytest.approx(outcome.evaluation.model.psnr_db)

    def test_resume_matches_uninterrupted_run(self, manifest):
        full = cmd_train(manifest.derive("full")).history
        cadenced = manifest.derive("resumed")
        cadenced.train = TrainConfig(**{**manifest.train.as_dict, "checkpoint_every": 2})
        run_dir = cmd_train(cadenced).run_dir
        (run_dir / "last.pt").unlink()
        (run_dir / "step_000004.pt").unlink()
        resumed = cmd_train(cadenced, resume=True).history
        assert resumed["loss"].tolist()[:4] == full["loss"].tolist()[:4]

    def test_invalid_config_fails_before_compute(self, manifest):
        broken = manifest.derive("broken", guidance="yuv")
        with pytest.raises(ConfigError):
            cmd_train(broken)
        assert not broken.run_dir.exists()

    def test_errors_carry_run_context(self, manifest, monkeypatch):
        def explode(*args, **kwargs):
            raise NumericalError("loss diverged")

        monkeypatch.setattr(commands.Trainer, "fit", explode)
        with pytest.raises(NumericalError, match="smoke"):
            cmd_train(manifest)


class TestEval:
    def test_identity_model_matches_unprocessed(self, identity_checkpoint, generated, tmp_path):
        report = cmd_eval(identity_checkpoint, generated, "test", out=tmp_path / "report")
        assert report.model.psnr_db == pytest.approx(report.unprocessed.psnr_db, abs=1e-6)
        assert report.model.ssim == pytest.approx(report.unprocessed.ssim, abs=1e-6)
        assert report.gain_db == pytest.approx(0.0, abs=1e-6)
        frame = pd.read_csv(tmp_path / "report" / "model.csv")
        assert len(frame) == report.model.sample_count == 2
        summary = pd.read_csv(tmp_path / "report" / "summary.csv")
        assert summary["method"].tolist()[0] == "unprocessed"

    def test_missing_split(self, identity_checkpoint, tmp_path):
        with pytest.raises(DataIntegrityError):
            cmd_eval(identity_checkpoint, tmp_path, "test")


class TestInfer:
    def test_odd_resolution(self, identity_checkpoint, rng, tmp_path):
        src = write_png(ImagePlane(rng.uniform(size=(129, 97, 3))), tmp_path / "in.png")
        out = cmd_infer(identity_checkpoint, src, tmp_path / "out.png")
        restored = read_png(out)
        assert restored.shape == (129, 97, 3)
        assert psnr(restored, read_png(src)) == 99.0

    def test_tiled(self, identity_checkpoint, rng, tmp_path):
        src = write_png(ImagePlane(rng.uniform(size=(50, 70, 3))), tmp_path / "in.png")
        out = cmd_infer(identity_checkpoint, src, tmp_path / "out.png", tile=32)
        assert np.array_equal(read_png(out).data, read_png(src).data)

    def test_unreadable_image(self, identity_checkpoint, tmp_path):
        src = tmp_path / "broken.png"
        src.write_bytes(b"definitely not a png")
        with pytest.raises(DataIntegrityError):
            cmd_infer(identity_checkpoint, src, tmp_path / "out.png")


class TestAblate:
    def test_two_cells(self, manifest):
        table = cmd_ablate(manifest, [("none", "concat"), ("hsv", "cdffa")], patch=32)
        runs = manifest.run_dir.parent
        assert (runs / "smoke-none-concat").is_dir() and (runs / "smoke-hsv-cdffa").is_dir()
        assert (runs / "smoke-ablation.csv").is_file()
        assert list(table.columns) == ["guidance", "fusion", "gmacs", "psnr", "ssim", "status"]
        assert table["status"].tolist() == ["ok", "ok"]
        assert table["psnr"].notna().all()

    def test_failing_cell_is_isolated(self, manifest, monkeypatch):
        original = commands.count_macs

        def flaky(config, patch):
            if config.guidance == "lab":
                raise RuntimeError("boom")
            return original(config, patch)

        monkeypatch.setattr(commands, "count_macs", flaky)
        table = cmd_ablate(manifest, [("lab", "concat"), ("none", "concat")], patch=32)
        assert table["status"].tolist()[0].startswith("RuntimeError")
        assert table["status"].tolist()[1] == "ok"

    def test_invalid_cell(self, manifest):
        with pytest.raises(ConfigError):
            cmd_ablate(manifest, [("yuv", "concat")])


def test_macs_table():
    table = cmd_macs(patch=32, base=ModelConfig(stages=2, base_width=4))
    assert table["variant"].tolist() == ["S", "Sf", "L", "Lf"]
    assert table["total"].is_monotonic_increasing
    assert (table["params"] > 0).all()


class TestCli:
    def test_generate_then_refuse(self, tmp_path):
        argv = ["generate", "--count", "10", "--out", str(tmp_path / "d"), "--resolution",
                "32x32"]
        assert cli.main(argv) == 0
        assert cli.main(argv) == 3

    @pytest.mark.parametrize("resolution", ["16x16", "16x64"])
    def test_too_small_resolution_is_a_config_error(self, tmp_path, resolution):
        argv = ["generate", "--count", "3", "--out", str(tmp_path / "d"), "--resolution",
                resolution]
        assert cli.main(argv) == 3

    def test_train_overrides(self, manifest, tmp_path, monkeypatch):
        seen = []

        def record(m, resume=False):
            seen.append(m)
            return SimpleNamespace(evaluation=None)

        monkeypatch.setattr(cli, "cmd_train", record)
        path = manifest.dump(tmp_path / "m.json")
        argv = ["train", "--manifest", str(path), "--seed", "42", "--variant", "L",
                "--guidance", "none", "--fusion", "concat"]
        assert cli.main(argv) == 0
        [used] = seen
        assert (used.model.variant, used.model.guidance, used.model.fusion) == (
            "L", "none", "concat")
        assert used.model.seed == used.train.seed == 42
        assert used.model.context_backbone == "large"
        assert used.model.stages == manifest.model.stages

    def test_train_without_overrides_keeps_the_manifest(self, manifest, tmp_path, monkeypatch):
        seen = []
        monkeypatch.setattr(cli, "cmd_train",
                            lambda m, resume=False: seen.append(m) or SimpleNamespace(
                                evaluation=None))
        path = manifest.dump(tmp_path / "m.json")
        assert cli.main(["train", "--manifest", str(path)]) == 0
        assert seen[0].model.as_dict == manifest.model.as_dict
        assert seen[0].train.as_dict == manifest.train.as_dict

    def test_missing_checkpoint(self, tmp_path):
        assert cli.main(["eval", "--checkpoint", str(tmp_path / "none.pt"), "--dataset",
                         str(tmp_path)]) == 4

    def test_broken_manifest(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("[", encoding="utf8")
        assert cli.main(["train", "--manifest", str(path)]) == 3

    def test_numerical_failure(self, manifest, tmp_path, monkeypatch):
        def diverge(*args, **kwargs):
            raise NumericalError("nan")

        monkeypatch.setattr(cli, "cmd_train", diverge)
        path = manifest.dump(tmp_path / "m.json")
        assert cli.main(["train", "--manifest", str(path)]) == 5

    def test_unexpected_failure(self, manifest, tmp_path, monkeypatch):
        def crash(*args, **kwargs):
            raise RuntimeError("unexpected")

        monkeypatch.setattr(cli, "cmd_train", crash)
        path = manifest.dump(tmp_path / "m.json")
        assert cli.main(["train", "--manifest", str(path)]) == 1

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["macs", "--variant", "XXL"])
        assert exc.value.code == 2

    def test_macs(self, capsys):
        assert cli.main(["macs", "--variant", "S", "--patch", "32"]) == 0
        assert "gmacs" in capsys.readouterr().out
