"""

    rln2.harness.cli.py
    ~~~~~~~~~~~~~~~~~~~
    Command-line interface: ``rln2 generate|train|eval|ablate|infer|macs``.

    Exit codes: 0 success, 1 unexpected failure, 2 usage error, 3 configuration error,
    4 data integrity error, 5 numerical failure.

    @author: z33k

"""
import argparse
import logging
import traceback
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence

from rln2.constants import DATA_ROOT_ENV, DEFAULT_RESOLUTION, MAC_REPORT_PATCH, MAX_LIGHTS
from rln2.harness.commands import DEFAULT_GRID, cmd_ablate, cmd_eval, cmd_generate, cmd_infer, \
    cmd_macs, cmd_train
from rln2.harness.manifest import ExperimentManifest, default_data_root
from rln2.nn.model import FUSIONS, GUIDANCES, VARIANTS
from rln2.utils import ConfigError, DataIntegrityError, NumericalError, RangeError, ShapeError

_log = logging.getLogger(__name__)

EXIT_OK, EXIT_UNEXPECTED, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 3, 4, 5


def _resolution(text: str) -> tuple:
    try:
        h, _, w = text.lower().partition("x")
        return int(h), int(w or h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected HxW, got: {text!r}")


def _cell(text: str) -> tuple:
    guidance, sep, fusion = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"Expected GUIDANCE:FUSION, got: {text!r}")
    return guidance, fusion


def _run_generate(args: argparse.Namespace) -> None:
    cmd_generate(args.count, args.seed, args.out, args.resolution, args.lights,
                 args.samples, force=args.force)


def _run_train(args: argparse.Namespace) -> None:
    manifest = ExperimentManifest.load(args.manifest)
    if args.out:
        manifest.output_dir = str(args.out)
    model_changes = {name: getattr(args, name) for name in ("variant", "guidance", "fusion")
                     if getattr(args, name) is not None}
    if args.variant is not None:
        model_changes["context_backbone"] = None  # re-derived from the variant
    if args.seed is not None:
        model_changes["seed"] = args.seed
        manifest.train = replace(manifest.train, seed=args.seed)
    if model_changes:
        manifest.model = replace(manifest.model, **model_changes)
        _log.info(f"Model config overridden from the command line: {model_changes}")
    outcome = cmd_train(manifest, resume=args.resume)
    if outcome.evaluation is not None:
        print(outcome.evaluation.table.to_string(index=False))


def _run_eval(args: argparse.Namespace) -> None:
    if not args.dataset:
        raise ConfigError(f"No dataset given (pass --dataset or set ${DATA_ROOT_ENV})")
    report = cmd_eval(args.checkpoint, args.dataset, args.split, args.out)
    print(report.table.to_string(index=False))


def _run_ablate(args: argparse.Namespace) -> None:
    table = cmd_ablate(args.manifest, args.grid or DEFAULT_GRID, args.patch)
    print(table.to_string(index=False))


def _run_infer(args: argparse.Namespace) -> None:
    cmd_infer(args.checkpoint, args.image, args.out, args.tile)


def _run_macs(args: argparse.Namespace) -> None:
    table = cmd_macs(args.variant or VARIANTS, args.guidance or ["hsv"],
                     args.fusion or ["cdffa"], args.patch)
    print(table.to_string(index=False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rln2",
                                     description="Retinex-guided ambient lighting normalization")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="render a synthetic triplet dataset")
    gen.add_argument("--count", type=int, default=20, help="number of scenes")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path, required=True, help="dataset root")
    gen.add_argument("--resolution", type=_resolution, default=DEFAULT_RESOLUTION,
                     help="HxW (default: %(default)s)")
    gen.add_argument("--lights", type=int, default=MAX_LIGHTS, help="max lights per scene")
    gen.add_argument("--samples", type=int, default=1, help="lightings per scene")
    gen.add_argument("--force", action="store_true", help="write into a non-empty directory")
    gen.set_defaults(run=_run_generate)

    train = sub.add_parser("train", help="train a model as described by a manifest")
    train.add_argument("--manifest", type=Path, required=True)
    train.add_argument("--out", type=Path, help="override the manifest's output directory")
    train.add_argument("--resume", action="store_true", help="continue from the last checkpoint")
    train.add_argument("--seed", type=int, help="override the model and training seeds")
    train.add_argument("--variant", choices=VARIANTS, help="override the model variant")
    train.add_argument("--guidance", choices=GUIDANCES, help="override the guidance")
    train.add_argument("--fusion", choices=FUSIONS, help="override the fusion")
    train.set_defaults(run=_run_train)

    ev = sub.add_parser("eval", help="evaluate a checkpoint against the unprocessed baseline")
    ev.add_argument("--checkpoint", type=Path, required=True)
    ev.add_argument("--dataset", type=Path, default=default_data_root(),
                    help=f"dataset root (default: ${DATA_ROOT_ENV})")
    ev.add_argument("--split", choices=("train", "val", "test"), default="test")
    ev.add_argument("--out", type=Path, help="report directory")
    ev.set_defaults(run=_run_eval)

    ab = sub.add_parser("ablate", help="run the guidance/fusion ablation grid")
    ab.add_argument("--manifest", type=Path, required=True)
    ab.add_argument("--grid", type=_cell, nargs="+",
                    help="GUIDANCE:FUSION cells (default: the five standard rows)")
    ab.add_argument("--patch", type=int, default=MAC_REPORT_PATCH)
    ab.set_defaults(run=_run_ablate)

    inf = sub.add_parser("infer", help="restore a single image")
    inf.add_argument("--checkpoint", type=Path, required=True)
    inf.add_argument("--image", type=Path, required=True)
    inf.add_argument("--out", type=Path, required=True)
    inf.add_argument("--tile", type=int)
    inf.set_defaults(run=_run_infer)

    macs = sub.add_parser("macs", help="report MACs per configuration")
    macs.add_argument("--variant", choices=VARIANTS, nargs="+")
    macs.add_argument("--guidance", choices=GUIDANCES, nargs="+")
    macs.add_argument("--fusion", choices=FUSIONS, nargs="+")
    macs.add_argument("--patch", type=int, default=MAC_REPORT_PATCH)
    macs.set_defaults(run=_run_macs)
    return parser


_EXIT_CODES: Dict[type, int] = {
    ConfigError: EXIT_CONFIG,
    ShapeError: EXIT_CONFIG,
    RangeError: EXIT_CONFIG,
    DataIntegrityError: EXIT_DATA,
    NumericalError: EXIT_NUMERICAL,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    run: Callable[[argparse.Namespace], None] = args.run
    try:
        run(args)
    except tuple(_EXIT_CODES) as e:
        _log.error(f"{type(e).__qualname__}: {e}")
        return _EXIT_CODES[next(t for t in _EXIT_CODES if isinstance(e, t))]
    except FileNotFoundError as e:
        _log.error(f"{type(e).__qualname__}: {e}")
        return EXIT_DATA
    except Exception as e:
        _log.critical(f"{type(e).__qualname__}: {e}:\n{traceback.format_exc()}")
        return EXIT_UNEXPECTED
    return EXIT_OK
