"""

    rln2.harness.__init__.py
    ~~~~~~~~~~~~~~~~~~~~~~~~
    Experiment harness.

    @author: z33k

"""
from rln2.harness.manifest import DatasetDescriptor, ExperimentManifest
from rln2.harness.commands import EvalReport, TrainOutcome, cmd_ablate, cmd_eval, cmd_generate, \
    cmd_infer, cmd_macs, cmd_train, evaluate_model
