from asep_lab.commands.base import ExperimentCommand
from asep_lab.models.experiment import ExperimentKind
from asep_lab.services.harness import run_identity_experiment

command = ExperimentCommand(
    name="identity",
    kind=ExperimentKind.IDENTITY,
    help="compare the colored and uncolored step-process estimates of the same probability",
    fields=("identity_I", "identity_J", "identity_P", "z_threshold"),
    runner=run_identity_experiment,
    epilog="example: identity --I -1 --J 1,2 --P 1 --t 1 --p 0.7 --n 200000 (negative lists: --I=-2,-1)",
)
