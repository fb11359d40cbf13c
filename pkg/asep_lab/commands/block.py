from asep_lab.commands.base import ExperimentCommand
from asep_lab.models.experiment import ExperimentKind
from asep_lab.services.harness import run_block_experiment

command = ExperimentCommand(
    name="block",
    kind=ExperimentKind.BLOCK,
    help="probability that L+1 consecutive sites at floor(st) are occupied, against its limit",
    fields=("block_s", "t_grid", "block_tolerance"),
    runner=run_block_experiment,
    epilog="example: block --p 0.75 --s 0.1 --L 1 --t-grid 200,500,1000 --n 20000",
)
