from asep_lab.commands.base import ExperimentCommand
from asep_lab.models.experiment import ExperimentKind
from asep_lab.services.harness import run_alpha_sweep

command = ExperimentCommand(
    name="alpha-sweep",
    kind=ExperimentKind.ALPHA_SWEEP,
    help="fit alpha for every p of a grid",
    fields=("initial_data", "vacate_origin", "s_grid", "p_grid"),
    runner=run_alpha_sweep,
    epilog="example: alpha-sweep --L 2 --p-grid 0.6,0.7,0.8,0.9,1.0 --n 10000",
)
