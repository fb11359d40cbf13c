"""
fit-alpha: least-squares fit of the speed-law scale for a single second-class particle
"""
from asep_lab.commands.base import ExperimentCommand
from asep_lab.models.experiment import ExperimentKind
from asep_lab.services.harness import run_fit_alpha_experiment

command = ExperimentCommand(
    name="fit-alpha",
    kind=ExperimentKind.FIT_ALPHA,
    help="fit alpha in ((1 - s/alpha)/2)^(L+1) to the speed of a single second-class particle",
    fields=("initial_data", "vacate_origin", "s_grid", "alpha_range"),
    runner=run_fit_alpha_experiment,
    epilog="example: fit-alpha --p 0.7 --L 2 --t 500 --n 10000 --alpha-range 0.80,0.95",
)
