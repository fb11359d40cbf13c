"""
speed: empirical CDF of the leftmost second-class particle's speed against the limit law
"""
from asep_lab.commands.base import ExperimentCommand
from asep_lab.models.experiment import ExperimentKind
from asep_lab.services.harness import run_speed_experiment

command = ExperimentCommand(
    name="speed",
    kind=ExperimentKind.SPEED,
    help="speed law of the leftmost second-class particle",
    fields=("initial_data", "vacate_origin", "s_grid", "ks_threshold", "median_tolerance"),
    runner=run_speed_experiment,
    epilog="example: speed --p 1.0 --L 0 --t 500 --n 10000 --seed 42",
)
