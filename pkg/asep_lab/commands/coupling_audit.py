"""
coupling-audit: pathwise checks of the colored/two-species coupling after every event
"""
from asep_lab.commands.base import ExperimentCommand
from asep_lab.models.experiment import ExperimentKind
from asep_lab.services.harness import run_coupling_audit

command = ExperimentCommand(
    name="coupling-audit",
    kind=ExperimentKind.COUPLING_AUDIT,
    help="audit the coupling of the colored and two-species processes",
    fields=("audit_stride",),
    runner=run_coupling_audit,
)
