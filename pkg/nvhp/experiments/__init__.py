"""
Experiment handlers, one per ``nvhp`` subcommand. Each takes a validated
RunConfig and returns the result tables to write.
"""

from typing import Callable, Dict, List

from nvhp.experiments.buildup import run_cycle, run_depolarize, run_multispin
from nvhp.experiments.ensemble_runs import run_ensemble_experiment, run_totals
from nvhp.experiments.preparation import run_prep, run_rotation, run_validate_secular
from nvhp.experiments.spectra import run_levels, run_pmax_surface
from nvhp.models.models import ExperimentEnum, RunConfig
from nvhp.result_writers import ResultTable

HANDLERS: Dict[ExperimentEnum, Callable[[RunConfig], List[ResultTable]]] = {
    ExperimentEnum.LEVELS: run_levels,
    ExperimentEnum.PMAX_SURFACE: run_pmax_surface,
    ExperimentEnum.PREP: run_prep,
    ExperimentEnum.CYCLE: run_cycle,
    ExperimentEnum.DEPOLARIZE: run_depolarize,
    ExperimentEnum.MULTISPIN: run_multispin,
    ExperimentEnum.ENSEMBLE: run_ensemble_experiment,
    ExperimentEnum.TOTALS: run_totals,
    ExperimentEnum.VALIDATE_SECULAR: run_validate_secular,
    ExperimentEnum.ROTATION: run_rotation,
}
