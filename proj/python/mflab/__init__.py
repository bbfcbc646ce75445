"""Mean-field SPDE control laboratory.

Laws are float64 arrays of shape (atoms, nodes, modes); studies come back as
the same dictionaries the command-line tool writes to study.json.
"""

from ._core import (
    Config,
    EmpiricalLaw,
    Error,
    commands,
    constants_violation,
    hausdorff_study,
    law_array,
    load_config,
    parse_config,
    philox,
    poc_study,
    run,
    simulate,
    solve_mkv,
    summation_condition,
    value_estimate,
    wasserstein,
)

__version__ = "0.1.0"

__all__ = [
    "Config",
    "EmpiricalLaw",
    "Error",
    "commands",
    "constants_violation",
    "hausdorff_study",
    "law_array",
    "load_config",
    "parse_config",
    "philox",
    "poc_study",
    "run",
    "simulate",
    "solve_mkv",
    "summation_condition",
    "value_estimate",
    "wasserstein",
]
