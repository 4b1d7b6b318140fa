"""Inexact fixed-point iterations with certified convergence rates.

The package splits into three layers: operators and iteration schemes
(`core`, `schemes`, `exprparse`, `rootfind`, `greens`), the majorant
recurrence with its decay-regime certificates (`sequences`, `majorant`,
`estimate`), and the problem catalog plus CLI on top (`problems`, `cli`).
"""

from .core import (BallDomain, CoreError, NormKind, OperatorEvaluationError,
                   OperatorSpec, Vector)
from .estimate import estimate_lipschitz_K, estimate_lipschitz_M, with_safety
from .greens import (GreensError, GridFunction, IntegralTrace, KernelSpec,
                     apply_integral_operator, bound_propagate,
                     build_volterra_kernel, kernel_from_expression,
                     run_integral_iteration)
from .majorant import (Certificate, MajorantError, MajorantParams,
                       NoValidMajorantError, PrecheckReport, ProblemConstants,
                       RecurrenceOverflowError, audit_step_inequalities,
                       certify, majorant_from_constants, precheck,
                       search_witnesses, simulate_recurrence, tail_bound)
from .problems import (CATALOG, ProblemError, ResolvedProblem, catalog_names,
                       constants_for, get_entry, load_problem, resolve_config)
from .rootfind import GammaSpec, RootfindError, wrap_root_problem
from .schemes import (InjectionMode, IterationTrace, PerturbationPlan,
                      SchemeError, SchemeKind, StepFailure, StopRule,
                      run_outer)
from .sequences import ScalarSequence, SequenceError, sequence_from_config

__version__ = "0.1.0"

__all__ = [
    "BallDomain", "CoreError", "NormKind", "OperatorEvaluationError",
    "OperatorSpec", "Vector",
    "estimate_lipschitz_K", "estimate_lipschitz_M", "with_safety",
    "GreensError", "GridFunction", "IntegralTrace", "KernelSpec",
    "apply_integral_operator", "bound_propagate", "build_volterra_kernel",
    "kernel_from_expression", "run_integral_iteration",
    "Certificate", "MajorantError", "MajorantParams", "NoValidMajorantError",
    "PrecheckReport", "ProblemConstants", "RecurrenceOverflowError",
    "audit_step_inequalities", "certify", "majorant_from_constants",
    "precheck", "search_witnesses", "simulate_recurrence", "tail_bound",
    "CATALOG", "ProblemError", "ResolvedProblem", "catalog_names",
    "constants_for", "get_entry", "load_problem", "resolve_config",
    "GammaSpec", "RootfindError", "wrap_root_problem",
    "InjectionMode", "IterationTrace", "PerturbationPlan", "SchemeError",
    "SchemeKind", "StepFailure", "StopRule", "run_outer",
    "ScalarSequence", "SequenceError", "sequence_from_config",
    "__version__",
]
