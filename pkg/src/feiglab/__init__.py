"""Numerical laboratory for period-doubling fixed points at even orders:
the functional-equation solver, tower dynamics, parabolic Fatou
coordinates, the induced Markov partition with its drift statistics,
heavy-tailed random-walk experiments, and escape-time area estimates.
"""

__version__ = "0.1.0"

from .renorm import (  # noqa: F401
    ConvergenceError,
    EvaluationDomainError,
    PrecisionLossError,
    LimitMapApprox,
    RenormSolution,
    UnimodalSpec,
    critical_point,
    eval_H,
    eval_H_complex,
    load_checkpoint,
    residual,
    save_checkpoint,
    solve_feigenbaum,
    solve_ladder,
)
