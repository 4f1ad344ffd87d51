"""Fixed points of the period-doubling renormalization operator.

Solves tau*H(H(x/tau)) = H(x) on [0, 1] for unimodal maps in the form
H(x) = |E(x)|^ell with E analytic, strictly decreasing, E(0) = 1, and
ell an even integer.  E is represented by Chebyshev coefficients on
[0, 1]; the nonlinear system couples the coefficients with the scaling
factor tau and is solved by a damped Newton iteration on a collocation
grid, with the normalization E(0) = 1 as an extra equation.
"""

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .basis import cheb_nodes, clenshaw, deriv_coeffs, tail_estimate

__all__ = [
    "ConvergenceError",
    "EvaluationDomainError",
    "PrecisionLossError",
    "UnimodalSpec",
    "RenormSolution",
    "LimitMapApprox",
    "default_initial_spec",
    "solve_feigenbaum",
    "solve_ladder",
    "eval_H",
    "eval_H_complex",
    "residual",
    "critical_point",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_hash",
]

CHECKPOINT_VERSION = 1


class ConvergenceError(RuntimeError):
    """Newton iteration failed; carries the last iterate and defect."""

    def __init__(self, message, last_spec=None, last_tau=None, defect=None,
                 iterations=None):
        super().__init__(message)
        self.last_spec = last_spec
        self.last_tau = last_tau
        self.defect = defect
        self.iterations = iterations


class EvaluationDomainError(ValueError):
    """Point lies outside the representable region of a map."""


class PrecisionLossError(ArithmeticError):
    """Series tail estimate exceeds tolerance at the requested point."""


@dataclass(frozen=True)
class UnimodalSpec:
    """Coefficient description of E on [0, 1] for H = |E|^ell."""

    order: int
    basis_size: int
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        if self.order < 2 or self.order % 2 != 0:
            raise ValueError("order must be an even integer >= 2")
        if len(self.coeffs) != self.basis_size:
            raise ValueError("coeffs length must equal basis_size")

    def eval_E(self, x):
        return clenshaw(self.coeffs, x)

    def eval_E_deriv(self, x):
        return clenshaw(deriv_coeffs(self.coeffs), x)

    def check_invariants(self, n_grid=512):
        """E(0) = 1, strictly decreasing on a grid, E(1) in (-1, 0)."""
        if abs(float(self.eval_E(0.0)) - 1.0) > 1e-9:
            raise ValueError("normalization E(0) = 1 violated")
        g = np.linspace(0.0, 1.0, n_grid)
        vals = self.eval_E(g)
        if not np.all(np.diff(vals) < 0):
            raise ValueError("E is not strictly decreasing on [0, 1]")
        e1 = float(self.eval_E(1.0))
        if not (-1.0 < e1 < 0.0):
            raise ValueError("E(1) = %g not in (-1, 0)" % e1)


@dataclass(frozen=True)
class RenormSolution:
    """Converged pair (E, tau) with residual metadata."""

    spec: UnimodalSpec
    tau: float
    residual_sup: float
    newton_iters: int
    grid_size: int

    def __post_init__(self):
        if not self.tau > 1.0:
            raise ValueError("tau must exceed 1")

    @property
    def order(self):
        return self.spec.order

    def H_real(self, x):
        """|E(x)|^ell without domain guard (internal dynamics use)."""
        return np.abs(self.spec.eval_E(x)) ** self.order

    def H_complex(self, z):
        """E(z)^ell; analytic continuation valid for even ell."""
        return self.spec.eval_E(np.asarray(z, dtype=complex)) ** self.order

    def H_complex_deriv(self, z):
        z = np.asarray(z, dtype=complex)
        e = self.spec.eval_E(z)
        return self.order * e ** (self.order - 1) * self.spec.eval_E_deriv(z)


def eval_H(sol, x):
    """H(x) = |E(x)|^ell for x in [0, 1]."""
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12) or np.any(x > 1.0 + 1e-12):
        raise EvaluationDomainError("x outside [0, 1]")
    return np.abs(sol.spec.eval_E(x)) ** sol.order


def eval_H_complex(sol, z, tol=1e-9, strict=False):
    """Analytic continuation E(z)^ell; flags series-tail precision loss.

    With strict=True, raises PrecisionLossError wherever the Chebyshev
    tail estimate at z exceeds tol.
    """
    z = np.asarray(z, dtype=complex)
    if strict:
        est = tail_estimate(sol.spec.coeffs, z)
        if np.any(est > tol):
            raise PrecisionLossError(
                "tail estimate %.3g exceeds %.3g" % (float(np.max(est)), tol))
    return sol.H_complex(z)


def residual(sol, x, tau=None):
    """Functional-equation defect tau*H(H(x/tau)) - H(x) at real x."""
    tau = sol.tau if tau is None else tau
    x = np.asarray(x, dtype=float)
    inner = np.abs(sol.spec.eval_E(x / tau)) ** sol.order
    outer = np.abs(sol.spec.eval_E(inner)) ** sol.order
    return tau * outer - np.abs(sol.spec.eval_E(x)) ** sol.order


def critical_point(sol, tol=1e-14):
    """Zero x0 of E in (0, 1) by bisection on the decreasing E."""
    e = sol.spec.eval_E
    a, b = 0.0, 1.0
    fa, fb = float(e(a)), float(e(b))
    if not (fa > 0.0 > fb):
        raise ConvergenceError("E does not change sign on [0, 1]")
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = float(e(m))
        if fm > 0.0:
            a = m
        else:
            b = m
        if b - a < tol:
            break
    x0 = 0.5 * (a + b)
    if abs(float(e(x0))) > 1e-12:
        raise ConvergenceError("bisection failed to resolve E = 0")
    return x0


# default initial guess for ell = 2 cold starts; engineering value, any
# decreasing profile in the basin works (recorded for reproducibility)
_INIT_POWER = (1.0, -1.8, 0.1)
_INIT_TAU = 2.5


def default_initial_spec(ell, basis_size):
    """Chebyshev form of E0(x) = 1 - 1.8 x + 0.1 x^2."""
    c = np.zeros(basis_size)
    # exact basis change of the quadratic onto T_k(2x - 1)
    a0, a1, a2 = _INIT_POWER
    c[0] = a0 + 0.5 * a1 + 0.375 * a2
    c[1] = 0.5 * a1 + 0.5 * a2
    c[2] = 0.125 * a2
    return UnimodalSpec(order=ell, basis_size=basis_size, coeffs=c)


def _system(theta, ell, nodes):
    m = len(theta) - 1
    c, tau = theta[:m], theta[m]
    e_at = lambda x: clenshaw(c, x)
    inner = np.abs(e_at(nodes / tau)) ** ell
    r = tau * np.abs(e_at(inner)) ** ell - np.abs(e_at(nodes)) ** ell
    norm_row = clenshaw(c, 0.0) - 1.0
    return np.concatenate(([norm_row], r))


def solve_feigenbaum(ell, basis_size, tol=1e-10, init=None, tau_init=None,
                     max_iter=60, fd_step=1e-7, grid_size=200):
    """Solve the fixed-point equation at even order ell.

    Newton iteration on the square system {E(0)=1, residual(x_j)=0} in
    the unknowns (coeffs, tau), collocated at basis_size Chebyshev
    nodes.  Deterministic given the arguments.  Raises ConvergenceError
    (carrying the last iterate) on failure.
    """
    if ell < 2 or ell % 2 != 0:
        raise ValueError("ell must be an even integer >= 2")
    if tol <= 0:
        raise ValueError("tol must be positive")

    if init is None:
        spec0 = default_initial_spec(ell, basis_size)
        tau0 = _INIT_TAU if tau_init is None else tau_init
    else:
        c = np.zeros(basis_size)
        k = min(basis_size, init.basis_size)
        c[:k] = init.coeffs[:k]
        spec0 = UnimodalSpec(order=ell, basis_size=basis_size, coeffs=c)
        tau0 = _INIT_TAU if tau_init is None else tau_init

    nodes = cheb_nodes(basis_size)
    theta = np.concatenate((spec0.coeffs, [tau0]))
    f = _system(theta, ell, nodes)
    norm = float(np.max(np.abs(f)))
    n_params = basis_size + 1
    iters = 0

    for iters in range(1, max_iter + 1):
        jac = np.empty((n_params, n_params))
        for j in range(n_params):
            bumped = theta.copy()
            bumped[j] += fd_step
            jac[:, j] = (_system(bumped, ell, nodes) - f) / fd_step
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(jac, -f, rcond=None)
            if not np.all(np.isfinite(step)):
                raise ConvergenceError(
                    "Jacobian near-singular; increase basis_size or damp steps",
                    last_spec=spec0, last_tau=theta[-1], defect=norm,
                    iterations=iters)
        lam, accepted = 1.0, False
        for _ in range(12):
            trial = theta + lam * step
            if trial[-1] > 1.0:
                f_trial = _system(trial, ell, nodes)
                n_trial = float(np.max(np.abs(f_trial)))
                if np.isfinite(n_trial) and n_trial < norm:
                    theta, f, norm = trial, f_trial, n_trial
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            raise ConvergenceError(
                "Newton stalled at defect %.3g after %d iterations"
                % (norm, iters),
                last_spec=UnimodalSpec(ell, basis_size, theta[:-1]),
                last_tau=theta[-1], defect=norm, iterations=iters)
        if norm < 0.05 * tol:
            break
    else:
        raise ConvergenceError(
            "no convergence in %d iterations (defect %.3g)" % (max_iter, norm),
            last_spec=UnimodalSpec(ell, basis_size, theta[:-1]),
            last_tau=theta[-1], defect=norm, iterations=max_iter)

    spec = UnimodalSpec(order=ell, basis_size=basis_size, coeffs=theta[:-1])
    tau = float(theta[-1])
    spec.check_invariants()
    sol = RenormSolution(spec=spec, tau=tau, residual_sup=0.0,
                         newton_iters=iters, grid_size=grid_size)
    grid = np.linspace(0.0, 1.0, grid_size)
    sup = float(np.max(np.abs(residual(sol, grid))))
    if sup > tol:
        raise ConvergenceError(
            "collocation converged but grid residual %.3g > tol %.3g; "
            "increase basis_size" % (sup, tol),
            last_spec=spec, last_tau=tau, defect=sup, iterations=iters)
    return RenormSolution(spec=spec, tau=tau, residual_sup=sup,
                          newton_iters=iters, grid_size=grid_size)


@dataclass(frozen=True)
class LimitMapApprox:
    """Ladder of solutions at ell = 2, 4, ..., with a tau extrapolation."""

    ladder: tuple
    tau_limit_estimate: float
    extrapolation_order: int
    tau_diffs: tuple = field(default=())

    @property
    def top(self):
        return self.ladder[-1]


def solve_ladder(ell_max, basis_size, tol=1e-10):
    """Solve ell = 2, 4, 8, ..., ell_max with warm starts.

    Records the successive differences |tau_{2l} - tau_l| and a
    geometric extrapolation of the tau sequence.  Solver failures
    propagate with the failing order named.
    """
    if ell_max < 4:
        raise ValueError("ell_max must be >= 4")
    ells = []
    e = 2
    while e <= ell_max:
        ells.append(e)
        e *= 2
    sols = []
    prev = None
    for ell in ells:
        try:
            if prev is None:
                sols.append(solve_feigenbaum(ell, basis_size, tol))
            else:
                sols.append(solve_feigenbaum(ell, basis_size, tol,
                                             init=prev.spec, tau_init=prev.tau))
        except ConvergenceError as exc:
            raise ConvergenceError(
                "ladder failed at ell = %d: %s" % (ell, exc),
                last_spec=exc.last_spec, last_tau=exc.last_tau,
                defect=exc.defect, iterations=exc.iterations) from exc
        prev = sols[-1]
    taus = np.array([s.tau for s in sols])
    diffs = tuple(float(d) for d in np.abs(np.diff(taus)))
    if len(taus) >= 3 and diffs[-2] > 0:
        r = diffs[-1] / diffs[-2]
        sign = np.sign(taus[-1] - taus[-2])
        est = float(taus[-1] + sign * diffs[-1] * r / (1.0 - r)) \
            if r < 1.0 else float(taus[-1])
    else:
        est = float(taus[-1])
    return LimitMapApprox(ladder=tuple(sols), tau_limit_estimate=est,
                          extrapolation_order=len(sols), tau_diffs=diffs)


def _fmt(x):
    return float("%.17g" % float(x))


def save_checkpoint(sol, path):
    """Write the versioned solution checkpoint atomically."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "ell": sol.order,
        "basis_size": sol.spec.basis_size,
        "coeffs": [_fmt(c) for c in sol.spec.coeffs],
        "tau": _fmt(sol.tau),
        "residual_sup": _fmt(sol.residual_sup),
        "grid_size": sol.grid_size,
    }
    text = json.dumps(payload, indent=1)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path):
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError("unsupported checkpoint version %r"
                         % payload.get("version"))
    spec = UnimodalSpec(order=payload["ell"],
                        basis_size=payload["basis_size"],
                        coeffs=np.array(payload["coeffs"], dtype=float))
    return RenormSolution(spec=spec, tau=payload["tau"],
                          residual_sup=payload["residual_sup"],
                          newton_iters=0, grid_size=payload["grid_size"])


def checkpoint_hash(path):
    """Content hash of a checkpoint file, embedded in reports."""
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()
