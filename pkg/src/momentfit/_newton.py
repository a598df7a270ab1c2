"""Damped Newton with a feasibility-preserving backtracking line search.

Shared by the three moment-matching duals (Hellinger, KL, max-entropy).
Each of them is a smooth strictly convex function on an open feasible set
that contains the starting point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import LineSearchStalled, NotConverged


@dataclass
class NewtonResult:
    x: np.ndarray
    value: float
    gradient: np.ndarray
    iterations: int
    trace: list = field(default_factory=list)


def newton_direction(grad, hess):
    """Solve ``H d = -g`` by a Jacobi-scaled Cholesky factorization.

    On factorization failure a ridge of ``1e-12 * trace(H) / dim`` is added
    and the factorization retried; a least-squares solve is the last resort.
    """
    d = np.sqrt(np.abs(np.diag(hess)))
    d[d == 0] = 1.0
    scaled = hess / np.outer(d, d)
    rhs = -grad / d
    try:
        return cho_solve(cho_factor(scaled), rhs) / d
    except (LinAlgError, ValueError):
        pass
    ridge = 1e-12 * np.trace(hess) / hess.shape[0]
    try:
        return cho_solve(cho_factor(hess + ridge * np.eye(hess.shape[0])), -grad)
    except (LinAlgError, ValueError):
        return np.linalg.lstsq(hess, -grad, rcond=None)[0]


def minimize(x0, value, derivatives, feasible, *, converged, max_iter=200, armijo=1e-4,
             shrink=0.5, max_backtracks=80, polish=3, min_step=0.0):
    """Minimize from a feasible ``x0``.

    ``value(x)`` returns the objective, ``derivatives(x)`` returns
    ``(f, g, H)`` and ``feasible(x)`` guards every trial point.  Iteration
    stops once ``converged(g)`` holds; up to ``polish`` extra full Newton
    steps are then taken while they keep shrinking the gradient.

    Raises :class:`NotConverged` at the iteration cap and
    :class:`LineSearchStalled` when no acceptable step exists; both carry
    the last iterate as ``exc.estimate`` (a :class:`NewtonResult`).
    Accepted steps shorter than ``min_step`` count as a stall.
    """
    x = np.array(x0, dtype=float)
    if not feasible(x):
        raise ValueError("starting point is infeasible")
    f, g, H = derivatives(x)
    trace = [f]
    it = 0
    polished = 0
    while True:
        done = converged(g)
        if done and (polished >= polish or not np.any(g)):
            break
        if it >= max_iter:
            if done:
                break
            last = NewtonResult(x, f, g, it, trace)
            raise NotConverged(
                f"no convergence after {it} Newton iterations "
                f"(gradient max-norm {np.max(np.abs(g)):.3e})",
                float(np.max(np.abs(g))), last,
            )
        step = newton_direction(g, H)
        slope = float(g @ step)
        if done:
            # polishing: full steps only, kept while the gradient shrinks
            trial = x + step
            if not feasible(trial):
                break
            f2, g2, H2 = derivatives(trial)
            if not np.max(np.abs(g2)) < np.max(np.abs(g)):
                break
            x, f, g, H = trial, f2, g2, H2
            trace.append(f)
            polished += 1
            it += 1
            continue
        if slope >= 0:
            # Hessian too ill-conditioned for a descent direction
            step = -g
            slope = float(g @ step)
        slack = 8 * np.finfo(float).eps * max(1.0, abs(f))
        t = 1.0
        for _ in range(max_backtracks):
            trial = x + t * step
            if feasible(trial):
                f_trial = value(trial)
                if np.isfinite(f_trial) and f_trial <= f + armijo * t * slope + slack:
                    break
            t *= shrink
        else:
            t = 0.0
        if t < min_step or not feasible(trial):
            last = NewtonResult(x, f, g, it, trace)
            raise LineSearchStalled(
                f"line search stalled after {it} iterations "
                f"(gradient max-norm {np.max(np.abs(g)):.3e})",
                float(np.max(np.abs(g))), last,
            )
        x = trial
        f, g, H = derivatives(x)
        trace.append(f)
        it += 1
    return NewtonResult(x, f, g, it, trace)


BARRIER_SCHEDULE = tuple(10.0 ** -k for k in range(10))


def barrier_minimize(x0, problem, *, converged, max_iter=200, schedule=BARRIER_SCHEDULE,
                     armijo=1e-4, shrink=0.5, polish=3, stage_tol=1e-6):
    """Minimize ``problem.value`` through a sequence of log-barrier problems.

    The moment duals have almost no barrier of their own where the
    reference density is tiny, so plain Newton can slide onto the face
    where the leading coefficient vanishes and stall there.  Each stage
    adds ``-nu * mean(log omega(x_i))`` over the grid nodes and is
    warm-started from the previous one; the last stage has ``nu = 0``.

    ``problem`` must provide ``value``, ``derivatives``, ``feasible``,
    ``omega`` (positivity function on the nodes, affine in ``x``) and
    ``powers`` (its Jacobian, shape ``(dim, nodes)``).
    """
    x = np.array(x0, dtype=float)
    f, g, _ = problem.derivatives(x)
    if converged(g):
        return NewtonResult(x, f, g, 0, [f])
    V = problem.powers
    N = V.shape[1]
    used = 0
    for nu in tuple(schedule) + (0.0,):
        if nu:
            def value(b, nu=nu):
                return problem.value(b) - nu * np.mean(np.log(problem.omega(b)))

            def derivatives(b, nu=nu):
                f, g, H = problem.derivatives(b)
                w = problem.omega(b)
                f = f - nu * np.mean(np.log(w))
                g = g - (nu / N) * (V @ (1.0 / w))
                H = H + (nu / N) * ((V / (w * w)) @ V.T)
                return f, g, H

            scale = np.maximum(1.0, np.abs(problem.mu))

            def done(g, scale=scale):
                return np.max(np.abs(g) / scale) <= stage_tol
        else:
            value, derivatives, done = problem.value, problem.derivatives, converged
        try:
            result = minimize(
                x, value, derivatives, problem.feasible, converged=done,
                max_iter=max_iter - used, armijo=armijo, shrink=shrink,
                polish=0 if nu else polish,
            )
        except NotConverged as exc:
            partial = exc.estimate
            f, g, _ = problem.derivatives(partial.x)
            exc.estimate = NewtonResult(partial.x, f, g, used + partial.iterations,
                                        partial.trace if not nu else [f])
            raise
        used += result.iterations
        x = result.x
    return NewtonResult(x, result.value, result.gradient, used, result.trace)
