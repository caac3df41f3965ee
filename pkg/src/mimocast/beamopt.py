"""Joint transmit beamformer and power design for the links sharing a slot.

The count of links whose expected-SINR lower bound clears the threshold is
smoothed with a sigmoid and maximized over a sequence of increasing
sharpness values. Each stage is a box-constrained quasi-Newton solve
(L-BFGS-B) in the variables ``(Re t, Im t, P / P_max)``; beamformers are
normalized inside the objective, so every iterate maps to a feasible point.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .channel import principal_pair
from .sinr import slot_bound_grad, slot_state

log = logging.getLogger(__name__)

DEFAULT_BETA_MULTIPLIERS = (1.0, 4.0, 16.0, 64.0, 256.0)
POWER_FLOOR = 1e-6  # fraction of P_max


class SlotOptimizationError(RuntimeError):
    pass


def sigmoid_indicator(x, sinr_t, beta):
    """Smooth step ``1 / (1 + exp(-beta (x - sinr_t)))``, overflow-safe."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    with np.errstate(over="ignore"):
        return expit(beta * (np.asarray(x, dtype=float) - sinr_t))


def default_betas(sinr_t, multipliers=DEFAULT_BETA_MULTIPLIERS):
    return tuple(m / sinr_t for m in multipliers)


@dataclass
class SlotProblem:
    """One slot: ``He[i, k]`` and ``att[i, k] = d_ik**-alpha`` use local indices.

    ``objective`` is ``"connectivity"`` (sigmoid count) or ``"throughput"``
    (``sum log2(1 + bound)``, solved in a single stage).
    """

    links: tuple
    He: np.ndarray
    att: np.ndarray
    gamma: float
    sinr_t: float
    p_max: float
    sigma2: float = 1.0
    betas: tuple = None
    objective: str = "connectivity"
    max_iter: int = 300
    gtol: float = 1e-6
    ftol: float = 1e-6

    def __post_init__(self):
        self.links = tuple(self.links)
        if self.sinr_t <= 0 or self.p_max <= 0:
            raise ValueError("sinr_t and p_max must be positive")
        if self.betas is None:
            self.betas = default_betas(self.sinr_t)
        self.betas = tuple(float(b) for b in self.betas)
        if any(b2 <= b1 for b1, b2 in zip(self.betas, self.betas[1:])):
            raise ValueError("beta schedule must be strictly increasing")
        if self.objective not in ("connectivity", "throughput"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.He.shape[0] != len(self.links):
            raise ValueError("channel block does not match the link list")

    @property
    def K(self):
        return len(self.links)

    @property
    def M(self):
        return self.He.shape[-1]


@dataclass
class SlotSolution:
    beams: np.ndarray
    powers: np.ndarray
    objective: float
    bounds: np.ndarray
    trace: list = field(default_factory=list)  # (stage, beta, start, end, iterations)

    def n_below(self, sinr_t):
        return int(np.sum(~meets_threshold(self.bounds, sinr_t)))


def meets_threshold(values, sinr_t, rtol=1e-9):
    """``values >= sinr_t`` with a relative tolerance for rounding."""
    return np.asarray(values) >= sinr_t * (1 - rtol)


def slot_objective(problem, beams, powers, beta=None):
    """Objective at a feasible point, evaluated from scratch."""
    b = slot_state(problem.He, beams, powers, problem.att, problem.gamma,
                   problem.sigma2)["bound"]
    if problem.objective == "throughput":
        return float(np.sum(np.log2(1 + b)))
    beta = problem.betas[-1] if beta is None else beta
    return float(np.sum(sigmoid_indicator(b, problem.sinr_t, beta)))


def initial_point(problem):
    beams = np.array([principal_pair(problem.He[k, k]).v1 for k in range(problem.K)])
    powers = np.full(problem.K, float(problem.p_max))
    return beams, powers


def _unpack(x, K, M, p_max):
    re, im, p = x[:K * M], x[K * M:2 * K * M], x[2 * K * M:]
    raw = (re + 1j * im).reshape(K, M)
    norm = np.linalg.norm(raw, axis=1)
    return raw, norm, p * p_max


def _pack(beams, powers, p_max):
    return np.concatenate([beams.real.ravel(), beams.imag.ravel(), powers / p_max])


def _stage_fun(problem, beta):
    K, M, p_max = problem.K, problem.M, problem.p_max
    thr = problem.objective == "throughput"

    def fun(x):
        raw, norm, P = _unpack(x, K, M, p_max)
        if np.any(norm == 0):
            return np.inf, np.zeros_like(x)
        T = raw / norm[:, None]
        st = slot_state(problem.He, T, P, problem.att, problem.gamma, problem.sigma2)
        b = st["bound"]
        if thr:
            val = np.sum(np.log2(1 + b))
            w = 1.0 / ((1 + b) * np.log(2))
        else:
            s = expit(beta * (b - problem.sinr_t))
            val = np.sum(s)
            w = beta * s * (1 - s)
        _, gT, gP = slot_bound_grad(problem.He, T, P, problem.att, problem.gamma,
                                    problem.sigma2, w, state=st)
        # project out the radial direction of the normalization t = x/|x|
        radial = np.sum((T.conj() * gT).real, axis=1)
        gx = (gT - T * radial[:, None]) / norm[:, None]
        grad = np.concatenate([gx.real.ravel(), gx.imag.ravel(), gP * p_max])
        if not np.isfinite(val) or not np.all(np.isfinite(grad)):
            raise SlotOptimizationError(
                f"non-finite objective for links {problem.links}: {val}")
        return -val, -grad

    return fun


def _all_meet(problem, x):
    raw, norm, P = _unpack(x, problem.K, problem.M, problem.p_max)
    b = slot_state(problem.He, raw / norm[:, None], P, problem.att, problem.gamma,
                   problem.sigma2)["bound"]
    return bool(np.all(meets_threshold(b, problem.sinr_t)))


def optimize_slot(problem, beams=None, powers=None):
    """Maximize the smoothed count of links meeting ``sinr_t`` in one slot.

    Starts from the principal right singular vectors of the direct channels
    at full power unless a starting point is given. A stage never ends
    below the objective it started from, and the continuation stops early
    once every link clears the threshold.
    """
    K, M = problem.K, problem.M
    if beams is None or powers is None:
        b0, p0 = initial_point(problem)
        beams = b0 if beams is None else beams
        powers = p0 if powers is None else powers
    beams = np.array(beams, dtype=complex)
    powers = np.clip(np.array(powers, dtype=float), POWER_FLOOR * problem.p_max,
                     problem.p_max)
    x = _pack(beams, powers, problem.p_max)
    bounds = [(None, None)] * (2 * K * M) + [(POWER_FLOOR, 1.0)] * K
    stages = [None] if problem.objective == "throughput" else problem.betas
    trace = []
    for stage, beta in enumerate(stages):
        if beta is not None and _all_meet(problem, x):
            # the count is already maximal; sharper stages cannot raise it
            break
        fun = _stage_fun(problem, beta)
        f0, _ = fun(x)
        res = minimize(fun, x, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": problem.max_iter, "gtol": problem.gtol,
                                "ftol": problem.ftol})
        if res.fun <= f0:
            raw, norm, _ = _unpack(res.x, K, M, problem.p_max)
            x = np.concatenate([(raw / norm[:, None]).real.ravel(),
                                (raw / norm[:, None]).imag.ravel(),
                                np.clip(res.x[2 * K * M:], POWER_FLOOR, 1.0)])
            f1 = res.fun
        else:
            f1 = f0
        trace.append((stage, beta, -f0, -f1, int(res.nit)))
        log.debug("slot %s stage %d beta=%s objective %.6g -> %.6g (%d it)",
                  problem.links, stage, beta, -f0, -f1, res.nit)
    raw, norm, P = _unpack(x, K, M, problem.p_max)
    T = raw / norm[:, None]
    b = slot_state(problem.He, T, P, problem.att, problem.gamma,
                   problem.sigma2)["bound"]
    return SlotSolution(T, P, slot_objective(problem, T, P), b, trace)
