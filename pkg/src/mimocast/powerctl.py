"""Iterative local power control within one slot on the realized channels."""

from dataclasses import dataclass

import numpy as np

from .sinr import slot_sinr

DEADBAND = 1e-9


@dataclass
class PowerControlParams:
    sinr_t: float
    n_a: int = 3
    n_b: int = 2

    def __post_init__(self):
        if self.n_a < 1 or self.n_b < 0:
            raise ValueError("need n_a >= 1 and n_b >= 0")


def _reduce_pass(H, T, P, att, sigma2, sinr_t):
    # Jacobi update: every link sees the powers from the start of the pass
    sinr = slot_sinr(H, T, P, att, sigma2)
    over = (P > 0) & (sinr > sinr_t * (1 + DEADBAND))
    P = P.copy()
    P[over] *= sinr_t / sinr[over]
    return P


def power_control_slot(H, beams, powers, att, params, sigma2=1.0, order=None):
    """Scale down links above the threshold, then silence those below it.

    Parameters
    ----------
    H : ndarray (K, K, M, M)
        Realized channels among the slot members (local indices).
    beams : ndarray (K, M)
        Fixed transmit beamformers.
    powers : ndarray (K,)
        Powers handed over by the scheduler.
    att : ndarray (K, K)
    params : PowerControlParams
    order : sequence of int, optional
        If given, links are updated one at a time in this order
        (Gauss-Seidel) instead of simultaneously.

    Returns
    -------
    powers : ndarray (K,)
    outage : ndarray of bool (K,)
        Links silenced because their SINR stayed below the threshold.
    sinr : ndarray (K,)
        Final SINR of every member (0 for silenced links).
    """
    P = np.asarray(powers, dtype=float).copy()
    sinr_t = params.sinr_t

    def one_pass(P):
        if order is None:
            return _reduce_pass(H, beams, P, att, sigma2, sinr_t)
        P = P.copy()
        for k in order:
            s = slot_sinr(H, beams, P, att, sigma2)[k]
            if P[k] > 0 and s > sinr_t * (1 + DEADBAND):
                P[k] *= sinr_t / s
        return P

    for _ in range(params.n_a):
        P = one_pass(P)
    sinr = slot_sinr(H, beams, P, att, sigma2)
    outage = (P > 0) & (sinr < sinr_t * (1 - DEADBAND))
    P[outage] = 0.0
    for _ in range(params.n_b):
        P = one_pass(P)
    sinr = slot_sinr(H, beams, P, att, sigma2)
    sinr[P == 0] = 0.0
    return P, outage, sinr
