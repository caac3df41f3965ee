"""Receive beamforming, exact SINR and the Jensen lower bound on expected SINR.

The ``slot_*`` functions work on one slot at a time with local indices:
``H[i, k]`` is the channel from the transmitter of the i-th co-active link
to the receiver of the k-th, ``att[i, k]`` the matching ``d_ik**-alpha``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass
class LinkContext:
    """Link ``k`` together with the links sharing its slot.

    ``powers``, ``beams`` and ``distances`` are indexed by global link id;
    ``distances[i, k]`` runs from the transmitter of i to the receiver of k.
    """

    k: int
    coactive: tuple
    powers: np.ndarray
    beams: np.ndarray
    distances: np.ndarray
    alpha: float = 2.0
    sigma2: float = 1.0

    def __post_init__(self):
        self.coactive = tuple(int(i) for i in self.coactive if int(i) != self.k)
        norms = np.linalg.norm(self.beams[list(self.coactive) + [self.k]], axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise ValueError("beamformers must have unit norm")
        if np.any(self.distances[list(self.coactive), self.k] <= 0):
            raise ValueError("interferer at zero distance")


def _effective(H, ctx):
    """Desired and interfering effective channels with their linear gains."""
    k = ctx.k
    h = H[k, k] @ ctx.beams[k]
    a = ctx.powers[k] / ctx.distances[k, k] ** ctx.alpha
    idx = list(ctx.coactive)
    U = np.array([H[i, k] @ ctx.beams[i] for i in idx]).reshape(len(idx), H.shape[-2])
    c = np.array([ctx.powers[i] / ctx.distances[i, k] ** ctx.alpha for i in idx])
    return h, a, U, c


def interference_covariance(ctx, H):
    """``Q_k = sum_i (P_i/d_ik^a) (H_ik t_i)(H_ik t_i)^H + sigma2 I``."""
    _, _, U, c = _effective(H, ctx)
    M = H.shape[-1]
    Q = ctx.sigma2 * np.eye(M, dtype=complex)
    for ci, u in zip(c, U):
        Q += ci * np.outer(u, u.conj())
    return Q


def receive_beamformer(Q, h_eff):
    """MMSE/max-SINR combiner ``Q^-1 h_eff`` (any positive scaling is equivalent)."""
    try:
        return scipy.linalg.solve(Q, h_eff, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("interference covariance is singular") from exc


def sinr_with_combiner(ctx, H, w):
    """SINR of link k when its receiver applies combiner ``w``."""
    h, a, _, _ = _effective(H, ctx)
    Q = interference_covariance(ctx, H)
    return float(a * abs(np.vdot(w, h)) ** 2 / np.vdot(w, Q @ w).real)


def sinr_exact(ctx, H):
    """``(P_k/d_kk^a) t_k^H H_kk^H Q_k^-1 H_kk t_k``."""
    h, a, _, _ = _effective(H, ctx)
    Q = interference_covariance(ctx, H)
    return float(a * np.vdot(h, receive_beamformer(Q, h)).real)


def expected_sinr_lower_bound(ctx, He, gamma):
    """Jensen lower bound on ``E{SINR_k | He}`` under the Markov CSI model.

    ``(P_k/d_kk^a) [(1-g) h^H A^-1 h + g tr(A^-1)]`` with
    ``A = (g sum_i c_i + sigma2) I + (1-g) sum_i c_i u_i u_i^H``.
    The power/path-loss prefactor multiplies both terms.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    h, a, U, c = _effective(He, ctx)
    M = He.shape[-1]
    A = (gamma * c.sum() + ctx.sigma2) * np.eye(M, dtype=complex)
    for ci, u in zip(c, U):
        A += (1 - gamma) * ci * np.outer(u, u.conj())
    Ainv = np.linalg.inv(A)
    quad = np.vdot(h, Ainv @ h).real
    return float(a * ((1 - gamma) * quad + gamma * np.trace(Ainv).real))


# --------------------------------------------------------------------------
# Vectorized slot kernels

def slot_state(H, T, P, att, gamma, sigma2):
    """Intermediate quantities of the SINR lower bound for every slot member.

    With ``gamma=0`` and realized channels the returned ``bound`` is the
    exact SINR.
    """
    K, M = T.shape
    U = np.einsum("ikab,ib->ika", H, T)
    C = P[:, None] * att
    C[np.diag_indices(K)] = 0.0
    A = np.einsum("ik,ika,ikb->kab", C, U, U.conj()) * (1 - gamma)
    s = gamma * C.sum(axis=0) + sigma2
    A[:, np.arange(M), np.arange(M)] += s[:, None]
    Ainv = np.linalg.inv(A)
    h = U[np.arange(K), np.arange(K)]
    z = np.einsum("kab,kb->ka", Ainv, h)
    quad = np.einsum("ka,ka->k", h.conj(), z).real
    tr = np.trace(Ainv, axis1=1, axis2=2).real
    a = P * np.diagonal(att)
    bound = a * ((1 - gamma) * quad + gamma * tr)
    return {"U": U, "C": C, "Ainv": Ainv, "z": z, "quad": quad, "tr": tr,
            "a": a, "bound": bound}


def slot_sinr(H, T, P, att, sigma2=1.0):
    """Exact SINR of every link in a slot on channels ``H``."""
    return slot_state(H, T, P, att, 0.0, sigma2)["bound"]


def slot_sinr_bound(He, T, P, att, gamma, sigma2=1.0):
    return slot_state(He, T, P, att, gamma, sigma2)["bound"]


def slot_bound_grad(H, T, P, att, gamma, sigma2, weights, state=None):
    """Gradient of ``sum_k weights[k] * bound_k`` with respect to beams and powers.

    Returns ``(bound, grad_T, grad_P)`` where ``grad_T = dF/dRe(t) + 1j dF/dIm(t)``.
    ``state`` may pass in the output of :func:`slot_state` at the same point.
    """
    st = slot_state(H, T, P, att, gamma, sigma2) if state is None else state
    K = T.shape[0]
    U, C, Ainv, z, a = st["U"], st["C"], st["Ainv"], st["z"], st["a"]
    w = np.asarray(weights, dtype=float)
    diag_att = np.diagonal(att)
    own = (1 - gamma) * st["quad"] + gamma * st["tr"]

    Hkk = H[np.arange(K), np.arange(K)]
    grad_T = (2 * w * a * (1 - gamma))[:, None] * np.einsum(
        "kba,kb->ka", Hkk.conj(), z)
    grad_P = w * diag_att * own

    # B_k = (1-g) z z^H + g Ainv^2; d bound_k = -a_k tr(B_k dA_k)
    B = (1 - gamma) * np.einsum("ka,kb->kab", z, z.conj()) + gamma * (Ainv @ Ainv)
    V = np.einsum("kab,ikb->ika", B, U)
    coef = -2 * (1 - gamma) * C * (w * a)[None, :]
    grad_T += np.einsum("ik,ikba,ikb->ia", coef, H.conj(), V)
    uBu = np.einsum("ika,ika->ik", U.conj(), V).real
    trB = np.trace(B, axis1=1, axis2=2).real
    dP = -(w * a)[None, :] * att * (gamma * trB[None, :] + (1 - gamma) * uBu)
    dP[np.diag_indices(K)] = 0.0
    grad_P += dP.sum(axis=1)
    return st["bound"], grad_T, grad_P
