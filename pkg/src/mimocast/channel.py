"""Rayleigh MIMO channels, outdated-CSI evolution and principal singular pairs.

Channel arrays are indexed ``H[i, k]``: the M x M matrix from the
transmitter of link ``i`` to the receiver of link ``k``.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class ChannelSet:
    estimated: np.ndarray          # (L, L, M, M) complex, what the scheduler sees
    perturbation: np.ndarray       # (L, L, M, M) complex
    realized: np.ndarray           # (L, L, M, M) complex, channel during transmission
    gamma: float

    @property
    def n_links(self):
        return self.estimated.shape[0]

    @property
    def M(self):
        return self.estimated.shape[-1]

    def dump(self):
        """Text dump, one matrix per line: ``i k kind re,im ...``."""
        lines = []
        L = self.n_links
        for kind, arr in (("est", self.estimated), ("real", self.realized)):
            for i in range(L):
                for k in range(L):
                    vals = " ".join(f"{z.real:.9g},{z.imag:.9g}" for z in arr[i, k].ravel())
                    lines.append(f"{i} {k} {kind} {vals}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SingularPair:
    sigma1: float
    v1: np.ndarray


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def complex_gaussian(rng, shape):
    """i.i.d. CN(0, 1) samples: real and imaginary parts each with variance 1/2."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def sample_estimated_channels(n_links, M, seed=None):
    if n_links < 1 or M < 1:
        raise ValueError("n_links and M must be positive")
    return complex_gaussian(_rng(seed), (n_links, n_links, M, M))


def evolve_channels(estimated, gamma, seed=None, perturbation=None):
    """First-order Markov step ``H = sqrt(1-gamma) He + sqrt(gamma) E``.

    ``perturbation`` may be passed in so that several values of gamma share
    the same draw of E.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    if perturbation is None:
        perturbation = complex_gaussian(_rng(seed), estimated.shape)
    if gamma == 0.0:
        realized = estimated.copy()
    else:
        realized = np.sqrt(1.0 - gamma) * estimated + np.sqrt(gamma) * perturbation
    return ChannelSet(estimated, perturbation, realized, float(gamma))


def _canonical_phase(v):
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size:
        ph = v[nz[0]] / abs(v[nz[0]])
        v = v / ph
        v[nz[0]] = abs(v[nz[0]])
    return v


def principal_pair(H, tol=1e-12, max_iter=200):
    """Largest singular value and right singular vector of ``H``.

    Power iteration on ``G = H^H H`` by repeated squaring: ``G**(2**j)``
    normalized by its trace converges to the projector onto the dominant
    eigenspace. The returned vector is that projector applied to the first
    basis vector it does not annihilate, so degenerate spectra (e.g. the
    identity) resolve to the same vector every time; the phase is then
    fixed so the first nonzero entry is real and nonnegative.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim == 0:
        H = H.reshape(1, 1)
    G = H.conj().T @ H
    tr = np.trace(G).real
    if tr <= 0:
        raise ValueError("principal_pair of a zero matrix")
    B = G / tr
    for _ in range(max_iter):
        B2 = B @ B
        B2 /= np.trace(B2).real
        done = np.max(np.abs(B2 - B)) < tol
        B = B2
        if done:
            break
    cols = np.linalg.norm(B, axis=0)
    j = int(np.argmax(cols > 1e-8 * cols.max()))
    v = B[:, j] / cols[j]
    # two plain power steps sharpen the vector beyond the projector's rounding
    for _ in range(2):
        v = G @ v
        v /= np.linalg.norm(v)
    v = _canonical_phase(v)
    sigma1 = float(np.linalg.norm(H @ v))
    return SingularPair(sigma1, v)


def principal_pairs(Hs):
    """``principal_pair`` over a stack of matrices; returns (sigma1, V)."""
    Hs = np.asarray(Hs)
    n, M = Hs.shape[0], Hs.shape[-1]
    sig = np.empty(n)
    V = np.empty((n, M), dtype=complex)
    for idx in range(n):
        p = principal_pair(Hs[idx])
        sig[idx] = p.sigma1
        V[idx] = p.v1
    return sig, V
