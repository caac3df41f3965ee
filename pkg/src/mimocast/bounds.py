"""Interference-free performance benchmarks.

Closed-form CDFs of the largest eigenvalue of a central complex Wishart
matrix, the resulting connectivity upper bound, the antenna gain ratios,
and the lower bound on the average sum transmit power.

All power integrals are returned normalized by ``SINR_t * d**alpha * sigma2``;
multiply by that factor to obtain watts for a given link.
"""

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import exp1

log = logging.getLogger(__name__)

EULER_GAMMA = 0.57721566490153286061

# Largest c*lambda for which the power series of g1 is summed directly.
# Beyond it the alternating terms cancel and the E1 representation is used.
_SERIES_LIMIT = 2.0


class ConvergenceError(ArithmeticError):
    """A truncated series failed its term-ratio convergence test."""


@dataclass
class BoundInputs:
    """Per-link inputs of the interference-free bounds.

    Attributes
    ----------
    lambda_min : ndarray
        ``SINR_t * d_kk**alpha * sigma2 / P_max`` for each link.
    M : int
        Antennas per node.
    n_slots : int
        Slots per frame.
    lambda_max : float
        Truncation point of the power integrals.
    """

    lambda_min: np.ndarray
    M: int
    n_slots: int = 1
    lambda_max: float = 40.0

    def __post_init__(self):
        self.lambda_min = np.atleast_1d(np.asarray(self.lambda_min, dtype=float))
        if np.any(self.lambda_min < 0):
            raise ValueError("lambda_min must be nonnegative")
        if self.M < 1 or self.n_slots < 1:
            raise ValueError("M and n_slots must be positive")

    @classmethod
    def from_links(cls, distances, sinr_t, p_max, M, n_slots=1, alpha=2.0,
                   sigma2=1.0, lambda_max=40.0):
        d = np.asarray(distances, dtype=float)
        return cls(sinr_t * d**alpha * sigma2 / p_max, M, n_slots, lambda_max)


# --------------------------------------------------------------------------
# Wishart largest eigenvalue distribution

def lower_incomplete_gamma(n, lam):
    """Lower incomplete gamma function for positive integer order.

    ``(n-1)! * (1 - exp(-lam) * sum_{k<n} lam**k / k!)``
    """
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    n = int(n)
    term, acc = 1.0, 1.0
    for k in range(1, n):
        term *= lam / k
        acc += term
    return math.factorial(n - 1) * (1.0 - math.exp(-lam) * acc)


def wishart_max_eig_cdf(M, lam):
    """CDF of the largest eigenvalue of an MxM central complex Wishart matrix.

    Evaluated as the determinant of the Hankel matrix of lower incomplete
    gamma functions, normalized by ``prod_j Gamma(j)**2``.
    """
    if M < 1:
        raise ValueError("M must be positive")
    if lam <= 0:
        return 0.0
    phi = np.empty((M, M))
    for i in range(M):
        for j in range(M):
            phi[i, j] = lower_incomplete_gamma(i + j + 1, lam)
    norm = 1.0
    for j in range(1, M + 1):
        norm *= math.factorial(j - 1) ** 2
    return float(np.linalg.det(phi) / norm)


def cdf_m1(lam):
    return -np.expm1(-np.asarray(lam, dtype=float))


def cdf_m2(lam):
    lam = np.asarray(lam, dtype=float)
    return 1.0 - np.exp(-lam) * (lam**2 + 2.0) + np.exp(-2.0 * lam)


def f1(lam):
    lam = np.asarray(lam, dtype=float)
    return (np.exp(-lam) + np.exp(-3 * lam)) * (
        6 * lam**2 + 11 / 6 * lam**4 + lam**6 / 36)


def f2(lam):
    lam = np.asarray(lam, dtype=float)
    return (np.exp(-lam) - np.exp(-3 * lam)) * (-4 * lam**3 - lam**5 / 3)


def f3(lam):
    lam = np.asarray(lam, dtype=float)
    return -np.exp(-2 * lam) * (
        12 * lam**2 + 2 / 3 * lam**4 + 2 / 9 * lam**6 + lam**8 / 144)


def f4(lam):
    lam = np.asarray(lam, dtype=float)
    return (4 * np.exp(-lam) + 4 * np.exp(-3 * lam) - 6 * np.exp(-2 * lam)
            - np.exp(-4 * lam))


def f1_prime(lam):
    lam = np.asarray(lam, dtype=float)
    e1, e3 = np.exp(-lam), np.exp(-3 * lam)
    return ((e1 + e3) * (-12 * lam - 22 / 3 * lam**3 - lam**5 / 6)
            - (e1 + 3 * e3) * (-6 * lam**2 - 11 / 6 * lam**4 - lam**6 / 36))


def f2_prime(lam):
    lam = np.asarray(lam, dtype=float)
    e1, e3 = np.exp(-lam), np.exp(-3 * lam)
    return ((-e1 + 3 * e3) * (4 * lam**3 + lam**5 / 3)
            + (e1 - e3) * (12 * lam**2 + 5 / 3 * lam**4))


def f3_prime(lam):
    lam = np.asarray(lam, dtype=float)
    e2 = np.exp(-2 * lam)
    return (e2 * (24 * lam + 8 / 3 * lam**3 + 4 / 3 * lam**5 + lam**7 / 18)
            - 2 * e2 * (12 * lam**2 + 2 / 3 * lam**4 + 2 / 9 * lam**6
                        + lam**8 / 144))


def f4_prime(lam):
    lam = np.asarray(lam, dtype=float)
    return (4 * np.exp(-lam) + 12 * np.exp(-3 * lam) - 12 * np.exp(-2 * lam)
            - 4 * np.exp(-4 * lam))


def cdf_m4(lam):
    """Closed-form largest-eigenvalue CDF for M=4: ``1 - f1 - f2 - f3 - f4``."""
    return 1.0 - f1(lam) - f2(lam) - f3(lam) - f4(lam)


def pdf_m2(lam):
    lam = np.asarray(lam, dtype=float)
    return (np.exp(-lam) * (lam**2 + 2) - 2 * lam * np.exp(-lam)
            - 2 * np.exp(-2 * lam))


def pdf_m4(lam):
    return f1_prime(lam) + f2_prime(lam) + f3_prime(lam) + f4_prime(lam)


def max_eig_cdf(M, lam):
    """Largest-eigenvalue CDF, closed form where available."""
    if M == 1:
        return float(cdf_m1(lam))
    if M == 2:
        return float(cdf_m2(lam))
    if M == 4:
        return float(cdf_m4(lam))
    return wishart_max_eig_cdf(M, lam)


# --------------------------------------------------------------------------
# Connectivity upper bound

def connectivity_upper_bound(inputs):
    """Product over links of the interference-free success probability.

    For M=1 this reduces to ``exp(-sum(lambda_min))``.
    """
    lam = inputs.lambda_min
    if inputs.M == 1:
        return float(np.exp(-lam.sum()))
    if inputs.M == 2:
        # exp(-sum lam) * prod(lam**2 - exp(-lam) + 2)
        return float(np.exp(-lam.sum()) * np.prod(lam**2 - np.exp(-lam) + 2))
    if inputs.M == 4:
        return float(np.prod(f1(lam) + f2(lam) + f3(lam) + f4(lam)))
    return float(np.prod([1.0 - wishart_max_eig_cdf(inputs.M, x) for x in lam]))


def antenna_gain_ratios(inputs):
    """Connectivity gains ``(R2, R4)`` of two and four antennas over one."""
    lam = inputs.lambda_min
    r2 = np.prod(lam**2 - np.exp(-lam) + 2)
    r4 = np.prod(np.exp(lam) * (f1(lam) + f2(lam) + f3(lam) + f4(lam)))
    return float(r2), float(r4)


# --------------------------------------------------------------------------
# Antiderivatives used by the power bounds

def g1(c, lam):
    """Antiderivative of ``exp(-c*lam)/lam``.

    Uses the constant of integration of the Taylor construction, which
    resums to ``ln(lam) + sum_k (-c*lam)**k / (k * k!)`` for every
    expansion point.
    """
    if lam <= 0 or c <= 0:
        raise ValueError("c and lam must be positive")
    z = c * lam
    if z <= _SERIES_LIMIT:
        acc, term, k = 0.0, 1.0, 0
        while True:
            k += 1
            term *= -z / k
            acc += term / k
            if abs(term / k) < 1e-17 * max(abs(acc), 1e-300) or k > 200:
                break
        return math.log(lam) + acc
    return -float(exp1(z)) - EULER_GAMMA - math.log(c)


def g1_taylor(c, lam, lam_hat, rtol=1e-14, max_terms=200):
    """``g1`` from the Taylor expansion of ``exp(-c*x)`` about ``lam_hat``.

    This is the literal double series; its binomial terms grow like
    ``exp(c * (lam + lam_hat))`` and cancel, so it only holds full
    precision when that exponent is modest (roughly below 10).

    Raises
    ------
    ConvergenceError
        If the next term is still above ``rtol`` times the partial sum
        after ``max_terms`` terms.
    """
    base = math.exp(-c * lam_hat)
    total = base * math.log(lam)
    coef = 1.0
    for n in range(1, max_terms + 1):
        coef *= -c / n
        inner = (-lam_hat) ** n * math.log(lam)
        for k in range(1, n + 1):
            inner += math.comb(n, k) * (-lam_hat) ** (n - k) * lam**k / k
        term = coef * base * inner
        total += term
        if abs(term) < rtol * abs(total):
            return total
    raise ConvergenceError(
        f"g1 Taylor series did not converge in {max_terms} terms "
        f"(c={c}, lam={lam}, lam_hat={lam_hat})")


def g2(c, n, x):
    """Antiderivative of ``x**n * exp(c*x)`` for integer ``n >= 0``."""
    acc = 0.0
    for i in range(n + 1):
        acc += ((-1) ** i * math.factorial(n)
                / (c ** (i + 1) * math.factorial(n - i)) * x ** (n - i))
    return acc * math.exp(c * x)


def s_tilde(x):
    """Antiderivative of ``exp(-x**2)/x``:
    ``ln(x) + sum_n (-1)**n x**(2n) / (2n * n!)``."""
    if x <= 0:
        raise ValueError("x must be positive")
    return 0.5 * g1(1.0, x * x)


def f1_hat(lam):
    return (-12 * (g2(-1, 0, lam) + g2(-3, 0, lam))
            - 22 / 3 * (g2(-1, 2, lam) + g2(-3, 2, lam))
            - 1 / 6 * (g2(-1, 4, lam) + g2(-3, 4, lam))
            + 6 * (g2(-1, 1, lam) + 3 * g2(-3, 1, lam))
            + 11 / 6 * (g2(-1, 3, lam) + 3 * g2(-3, 3, lam))
            + 1 / 36 * (g2(-1, 5, lam) + 3 * g2(-3, 5, lam)))


def f2_hat(lam):
    return (4 * (3 * g2(-3, 2, lam) - g2(-1, 2, lam))
            + 1 / 3 * (3 * g2(-3, 4, lam) - g2(-1, 4, lam))
            + 12 * (g2(-1, 1, lam) - g2(-3, 1, lam))
            + 5 / 3 * (g2(-1, 3, lam) - g2(-3, 3, lam)))


def f3_hat(lam):
    return (24 * g2(-2, 0, lam) + 8 / 3 * g2(-2, 2, lam)
            + 4 / 3 * g2(-2, 4, lam) + 1 / 18 * g2(-2, 6, lam)
            - 24 * g2(-2, 1, lam) - 4 / 3 * g2(-2, 3, lam)
            - 4 / 9 * g2(-2, 5, lam) - 1 / 72 * g2(-2, 7, lam))


def f4_hat(lam):
    return 4 * (g1(1, lam) - g1(4, lam)) + 12 * (g1(3, lam) - g1(2, lam))


# --------------------------------------------------------------------------
# Average transmit power

def _check_interval(lambda_min, lambda_max):
    if lambda_min <= 0:
        raise ValueError("lambda_min must be positive")
    return lambda_min >= lambda_max


@functools.lru_cache(maxsize=None)
def _tail_check(M, lambda_max, tol=1e-12):
    pdf = {2: pdf_m2, 4: pdf_m4}[M]
    grid = np.linspace(1e-3, lambda_max, 400)
    ratio = abs(float(pdf(lambda_max))) / np.max(np.abs(pdf(grid)))
    if ratio >= tol:
        log.warning("M=%d pdf at lambda_max=%g is %.2e of its peak; the power "
                    "integral is truncated", M, lambda_max, ratio)
    return ratio


def avg_power_m1(lambda_min, lambda_max=40.0):
    """Normalized average power of a single-antenna link.

    ``2 * (s_tilde(lambda_max) - s_tilde(sqrt(lambda_min)))``; the upper
    limit applies to the Rayleigh amplitude.
    """
    if _check_interval(lambda_min, lambda_max):
        return 0.0
    return 2.0 * (s_tilde(lambda_max) - s_tilde(math.sqrt(lambda_min)))


def avg_power_m2(lambda_min, lambda_max=40.0):
    if _check_interval(lambda_min, lambda_max):
        return 0.0
    _tail_check(2, float(lambda_max))
    lo, hi = lambda_min, lambda_max
    return ((1 - hi) * math.exp(-hi) - (1 - lo) * math.exp(-lo)
            + 2 * (g1(1, hi) - g1(1, lo))
            - 2 * (g1(2, hi) - g1(2, lo)))


def avg_power_m4(lambda_min, lambda_max=40.0):
    if _check_interval(lambda_min, lambda_max):
        return 0.0
    _tail_check(4, float(lambda_max))
    hi, lo = lambda_max, lambda_min
    return sum(fh(hi) - fh(lo) for fh in (f1_hat, f2_hat, f3_hat, f4_hat))


def avg_power(M, lambda_min, lambda_max=40.0):
    try:
        fn = {1: avg_power_m1, 2: avg_power_m2, 4: avg_power_m4}[M]
    except KeyError:
        raise ValueError(f"closed-form power bound only for M in (1, 2, 4), got {M}")
    return fn(lambda_min, lambda_max)


def sum_power_lower_bound(expected_powers, n_slots):
    """Average sum transmit power bound ``sum(E{P_k}) / N_s``."""
    if n_slots < 1:
        raise ValueError("n_slots must be >= 1")
    return float(np.sum(expected_powers)) / n_slots


def power_lower_bound(inputs, sinr_t, distances, alpha=2.0, sigma2=1.0):
    """Per-network power bound in watts for the links described by ``inputs``."""
    scale = sinr_t * np.asarray(distances, dtype=float) ** alpha * sigma2
    per_link = [s * avg_power(inputs.M, lam, inputs.lambda_max)
                for s, lam in zip(scale, inputs.lambda_min)]
    return sum_power_lower_bound(per_link, inputs.n_slots)
