"""Priority-ordered greedy coloring of the interference/collision graph.

Colors are numbered ``1..N_s``; color 0 means unassigned.
"""

from dataclasses import dataclass, field

import numpy as np

from .beamopt import SlotProblem, optimize_slot
from .channel import principal_pairs

W_FACTOR = 1.01


class RestartSignal(Exception):
    """No collision-free color is left for a link; ``N_s`` is too small."""

    def __init__(self, link, n_slots):
        super().__init__(f"link {link} has no collision-free color with N_s={n_slots}")
        self.link = link
        self.n_slots = n_slots


@dataclass
class ColorState:
    n_slots: int
    n_links: int
    colors: np.ndarray = None        # per link, 0 = unassigned
    power_sum: np.ndarray = None     # P_C, index 0 unused
    n_failing: np.ndarray = None     # N_C, index 0 unused
    throughput: np.ndarray = None    # per-color sum log2(1 + bound), max-throughput only

    def __post_init__(self):
        if self.n_slots < 1:
            raise ValueError("N_s must be >= 1")
        if self.colors is None:
            self.colors = np.zeros(self.n_links, dtype=int)
        for name in ("power_sum", "n_failing", "throughput"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(self.n_slots + 1))

    def members(self, color):
        return [int(k) for k in np.flatnonzero(self.colors == color)]

    def member_lists(self):
        return {c: self.members(c) for c in range(1, self.n_slots + 1)}


@dataclass
class PrioritizedLink:
    link: int
    collision_degree: int
    gain: float
    priority: float


@dataclass
class ScheduleParams:
    sinr_t: float
    p_max: float
    gamma: float = 0.0
    sigma2: float = 1.0
    beta_multipliers: tuple = (1.0, 4.0, 16.0, 64.0, 256.0)
    objective: str = "connectivity"
    w_factor: float = W_FACTOR


@dataclass
class Schedule:
    state: ColorState
    beams: np.ndarray                 # (L, M); rows of inactive links are principal vectors
    powers: np.ndarray                # (L,), zero for links outside the active set
    active: np.ndarray                # bool (L,)
    priorities: list = field(default_factory=list)  # processing order

    def assignment(self):
        return {int(k): int(c) for k, c in enumerate(self.state.colors) if self.active[k]}

    def table(self):
        lines = ["link\tcolor\tpower"]
        for k, c in enumerate(self.state.colors):
            if self.active[k]:
                lines.append(f"{k}\t{c}\t{self.powers[k]:.9g}")
        lines.append("")
        lines.append("color\tmembers")
        for c, mem in self.state.member_lists().items():
            lines.append(f"{c}\t{','.join(map(str, mem))}")
        return "\n".join(lines) + "\n"


def qualify_active_set(gains, p_max, sinr_t, sigma2=1.0):
    """Links that could reach ``sinr_t`` alone at full power (``P_max g >= sinr_t``)."""
    return np.asarray(gains) * p_max / sigma2 >= sinr_t


def scheduling_priority(collision_degree, gain, W):
    """``C_D * W + 1 / g``."""
    if gain <= 0:
        raise ValueError("gain must be positive")
    return collision_degree * W + 1.0 / gain


def prioritize(links, collision_degree, gains, w_factor=W_FACTOR):
    """Links in processing order, highest priority first (ties: lower id)."""
    links = list(links)
    if not links:
        return []
    W = w_factor * max(1.0 / gains[k] for k in links)
    out = [PrioritizedLink(k, int(collision_degree[k]), float(gains[k]),
                           scheduling_priority(collision_degree[k], gains[k], W))
           for k in links]
    out.sort(key=lambda p: (-p.priority, p.link))
    return out


def color_sets(link, state, icg):
    """``(D_F, D_C, D_U, D_I)`` for an unassigned link."""
    all_colors = set(range(1, state.n_slots + 1))
    col = state.colors
    d_u = {int(col[j]) for j in icg.colliding_neighbors(link) if col[j]}
    d_i = {int(col[j]) for j in icg.interfering_neighbors(link) if col[j]}
    d_f = all_colors - (d_i | d_u)
    d_c = d_i - (d_i & d_u)
    return d_f, d_c, d_u, d_i


def scheduling_freedom(link, state, icg):
    d_f, d_c, _, _ = color_sets(link, state, icg)
    return len(d_f) + len(d_c)


def _slot_problem(ids, He, att, params):
    ix = np.ix_(ids, ids)
    return SlotProblem(
        tuple(ids), He[ix], att[ix], params.gamma, params.sinr_t, params.p_max,
        params.sigma2,
        betas=tuple(m / params.sinr_t for m in params.beta_multipliers),
        objective=params.objective)


def _throughput(bounds):
    return float(np.sum(np.log2(1 + np.asarray(bounds))))


def schedule(active, icg, n_slots, He, att, params):
    """Greedy slot assignment with per-slot beamformer/power design.

    Parameters
    ----------
    active : array of bool
        Output of :func:`qualify_active_set`.
    icg : InterferenceCollisionGraph
    n_slots : int
    He : ndarray (L, L, M, M)
        Channels known to the scheduler.
    att : ndarray (L, L)
        ``d_ik**-alpha``.
    params : ScheduleParams

    Returns
    -------
    Schedule

    Raises
    ------
    RestartSignal
        When a link has neither a free nor a constraint color.
    """
    L = He.shape[0]
    active = np.asarray(active, dtype=bool)
    sig, V = principal_pairs(He[np.arange(L), np.arange(L)])
    gains = sig**2 * np.diagonal(att)
    state = ColorState(n_slots, L)
    beams = V.copy()
    powers = np.where(active, params.p_max, 0.0)
    order = prioritize(np.flatnonzero(active), icg.collision_degree, gains,
                       params.w_factor)
    thr_mode = params.objective == "throughput"
    sinr_t, sigma2 = params.sinr_t, params.sigma2

    for item in order:
        m = item.link
        d_f, d_c, _, _ = color_sets(m, state, icg)
        free = min(d_f) if d_f else None
        solo_power = params.p_max if thr_mode else sinr_t * sigma2 / gains[m]
        if not d_c:
            if free is None:
                raise RestartSignal(m, n_slots)
            _assign_solo(state, m, free, solo_power, powers, beams, V, gains, params)
            continue

        candidates = []
        for c in sorted(d_c):
            ids = state.members(c) + [m]
            sol = optimize_slot(_slot_problem(ids, He, att, params))
            n_tilde = sol.n_below(sinr_t)
            p_tilde = float(sol.powers.sum())
            if thr_mode:
                # maximize the throughput increase; stored as a cost to minimize
                cost = -(_throughput(sol.bounds) - state.throughput[c])
            else:
                cost = n_tilde - state.n_failing[c]
            candidates.append((cost, p_tilde - state.power_sum[c], c, ids, sol, n_tilde))
        cost, _, c, ids, sol, n_tilde = min(candidates, key=lambda t: t[:3])

        if thr_mode:
            solo_rate = np.log2(1 + params.p_max * gains[m] / sigma2)
            join = free is None or -cost >= solo_rate
        else:
            join = free is None or cost <= 0
        if join:
            state.colors[m] = c
            state.n_failing[c] = n_tilde
            state.power_sum[c] = float(sol.powers.sum())
            state.throughput[c] = _throughput(sol.bounds)
            beams[ids] = sol.beams
            powers[ids] = sol.powers
        else:
            _assign_solo(state, m, free, solo_power, powers, beams, V, gains, params)

    return Schedule(state, beams, powers, active, [p.link for p in order])


def _assign_solo(state, m, color, power, powers, beams, V, gains, params):
    state.colors[m] = color
    powers[m] = power
    beams[m] = V[m]
    state.power_sum[color] = power
    state.n_failing[color] = 0
    state.throughput[color] = float(np.log2(1 + power * gains[m] / params.sigma2))
