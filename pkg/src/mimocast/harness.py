"""Monte Carlo experiment runner.

A sweep covers every (M, N_s, gamma, mode) cell. Randomness is drawn per
(M, realization) from ``SeedSequence([seed, M, r])`` so all cells of one
realization see the same channels, and results do not depend on how
realizations are spread over worker processes.
"""

import dataclasses
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bnd
from .beamopt import SlotOptimizationError, SlotProblem, meets_threshold, optimize_slot
from .channel import complex_gaussian, evolve_channels, principal_pairs, sample_estimated_channels
from .netgraph import (build_icg, build_routing_tree, cross_distances, generate_topology,
                       path_attenuation)
from .powerctl import PowerControlParams, power_control_slot
from .scheduler import RestartSignal, ScheduleParams, qualify_active_set, schedule
from .sinr import slot_sinr

log = logging.getLogger(__name__)

MODES = ("OCSI", "LPCSI", "GPCSI", "MAXTHROUGHPUT")

CSV_COLUMNS = (
    "M", "N_s", "gamma", "mode", "sinr_t", "realizations", "infeasible", "errors",
    "connectivity_product", "connectivity_joint", "avg_sum_power",
    "avg_sum_power_total", "avg_throughput", "avg_goodput", "U_B", "P_B",
)


def sinr_threshold(c_req, n_slots):
    """Per-slot SINR needed for a frame rate of ``c_req``: ``2**(N_s c_req) - 1``."""
    if c_req <= 0 or n_slots < 1:
        raise ValueError("need c_req > 0 and n_slots >= 1")
    return 2.0 ** (n_slots * c_req) - 1.0


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


@dataclass
class SimulationConfig:
    n_nodes: int = 30
    area_side: float = 25.0
    min_separation: float = 0.5
    source_index: int = 0
    topology_seed: int = 1
    alpha: float = 2.0
    sigma2: float = 1.0
    p_max_db: float = 25.0
    c_req: float = 0.9
    gammas: tuple = (0.01, 0.04)
    n_slots: tuple = (3, 4, 5, 6, 7, 8)
    antennas: tuple = (4,)
    modes: tuple = ("OCSI", "LPCSI", "GPCSI")
    realizations: int = 300
    seed: int = 0
    n_a: int = 3
    n_b: int = 2
    beta_multipliers: tuple = (1.0, 4.0, 16.0, 64.0, 256.0)
    w_factor: float = 1.01
    lambda_max: float = 40.0
    workers: int = 1

    def __post_init__(self):
        for name in ("gammas", "n_slots", "antennas", "modes", "beta_multipliers"):
            setattr(self, name, tuple(getattr(self, name)))
        if self.c_req <= 0:
            raise ValueError("c_req must be positive")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.w_factor <= 1:
            raise ValueError("w_factor must exceed 1")
        bad = set(self.modes) - set(MODES)
        if bad:
            raise ValueError(f"unknown modes {sorted(bad)}")
        if any(not 0 <= g < 1 for g in self.gammas):
            raise ValueError("gamma values must lie in [0, 1)")

    @property
    def p_max(self):
        return db_to_linear(self.p_max_db)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def header_lines(self):
        out = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            out.append(f"{f.name} = {v}")
        return out


def _parse_value(ftype, default, text):
    text = text.strip()
    if isinstance(default, tuple):
        items = [t.strip() for t in text.split(",") if t.strip()]
        if default and isinstance(default[0], str) or not default:
            if all(_is_number(t) for t in items) and items:
                return tuple(float(t) if "." in t else int(t) for t in items)
            return tuple(items)
        kind = type(default[0])
        return tuple(kind(float(t)) if kind is int else kind(t) for t in items)
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(float(text))
    if isinstance(default, float):
        return float(text)
    return text


def _is_number(t):
    try:
        float(t)
    except ValueError:
        return False
    return True


def parse_config(text, base=None):
    """Flat ``key = value`` document; ``#`` starts a comment; lists are comma-separated."""
    base = base or SimulationConfig()
    fields = {f.name: f for f in dataclasses.fields(SimulationConfig)}
    changes = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in fields:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        changes[key] = _parse_value(fields[key].type, getattr(base, key), val)
    return dataclasses.replace(base, **changes)


def load_config(path, overrides=()):
    with open(path) as fh:
        text = fh.read()
    return parse_config(text + "\n" + "\n".join(overrides))


# --------------------------------------------------------------------------
# Network geometry shared by every realization

@dataclass
class Network:
    topology: object
    tree: object
    icg: object
    distances: np.ndarray  # (L, L) tx of i -> rx of k
    att: np.ndarray

    @property
    def n_links(self):
        return self.tree.n_links

    @classmethod
    def build(cls, config):
        topo = generate_topology(config.n_nodes, config.area_side, config.topology_seed,
                                 config.source_index, config.min_separation)
        tree = build_routing_tree(topo)
        D = cross_distances(topo, tree)
        return cls(topo, tree, build_icg(tree), D, path_attenuation(D, config.alpha))


@dataclass
class RealizationResult:
    success: np.ndarray
    powers: np.ndarray
    sinr: np.ndarray
    n_slots: int
    infeasible: bool = False
    error: bool = False

    @property
    def throughput(self):
        on = self.powers > 0
        return float(np.sum(np.log2(1 + self.sinr[on]))) / self.n_slots

    @classmethod
    def failed(cls, L, n_slots, infeasible=False, error=False):
        return cls(np.zeros(L, bool), np.zeros(L), np.zeros(L), n_slots, infeasible, error)


def realization_channels(config, M, r, n_links):
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, M, r]))
    He = sample_estimated_channels(n_links, M, rng)
    E = complex_gaussian(rng, He.shape)
    return He, E


class _Frame:
    """Everything computed for one (M, realization); caches shared schedules."""

    def __init__(self, config, net, M, r):
        self.config, self.net, self.M, self.r = config, net, M, r
        L = net.n_links
        self.He, self.E = realization_channels(config, M, r, L)
        sig, _ = principal_pairs(self.He[np.arange(L), np.arange(L)])
        self.gains = sig**2 * np.diagonal(net.att)
        self._schedules = {}

    def sched(self, n_slots, gamma, objective):
        key = (n_slots, gamma, objective)
        if key not in self._schedules:
            c = self.config
            sinr_t = sinr_threshold(c.c_req, n_slots)
            active = qualify_active_set(self.gains, c.p_max, sinr_t, c.sigma2)
            params = ScheduleParams(sinr_t, c.p_max, gamma, c.sigma2,
                                    c.beta_multipliers, objective, c.w_factor)
            try:
                out = schedule(active, self.net.icg, n_slots, self.He, self.net.att, params)
            except RestartSignal as exc:
                out = exc
            except SlotOptimizationError as exc:
                log.warning("M=%d r=%d N_s=%d: %s", self.M, self.r, n_slots, exc)
                out = exc
            self._schedules[key] = out
        return self._schedules[key]

    def run(self, n_slots, gamma, mode):
        c, net = self.config, self.net
        L = net.n_links
        sinr_t = sinr_threshold(c.c_req, n_slots)
        if mode == "GPCSI":
            sched = self.sched(n_slots, 0.0, "connectivity")
            H = self.He
        else:
            objective = "throughput" if mode == "MAXTHROUGHPUT" else "connectivity"
            sched = self.sched(n_slots, gamma, objective)
            H = evolve_channels(self.He, gamma, perturbation=self.E).realized
        if isinstance(sched, RestartSignal):
            return RealizationResult.failed(L, n_slots, infeasible=True)
        if isinstance(sched, Exception):
            return RealizationResult.failed(L, n_slots, error=True)

        beams = sched.beams.copy()
        powers = sched.powers.copy()
        sinr = np.zeros(L)
        pc = PowerControlParams(sinr_t, c.n_a, c.n_b)
        for color, ids in sched.state.member_lists().items():
            if not ids:
                continue
            ix = np.ix_(ids, ids)
            Hs, att = H[ix], net.att[ix]
            if mode == "LPCSI":
                prob = SlotProblem(tuple(ids), Hs, att, 0.0, sinr_t, c.p_max, c.sigma2,
                                   betas=tuple(m / sinr_t for m in c.beta_multipliers))
                try:
                    sol = optimize_slot(prob)
                except SlotOptimizationError as exc:
                    log.warning("LPCSI re-optimization failed: %s", exc)
                    return RealizationResult.failed(L, n_slots, error=True)
                beams[ids], powers[ids] = sol.beams, sol.powers
            if mode == "MAXTHROUGHPUT":
                sinr[ids] = slot_sinr(Hs, beams[ids], powers[ids], att, c.sigma2)
            else:
                p, _, s = power_control_slot(Hs, beams[ids], powers[ids], att, pc, c.sigma2)
                powers[ids], sinr[ids] = p, s
        powers[~sched.active] = 0.0
        sinr[powers == 0] = 0.0
        success = sched.active & (powers > 0) & meets_threshold(sinr, sinr_t)
        return RealizationResult(success, powers, sinr, n_slots)


def run_realization(config, net, M, n_slots, gamma, mode, r):
    """Success flags and powers of every link for one cell and realization."""
    return _Frame(config, net, M, r).run(n_slots, gamma, mode)


def _cells(config, M):
    for n_slots in config.n_slots:
        for gamma in config.gammas:
            for mode in config.modes:
                yield (M, n_slots, gamma, mode)


def _work_item(args):
    config, net, M, r = args
    frame = _Frame(config, net, M, r)
    return {cell: frame.run(cell[1], cell[2], cell[3]) for cell in _cells(config, M)}


@dataclass
class MetricRecord:
    M: int
    n_slots: int
    gamma: float
    mode: str
    sinr_t: float
    realizations: int
    infeasible: int
    errors: int
    connectivity_product: float
    connectivity_joint: float
    avg_sum_power: float
    avg_sum_power_total: float
    avg_throughput: float
    avg_goodput: float
    per_link_success: np.ndarray = field(repr=False, default=None)
    U_B: float = float("nan")
    P_B: float = float("nan")


def aggregate(results, c_req=None, key=(0, 0, 0.0, "")):
    """Combine realizations of one cell.

    ``connectivity_product`` multiplies the per-link empirical success rates;
    ``connectivity_joint`` is the fraction of realizations where every link
    succeeds. Powers are summed over links and divided by ``N_s``.
    """
    if not results:
        raise ValueError("need at least one realization")
    M, n_slots, gamma, mode = key
    S = np.array([res.success for res in results], dtype=bool)
    P = np.array([res.powers for res in results])
    ns = results[0].n_slots
    rate = S.mean(axis=0)
    goodput = S.sum(axis=1).mean() * c_req if c_req is not None else float("nan")
    sinr_t = sinr_threshold(c_req, ns) if c_req is not None else float("nan")
    return MetricRecord(
        M, n_slots, gamma, mode, sinr_t, len(results),
        int(sum(res.infeasible for res in results)),
        int(sum(res.error for res in results)),
        float(np.prod(rate)), float(S.all(axis=1).mean()),
        float(P.sum(axis=1).mean() / ns), float(P.sum(axis=1).mean()),
        float(np.mean([res.throughput for res in results])), float(goodput),
        rate)


def bound_columns(config, net, M, n_slots):
    sinr_t = sinr_threshold(config.c_req, n_slots)
    d = net.tree.distances
    inputs = bnd.BoundInputs.from_links(d, sinr_t, config.p_max, M, n_slots,
                                        config.alpha, config.sigma2, config.lambda_max)
    ub = bnd.connectivity_upper_bound(inputs)
    if M in (1, 2, 4):
        pb = bnd.power_lower_bound(inputs, sinr_t, d, config.alpha, config.sigma2)
    else:
        pb = float("nan")
    return ub, pb


def run_sweep(config, net=None, workers=None):
    """Run every cell of ``config``; returns MetricRecords in cell order."""
    net = net or Network.build(config)
    workers = config.workers if workers is None else workers
    records = []
    for M in config.antennas:
        items = [(config, net, M, r) for r in range(config.realizations)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                per_r = list(ex.map(_work_item, items, chunksize=1))
        else:
            per_r = [_work_item(it) for it in items]
        for cell in _cells(config, M):
            rec = aggregate([res[cell] for res in per_r], config.c_req, cell)
            rec.U_B, rec.P_B = bound_columns(config, net, M, cell[1])
            records.append(rec)
    return records


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".9g")
    return str(v)


def records_to_csv(records, config=None):
    buf = io.StringIO()
    if config is not None:
        for line in config.header_lines():
            buf.write(f"# {line}\n")
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for rec in records:
        row = [rec.M, rec.n_slots, rec.gamma, rec.mode, rec.sinr_t, rec.realizations,
               rec.infeasible, rec.errors, rec.connectivity_product,
               rec.connectivity_joint, rec.avg_sum_power, rec.avg_sum_power_total,
               rec.avg_throughput, rec.avg_goodput, rec.U_B, rec.P_B]
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def read_csv(path_or_text):
    """Parse a sweep CSV (comment lines skipped) into a list of dicts."""
    text = path_or_text
    if "\n" not in path_or_text:
        with open(path_or_text) as fh:
            text = fh.read()
    lines = [l for l in text.splitlines() if l and not l.startswith("#")]
    head = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        row = {}
        for k, v in zip(head, line.split(",")):
            if k == "mode":
                row[k] = v
            elif k in ("M", "N_s", "realizations", "infeasible", "errors"):
                row[k] = int(v)
            else:
                row[k] = float(v) if v != "nan" else math.nan
        rows.append(row)
    return rows
