"""Command line entry point: ``mimocast {topology,schedule,sweep,bounds}``.

Every subcommand reads the same flat ``key = value`` configuration
(``--config``), optionally patched with ``--set key=value``.
"""

import argparse
import io
import logging
import sys

import numpy as np

from . import bounds as bnd
from .harness import (MODES, Network, SimulationConfig, _Frame, load_config, parse_config,
                      read_csv, records_to_csv, run_sweep, sinr_threshold, _fmt)
from .netgraph import icg_table, links_table, topology_table


def _config(args):
    overrides = list(args.set or [])
    if args.config:
        return load_config(args.config, overrides)
    return parse_config("\n".join(overrides))


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_topology(args):
    cfg = _config(args)
    net = Network.build(cfg)
    text = ("# nodes\n" + topology_table(net.topology) + "\n# links\n"
            + links_table(net.tree, net.icg) + "\n# icg\n" + icg_table(net.icg))
    _write(text, args.out)
    if args.figures:
        from .plotting import plot_topology
        plot_topology(net.topology, net.tree, args.figures)
    return 0


def cmd_schedule(args):
    cfg = _config(args)
    net = Network.build(cfg)
    M = args.M if args.M is not None else cfg.antennas[0]
    ns = args.ns if args.ns is not None else cfg.n_slots[0]
    gamma = args.gamma if args.gamma is not None else cfg.gammas[0]
    frame = _Frame(cfg, net, M, args.realization)
    objective = "throughput" if args.mode == "MAXTHROUGHPUT" else "connectivity"
    sched = frame.sched(ns, 0.0 if args.mode == "GPCSI" else gamma, objective)
    buf = io.StringIO()
    buf.write(f"# M={M} N_s={ns} gamma={gamma:g} mode={args.mode} "
              f"realization={args.realization} sinr_t={_fmt(sinr_threshold(cfg.c_req, ns))}\n")
    if isinstance(sched, Exception):
        buf.write(f"# infeasible: {sched}\n")
        _write(buf.getvalue(), args.out)
        return 1
    res = frame.run(ns, gamma, args.mode)
    buf.write(sched.table())
    buf.write("\nlink\tfinal_power\tsinr\tsuccess\n")
    for k in range(net.n_links):
        buf.write(f"{k}\t{_fmt(res.powers[k])}\t{_fmt(res.sinr[k])}\t{int(res.success[k])}\n")
    _write(buf.getvalue(), args.out)
    return 0


def cmd_sweep(args):
    cfg = _config(args)
    if args.realizations:
        cfg = cfg.replace(realizations=args.realizations)
    records = run_sweep(cfg, workers=args.workers)
    text = records_to_csv(records, cfg)
    _write(text, args.out)
    if args.figures:
        from .plotting import plot_sweep
        plot_sweep(read_csv(text), args.figures)
    return 0


def bounds_vs_ns(cfg, net):
    head = ["M", "N_s", "sinr_t", "U_B", "R2", "R4", "P_B"]
    rows = []
    d = net.tree.distances
    for M in cfg.antennas:
        for ns in cfg.n_slots:
            st = sinr_threshold(cfg.c_req, ns)
            inp = bnd.BoundInputs.from_links(d, st, cfg.p_max, M, ns, cfg.alpha,
                                             cfg.sigma2, cfg.lambda_max)
            r2, r4 = bnd.antenna_gain_ratios(inp)
            pb = (bnd.power_lower_bound(inp, st, d, cfg.alpha, cfg.sigma2)
                  if M in (1, 2, 4) else float("nan"))
            rows.append([M, ns, st, bnd.connectivity_upper_bound(inp), r2, r4, pb])
    return head, rows


def bounds_vs_lambda(cfg, grid):
    head = ["lambda"]
    for M in cfg.antennas:
        head.append(f"cdf_M{M}")
    for M in cfg.antennas:
        if M in (1, 2, 4):
            head.append(f"avg_power_M{M}")
    rows = []
    for lam in grid:
        row = [lam] + [float(bnd.max_eig_cdf(M, lam)) for M in cfg.antennas]
        row += [bnd.avg_power(M, lam, cfg.lambda_max) if lam > 0 else float("inf")
                for M in cfg.antennas if M in (1, 2, 4)]
        rows.append(row)
    return head, rows


def cmd_bounds(args):
    cfg = _config(args)
    if args.x == "ns":
        head, rows = bounds_vs_ns(cfg, Network.build(cfg))
    else:
        grid = np.linspace(args.lambda_lo, args.lambda_hi, args.points)
        head, rows = bounds_vs_lambda(cfg, grid)
    lines = [",".join(head)] + [",".join(_fmt(v) for v in r) for r in rows]
    _write("\n".join(lines) + "\n", args.out)
    if args.figures:
        from .plotting import plot_bound_curves
        arr = np.array(rows, dtype=float)
        if args.x == "ns":
            for M in cfg.antennas:
                sel = arr[arr[:, 0] == M]
                plot_bound_curves(sel[:, 1], {"U_B": sel[:, 3], "P_B": sel[:, 6]},
                                  "number of slots $N_s$", args.figures,
                                  name=f"bounds_M{M}.png", logy=("P_B",))
        else:
            cols = {h: arr[:, i] for i, h in enumerate(head) if i}
            logy = tuple(h for h in cols if h.startswith("avg_power"))
            plot_bound_curves(arr[:, 0], cols, "$\\lambda$", args.figures, logy=logy)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="mimocast", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
        sp.add_argument("--out", default="-", help="output file (default stdout)")
        sp.add_argument("--figures", metavar="DIR", help="also write PNG figures here")

    sp = sub.add_parser("topology", help="emit nodes, routing tree links and ICG")
    common(sp)
    sp.set_defaults(func=cmd_topology)

    sp = sub.add_parser("schedule", help="schedule one frame and dump the assignment")
    common(sp)
    sp.add_argument("--M", type=int)
    sp.add_argument("--ns", type=int)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--mode", choices=MODES, default="OCSI")
    sp.add_argument("--realization", type=int, default=0)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("sweep", help="run the Monte Carlo sweep and write CSV")
    common(sp)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--realizations", type=int)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("bounds", help="analytic bound curves as CSV")
    common(sp)
    sp.add_argument("--x", choices=("ns", "lambda"), default="ns")
    sp.add_argument("--lambda-lo", type=float, default=0.0)
    sp.add_argument("--lambda-hi", type=float, default=40.0)
    sp.add_argument("--points", type=int, default=101)
    sp.set_defaults(func=cmd_bounds)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"mimocast: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
