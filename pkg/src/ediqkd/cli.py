"""Command-line workbench: every analysis as a subcommand with CSV output.

Exit codes: 0 success, 2 configuration/usage error, 3 no-solution
(a requested threshold is unattainable).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from . import adversary, classical_bound, keyrate, photonic, simulate
from .keyrate import FiniteKeyParams
from .tomography import protocol_frame

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_SOLUTION = 3

TABLE2_QBERS = (0.055, 0.06, 0.065, 0.066, 0.067)
TABLE3_ETAS = (1.0, 0.95, 0.92, 0.90, 0.8973, 0.889, 0.888)
FIG3_QBERS = (0.005, 0.025, 0.05)


def fmt(x):
    """Format a cell: full-precision floats, plain ints, strings as-is."""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return x


def write_csv(path, header, rows, meta):
    """CSV with '# key=value' metadata lines sufficient to regenerate it."""
    with open(path, "w", newline="") as f:
        for k, v in {"version": __version__, **meta}.items():
            f.write(f"# {k}={fmt(v)}\n")
        w = csv.writer(f)
        w.writerow(header)
        w.writerows([[fmt(c) for c in row] for row in rows])
    print(f"wrote {path}")


def load_config(path, allowed):
    try:
        with open(path) as f:
            cfg = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"config error: {exc}") from exc
    unknown = set(cfg) - set(allowed)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def cmd_bound(args):
    frame = protocol_frame(rotated=not args.aligned)
    res = classical_bound.maximize_fgc(frame, method=args.method, workers=args.workers)
    print(f"F_GC = {res.value:.6f}  (method={res.method}, vertices checked: {res.vertices_checked})")
    if args.output:
        rows = [[xi] + list(map(repr, res.model.omega[xi])) for xi in range(8)]
        write_csv(
            args.output,
            ["row"] + [f"omega_{mu}" for mu in range(8)],
            rows,
            {"command": "bound", "F_GC": fmt(res.value), "frame": "aligned" if args.aligned else "rotated"},
        )
    return EXIT_OK


def cmd_rate(args):
    qs = np.linspace(args.qmin, args.qmax, args.steps)
    rows = [
        [fmt(q), fmt(keyrate.asymptotic_rate_ediqkd(q)), fmt(keyrate.asymptotic_rate_diqkd(q))]
        for q in qs
    ]
    write_csv(args.output, ["Q", "r_ediqkd", "r_diqkd"], rows,
              {"command": "rate", "qmin": args.qmin, "qmax": args.qmax, "steps": args.steps})
    print(f"critical QBER: EDIQKD {keyrate.critical_qber_ediqkd():.4f}, "
          f"DIQKD {keyrate.critical_qber_diqkd():.4f}")
    return EXIT_OK


def _params(args, n):
    return FiniteKeyParams(n=n, gamma=args.gamma, eps_s=args.eps_s,
                           eps_ec=args.eps_ec, eps_ec_prime=args.eps_ec_prime,
                           eps_pa=args.eps_pa)


def cmd_finite(args):
    ns = np.logspace(np.log10(args.nmin), np.log10(args.nmax), args.steps)
    rows = []
    for n in ns:
        p = _params(args, n)
        rows.append([
            fmt(n),
            fmt(keyrate.finite_rate_ediqkd(args.q, p).r),
            fmt(keyrate.finite_rate_diqkd(args.q, p).r),
        ])
    write_csv(args.output, ["n", "r_ediqkd", "r_diqkd"], rows,
              {"command": "finite", "Q": args.q, "gamma": args.gamma})
    return EXIT_OK


def cmd_efactor(args):
    qs = [float(x) for x in args.qbers.split(",")]
    rows = []
    missing = False
    for q in qs:
        ef, ne, nd = keyrate.efficiency_factor(q, args.target, FiniteKeyParams(n=1e6, gamma=args.gamma))
        if ef is None:
            missing = True
            rows.append([fmt(q), "", "", ""])
        else:
            rows.append([fmt(q), fmt(ne.n), fmt(nd.n), fmt(ef)])
            print(f"Q={q:.3f}: n'_E=10^{np.log10(ne.n):.2f}  n'_D=10^{np.log10(nd.n):.2f}  "
                  f"E_f=10^{np.log10(ef):.2f}")
    write_csv(args.output, ["Q", "n_ediqkd", "n_diqkd", "E_f"], rows,
              {"command": "efactor", "r_target": args.target, "gamma": args.gamma})
    return EXIT_NO_SOLUTION if missing else EXIT_OK


def cmd_secrecy(args):
    qs = np.linspace(0, 1 / 6 - 1e-9, args.steps)
    rows = []
    for q in qs:
        rows.append([
            fmt(q),
            fmt(adversary.secrecy_distance(q)),
            fmt(adversary.eve_information(q, "numeric")),
            fmt(adversary.eve_information(q, "closed")),
        ])
    write_csv(args.output, ["Q", "D", "I_AE_numeric", "I_AE_closedform"], rows,
              {"command": "secrecy", "steps": args.steps})
    return EXIT_OK


_PHOTONIC_KEYS = ("f_source", "p_dc", "n_total", "gamma", "preprocessing",
                  "etas", "r_threshold", "mu")


def cmd_photonic(args):
    cfg = load_config(args.config, _PHOTONIC_KEYS)
    f_source = cfg.get("f_source", 0.9952)
    p_dc = cfg.get("p_dc", 1e-6)
    n_total = cfg.get("n_total", 1.44e9)
    gamma = cfg.get("gamma", photonic.GAMMA_EDIQKD_NATURAL)
    pre = bool(cfg.get("preprocessing", False))
    etas = cfg.get("etas") or list(np.linspace(0.86, 1.0, 8))
    key_params = FiniteKeyParams(n=n_total * (1 - gamma), gamma=gamma)
    rows = []
    for eta in etas:
        r, arg = photonic.optimized_rate(eta, f_source, key_params, p_dc, pre)
        rows.append([fmt(eta), fmt(max(r, 0.0)), fmt(arg.alpha_deg), fmt(arg.mu),
                     fmt(arg.p_post), fmt(arg.p_noise)])
        print(f"eta={eta:.4f}: r_opt={max(r, 0.0):.3e}")
    write_csv(args.output, ["eta", "r_opt", "alpha_deg", "mu", "p_post", "p_noise"], rows,
              {"command": "photonic", "f_source": f_source, "p_dc": p_dc,
               "n_total": n_total, "gamma": gamma, "preprocessing": pre})
    eta_min, _ = photonic.required_efficiency(f_source, p_dc, n_total, gamma, pre,
                                              cfg.get("r_threshold", 1e-5))
    if eta_min is None:
        print("no detection efficiency <= 1 reaches the target rate")
        return EXIT_NO_SOLUTION
    print(f"eta_min = {eta_min:.4f}")
    return EXIT_OK


def cmd_efactor_eta(args):
    etas = [float(x) for x in args.etas.split(",")] if args.etas else list(TABLE3_ETAS)
    rows = []
    missing = False
    for eta in etas:
        ef, ne, nd = photonic.efactor_vs_efficiency(eta, f_source=args.f_source, mu=args.mu)
        if ef is None:
            missing = True
            rows.append([fmt(eta), "", "", ""])
            print(f"eta={eta:.4f}: no solution")
        else:
            rows.append([fmt(eta), fmt(ne.n), fmt(nd.n), fmt(ef)])
            print(f"eta={eta:.4f}: n'_E=10^{np.log10(ne.n):.2f}  n'_D=10^{np.log10(nd.n):.2f}  "
                  f"E_f=10^{np.log10(ef):.2f}")
    write_csv(args.output, ["eta", "n_ediqkd", "n_diqkd", "E_f"], rows,
              {"command": "efactor-eta", "f_source": args.f_source, "mu": args.mu})
    return EXIT_NO_SOLUTION if missing else EXIT_OK


def _parse_channel(spec):
    if ":" not in spec:
        if spec in ("ideal",):
            return "ideal"
        raise ValueError(f"channel {spec!r} needs an argument, e.g. flip:0.1")
    name, arg = spec.split(":", 1)
    if name == "photonic":
        cfg = load_config(arg, ("eta", "p_dc", "mu", "f_source", "alpha_deg",
                                "p_post", "p_noise"))
        return ("photonic", photonic.PhotonicParams(**cfg))
    if name in ("flip", "uqcm", "depolarizing"):
        return (name, float(arg))
    raise ValueError(f"unknown channel {name!r}")


def cmd_simulate(args):
    config = simulate.SessionConfig(
        n_rounds=args.rounds,
        gamma=args.gamma,
        channel=_parse_channel(args.channel),
        seed=args.seed,
        correction=not args.no_correction,
        workers=args.workers,
    )
    res = simulate.run_session(config)
    print(f"rounds          : {args.rounds}")
    print(f"channel         : {args.channel}")
    print(f"key length      : {len(res.alice_key)}")
    print(f"empirical QBER  : {res.q_emp:.4f}")
    print(f"F_expt          : {res.f_expt:.4f}")
    print(f"F_GC            : {res.f_gc:.4f}")
    print(f"aborted         : {res.aborted}")
    if res.block_report:
        br = res.block_report
        print(f"block F values  : {[round(f, 4) for f in br.f_values]}")
        print(f"IID flag        : {br.flagged} (max dF = {br.max_delta:.4f}, "
              f"5 SE = {5 * br.pooled_se:.4f})")
    if args.per_round:
        cfg2 = simulate.SessionConfig(args.rounds, args.gamma, config.channel,
                                      args.seed, not args.no_correction, 1)
        i, v, j, b, kind = simulate._simulate_chunk(cfg2, 0, args.rounds)
        names = {0: "test", 1: "key", 2: "discarded"}
        rows = [[k, i[k], v[k], j[k], b[k], names[int(kind[k])]] for k in range(args.rounds)]
        write_csv(args.per_round, ["k", "i", "a", "j", "b", "kind"], rows,
                  {"command": "simulate", "seed": args.seed, "channel": args.channel})
    return EXIT_OK


def cmd_repro(args):
    rid = args.id
    out = args.output or f"{rid}.csv"
    if rid == "fig3":
        ns = np.logspace(2, 12, 81)
        rows = []
        for n in ns:
            row = [fmt(n)]
            for q in FIG3_QBERS:
                p = FiniteKeyParams(n=n, gamma=1e-2)
                row += [fmt(keyrate.finite_rate_ediqkd(q, p).r),
                        fmt(keyrate.finite_rate_diqkd(q, p).r)]
            rows.append(row)
        header = ["n"]
        for q in FIG3_QBERS:
            header += [f"r_ediqkd_q{q}", f"r_diqkd_q{q}"]
        write_csv(out, header, rows, {"command": "repro fig3", "gamma": 1e-2,
                                      "eps_s": 1e-5, "eps_other": 1e-2})
        return EXIT_OK
    if rid == "fig4":
        gamma = photonic.GAMMA_EDIQKD_NATURAL
        key_params = FiniteKeyParams(n=1.44e9 * (1 - gamma), gamma=gamma)
        etas = np.linspace(0.87, 1.0, args.points)
        rows = []
        for eta in etas:
            r_prac, _ = photonic.optimized_rate(eta, 0.9952, key_params)
            r_pure, _ = photonic.optimized_rate(eta, 1.0, key_params)
            r_pre, _ = photonic.optimized_rate(eta, 0.9952, key_params, preprocessing=True)
            rows.append([fmt(eta), fmt(max(r_prac, 0.0)), fmt(max(r_pure, 0.0)),
                         fmt(max(r_pre, 0.0))])
        write_csv(out, ["eta", "r_practical", "r_pure_state", "r_preprocessing"], rows,
                  {"command": "repro fig4", "f_source": 0.9952, "N": 1.44e9})
        return EXIT_OK
    if rid == "fig5":
        rows = []
        for eta in np.linspace(0.888, 1.0, args.points):
            params = photonic.PhotonicParams(eta, 1e-6, 0.01, 0.998, 45.0)
            photo = photonic.effective_stats(params)
            q_att = min(max(photo.q, 2 * (1 - photo.f_expt) / 3), 1 / 6 - 1e-12)
            qd, sd = photonic.diqkd_photonic_stats(params)
            for n in np.logspace(2, 9, 29):
                pe = FiniteKeyParams(n=n, gamma=photonic.GAMMA_EDIQKD_NATURAL)
                pd = FiniteKeyParams(n=n, gamma=1e-2)
                re_ = 0.0
                if photo.f_expt > photonic.F_GC_THRESHOLD:
                    re_ = keyrate.finite_rate_ediqkd(
                        min(photo.q, 1 / 6 - 1e-12), pe, f_expt=photo.f_expt,
                        q_attack=q_att,
                    ).r
                rd_ = keyrate.finite_rate_diqkd(qd, pd, s=sd).r
                rows.append([fmt(eta), fmt(n), fmt(re_), fmt(rd_)])
        write_csv(out, ["eta", "n", "r_ediqkd", "r_diqkd"], rows,
                  {"command": "repro fig5", "f_source": 0.998, "mu": 0.01})
        return EXIT_OK
    if rid == "fig6":
        qs = np.linspace(0, 0.12, 121)
        rows = [[fmt(q), fmt(max(keyrate.asymptotic_rate_ediqkd(min(q, 1 / 6)), 0.0)),
                 fmt(max(keyrate.asymptotic_rate_diqkd(q), 0.0))] for q in qs]
        write_csv(out, ["Q", "r_ediqkd", "r_diqkd"], rows, {"command": "repro fig6"})
        print(f"zero crossings: EDIQKD {keyrate.critical_qber_ediqkd():.4f}, "
              f"DIQKD {keyrate.critical_qber_diqkd():.4f}")
        return EXIT_OK
    if rid == "fig7":
        qs = np.linspace(0, 1 / 6 - 1e-9, 50)
        rows = [[fmt(q), fmt(adversary.secrecy_distance(q))] for q in qs]
        write_csv(out, ["Q", "D"], rows, {"command": "repro fig7"})
        return EXIT_OK
    if rid == "table2":
        rows = []
        for q in TABLE2_QBERS:
            ef, ne, nd = keyrate.efficiency_factor(q)
            rows.append([fmt(q), fmt(ne.n), fmt(nd.n), fmt(ef)])
            print(f"Q={q:.3f}: n'_E=10^{np.log10(ne.n):.2f}  n'_D=10^{np.log10(nd.n):.2f}  "
                  f"E_f=10^{np.log10(ef):.2f}")
        write_csv(out, ["Q", "n_ediqkd", "n_diqkd", "E_f"], rows,
                  {"command": "repro table2", "r_target": 1e-3, "gamma": 1e-2})
        return EXIT_OK
    if rid == "table3":
        rows = []
        for eta in TABLE3_ETAS:
            ef, ne, nd = photonic.efactor_vs_efficiency(eta)
            if ef is None:
                rows.append([fmt(eta), "", "", ""])
                continue
            rows.append([fmt(eta), fmt(ne.n), fmt(nd.n), fmt(ef)])
            print(f"eta={eta:.4f}: E_f=10^{np.log10(ef):.2f}")
        write_csv(out, ["eta", "n_ediqkd", "n_diqkd", "E_f"], rows,
                  {"command": "repro table3", "f_source": 0.998, "mu": 0.01})
        return EXIT_OK
    raise ValueError(f"unknown repro id {rid!r}")


def build_parser():
    p = argparse.ArgumentParser(prog="ediqkd",
                                description="process-certified DIQKD workbench")
    sub = p.add_subparsers(dest="cmd")

    b = sub.add_parser("bound", help="classical-process fidelity bound F_GC")
    b.add_argument("--method", default="both", choices=["enumerate", "refine", "both"])
    b.add_argument("--aligned", action="store_true", help="Bob unrotated (control)")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("-o", "--output", default=None)
    b.set_defaults(fn=cmd_bound)

    r = sub.add_parser("rate", help="asymptotic key-rate sweep")
    r.add_argument("--qmin", type=float, default=0.0)
    r.add_argument("--qmax", type=float, default=1 / 6 - 1e-9)
    r.add_argument("--steps", type=int, default=100)
    r.add_argument("-o", "--output", default="rate.csv")
    r.set_defaults(fn=cmd_rate)

    f = sub.add_parser("finite", help="finite-size rate versus block size")
    f.add_argument("--q", type=float, required=True)
    f.add_argument("--nmin", type=float, default=1e3)
    f.add_argument("--nmax", type=float, default=1e10)
    f.add_argument("--steps", type=int, default=71)
    f.add_argument("-o", "--output", default="finite.csv")
    f.set_defaults(fn=cmd_finite)

    e = sub.add_parser("efactor", help="minimum-round efficiency factors")
    e.add_argument("--qbers", default=",".join(str(q) for q in TABLE2_QBERS))
    e.add_argument("--target", type=float, default=1e-3)
    e.add_argument("-o", "--output", default="efactor.csv")
    e.set_defaults(fn=cmd_efactor)

    s = sub.add_parser("secrecy", help="trace-distance secrecy sweep")
    s.add_argument("--steps", type=int, default=50)
    s.add_argument("-o", "--output", default="secrecy.csv")
    s.set_defaults(fn=cmd_secrecy)

    ph = sub.add_parser("photonic", help="imperfection pipeline rate sweep")
    ph.add_argument("--config", required=True)
    ph.add_argument("-o", "--output", default="photonic.csv")
    ph.set_defaults(fn=cmd_photonic)

    ee = sub.add_parser("efactor-eta", help="efficiency factors versus detection efficiency")
    ee.add_argument("--etas", default=None)
    ee.add_argument("--f-source", type=float, default=0.998)
    ee.add_argument("--mu", type=float, default=0.01)
    ee.add_argument("-o", "--output", default="efactor_eta.csv")
    ee.set_defaults(fn=cmd_efactor_eta)

    si = sub.add_parser("simulate", help="Monte Carlo protocol session")
    si.add_argument("--rounds", type=int, required=True)
    si.add_argument("--gamma", type=float, default=None)
    si.add_argument("--channel", default="ideal")
    si.add_argument("--seed", type=int, default=0)
    si.add_argument("--workers", type=int, default=1)
    si.add_argument("--no-correction", action="store_true")
    si.add_argument("--per-round", default=None)
    si.set_defaults(fn=cmd_simulate)

    rp = sub.add_parser("repro", help="reproduce a named figure or table")
    rp.add_argument("id", choices=["fig3", "fig4", "fig5", "fig6", "fig7", "table2", "table3"])
    rp.add_argument("--points", type=int, default=8)
    rp.add_argument("-o", "--output", default=None)
    rp.set_defaults(fn=cmd_repro)

    for sp in (r, f, e):
        sp.add_argument("--gamma", type=float, default=1e-2)
        sp.add_argument("--eps-s", type=float, default=1e-5)
        sp.add_argument("--eps-ec", type=float, default=1e-2)
        sp.add_argument("--eps-ec-prime", type=float, default=1e-2)
        sp.add_argument("--eps-pa", type=float, default=1e-2)
    return p


def dispatch(argv):
    parser = build_parser()
    if not argv:
        parser.print_usage()
        return EXIT_CONFIG
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if not hasattr(args, "fn"):
        parser.print_usage()
        return EXIT_CONFIG
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
