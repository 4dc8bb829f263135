"""Command-line interface.

Exit codes: 0 on success, 2 for configuration problems, 3 for runtime
failures. All outputs are CSV on stdout unless --out is given.
"""

import argparse
import sys

import numpy as np

from . import analysis, harness
from .channel import load_impulse_response
from .equalization import channel_matrix, interference_matrix, interference_spread, \
    interleaver_search, save_permutation
from .errors import ConfigError, DomainError, RangeError
from .hadamard import sylvester


def _read_config(args) -> harness.ExperimentConfig:
    with open(args.config) as fh:
        text = fh.read()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return harness.parse_config(text, overrides)


def _open_out(args):
    return open(args.out, "w", newline="") if args.out else sys.stdout


def _cmd_simulate(args) -> int:
    cfg = _read_config(args)
    records = harness.sweep(cfg, threads=args.threads)
    out = _open_out(args)
    try:
        harness.write_ber_csv(records, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_analyze(args) -> int:
    cfg = _read_config(args)
    points = harness.analyze(cfg)
    out = _open_out(args)
    try:
        harness.write_analyze_csv(points, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_pmf(args) -> int:
    if args.dcr:
        rng = np.random.default_rng(args.seed)
        pmf = analysis.dcr_amplitude_pmf(args.n, args.m, args.symbols, rng)
    else:
        pmf = analysis.hcm_amplitude_pmf(args.n, args.m)
    out = _open_out(args)
    try:
        out.write("amplitude,probability\n")
        for a, p in zip(pmf.support, pmf.probs):
            out.write(f"{a:.10g},{p:.12g}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_eta(args) -> int:
    lo, _, hi = args.n_range.partition(":")
    n_lo, n_hi = int(lo), int(hi or lo)
    rng = np.random.default_rng(args.seed)
    out = _open_out(args)
    try:
        out.write("n,m,trials,eta\n")
        n = n_lo
        while n <= n_hi:
            eta = analysis.dcr_energy_efficiency(n, args.m, args.trials, rng)
            out.write(f"{n},{args.m},{args.trials},{eta:.6g}\n")
            n *= 2
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_interleaver_search(args) -> int:
    if args.taps_file:
        taps = load_impulse_response(args.taps_file)
    else:
        taps = np.array([float(v) for v in args.taps.split(",")])
    k = args.n.bit_length() - 1
    if args.n != 1 << k:
        raise ConfigError(f"n must be a power of two, got {args.n}")
    had = sylvester(k)
    g = channel_matrix(taps, args.n)
    rng = np.random.default_rng(args.seed)
    perm = interleaver_search(g, had, args.budget, rng)
    before = interference_spread(interference_matrix(had, np.arange(args.n), g))
    after = interference_spread(interference_matrix(had, perm, g))
    print(f"objective: identity={before:.6g} found={after:.6g}", file=sys.stderr)
    if args.out:
        save_permutation(perm, args.out)
    else:
        sys.stdout.write("\n".join(str(int(i)) for i in perm) + "\n")
    return 0


def _cmd_snr(args) -> int:
    schemes = [s.strip() for s in args.schemes.split(",")]
    m_list = [int(v) for v in args.m_list.split(",")]
    sigma2 = args.noise_std_w**2
    out = _open_out(args)
    try:
        out.write("scheme,m,spectral_efficiency,max_snr,best_avg_power_w\n")
        for scheme in schemes:
            for m in m_list:
                res = analysis.achievable_snr(
                    scheme, args.p_max_w, sigma2, n=args.n, m=m, gamma=args.gamma
                )
                out.write(
                    f"{scheme},{m},{res.spectral_efficiency:.6g},"
                    f"{res.max_snr:.6g},{res.best_avg_power:.6g}\n"
                )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hcmlink",
        description="Hadamard coded modulation link simulator and analyzer",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    sim = sub.add_parser("simulate", help="Monte-Carlo BER sweep from a config file")
    sim.add_argument("config")
    sim.add_argument("--out", help="output CSV path (default stdout)")
    sim.add_argument("--threads", type=int, default=1)
    sim.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a config key (repeatable)")
    sim.set_defaults(func=_cmd_simulate)

    ana = sub.add_parser("analyze", help="analytical BER curve for a config file")
    ana.add_argument("config")
    ana.add_argument("--out")
    ana.add_argument("--set", action="append", metavar="KEY=VALUE")
    ana.set_defaults(func=_cmd_analyze)

    pmf = sub.add_parser("pmf", help="chip amplitude pmf (analytic, or Monte-Carlo with --dcr)")
    pmf.add_argument("--n", type=int, required=True)
    pmf.add_argument("--m", type=int, default=2)
    pmf.add_argument("--dcr", action="store_true")
    pmf.add_argument("--symbols", type=int, default=20_000)
    pmf.add_argument("--seed", type=int, default=1)
    pmf.add_argument("--out")
    pmf.set_defaults(func=_cmd_pmf)

    eta = sub.add_parser("eta", help="DCR-HCM energy efficiency over a range of orders")
    eta.add_argument("--n-range", required=True, metavar="LO:HI",
                     help="powers of two, e.g. 16:256")
    eta.add_argument("--m", type=int, default=2)
    eta.add_argument("--trials", type=int, default=20_000)
    eta.add_argument("--seed", type=int, default=1)
    eta.add_argument("--out")
    eta.set_defaults(func=_cmd_eta)

    ils = sub.add_parser("interleaver-search", help="heuristic interference-spreading search")
    group = ils.add_mutually_exclusive_group(required=True)
    group.add_argument("--taps", help="comma-separated impulse response")
    group.add_argument("--taps-file")
    ils.add_argument("--n", type=int, required=True)
    ils.add_argument("--budget", type=int, default=2000)
    ils.add_argument("--seed", type=int, default=1)
    ils.add_argument("--out", help="write permutation here instead of stdout")
    ils.set_defaults(func=_cmd_interleaver_search)

    snr = sub.add_parser("snr", help="maximum achievable SNR vs spectral efficiency")
    snr.add_argument("--schemes", default="hcm,dcr-hcm,aco-ofdm,dco-ofdm")
    snr.add_argument("--m-list", default="2", help="PAM/QAM orders, comma separated")
    snr.add_argument("--n", type=int, default=128)
    snr.add_argument("--p-max-w", type=float, default=1e-4)
    snr.add_argument("--noise-std-w", type=float, default=5e-7)
    snr.add_argument("--gamma", type=float, default=1.21)
    snr.add_argument("--out")
    snr.set_defaults(func=_cmd_snr)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError, RangeError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
