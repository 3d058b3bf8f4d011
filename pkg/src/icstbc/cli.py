"""Command line entry point: ``icstbc simulate | verify | selftest | export``."""

import argparse
import json
import logging
import sys

import numpy as np

from . import diversity, harness, picgd, stbc
from .constellation import make_qam
from .fixtures import fixtures_for

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK_FAILED = 3
EXIT_IO = 4


def _add_scheme_args(p, required=False):
    p.add_argument("--scheme", choices=harness.SCHEMES, required=required)
    p.add_argument("--nt", type=int)
    p.add_argument("--n", type=int)


def build_parser():
    ap = argparse.ArgumentParser(prog="icstbc", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="CER / complexity sweep")
    _add_scheme_args(s)
    s.add_argument("--nr", type=int)
    s.add_argument("--mod", help="qpsk, 16qam, ... or the order q")
    s.add_argument("--decoder", choices=harness.DECODERS)
    s.add_argument("--ebn0", help="start:step:stop in dB (inclusive) or a comma list")
    s.add_argument("--min-errors", type=int)
    s.add_argument("--min-trials", type=int)
    s.add_argument("--max-trials", type=int)
    s.add_argument("--chunk-size", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--out")
    s.add_argument("--plot-script", help="also write a matplotlib script overlaying fixtures")
    s.add_argument("--config", help="key=value file; command line flags take precedence")

    v = sub.add_parser("verify", help="numerical full-diversity rank checks")
    v.add_argument("--code", help="scheme or single-code JSON document")
    _add_scheme_args(v)
    v.add_argument("--constellation", default="qpsk")
    v.add_argument("--trials", type=int, default=200, help="channel samples")
    v.add_argument("--differences", type=int, default=200, help="differences per channel")
    v.add_argument("--mode", choices=(picgd.PICGD, picgd.PICGD_SIC))
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")

    t = sub.add_parser("selftest", help="decoder and search equivalence checks")
    t.add_argument("--trials", type=int, default=200)
    t.add_argument("--seed", type=int, default=0)

    e = sub.add_parser("export", help="write a scheme's dispersion matrices as JSON")
    _add_scheme_args(e, required=True)
    e.add_argument("--out")
    return ap


def _simulate(args):
    mapping = harness.read_config_file(args.config) if args.config else {}
    flags = {"scheme": args.scheme, "n_t": args.nt, "n": args.n, "n_r": args.nr,
             "q": args.mod, "decoder": args.decoder, "ebn0": args.ebn0,
             "min_errors": args.min_errors, "min_trials": args.min_trials,
             "max_trials": args.max_trials, "chunk_size": args.chunk_size, "seed": args.seed,
             "workers": args.workers, "out": args.out}
    mapping.update({k: v for k, v in flags.items() if v is not None})
    cfg = harness.config_from_mapping(mapping).validate()

    def report(p):
        print(f"{p.ebn0_db:6.2f} dB  trials={p.trials:<9d} errors={p.codeword_errors:<6d} "
              f"cer={p.cer:.3e}  nodes={p.avg_visited_nodes:.2f}  ({p.wall_time:.1f} s)",
              flush=True)

    res = harness.run_sweep(cfg, progress=report)
    if cfg.out:
        harness.emit_csv(res, cfg.out)
        if args.plot_script:
            series = [f for f in fixtures_for(cfg.scheme, cfg.n_t, cfg.n_r)
                      if f["source"] != "own" or (f["n"] == cfg.n and f["q"] == cfg.q)]
            harness.emit_plot_script(res, series, cfg.out, args.plot_script)
    return EXIT_OK


def _verify(args):
    const = make_qam(args.constellation)
    if args.code:
        try:
            with open(args.code) as fh:
                scheme = stbc.scheme_from_json(fh.read())
        except OSError as exc:
            raise OSError(f"cannot read code file {args.code}: {exc}") from exc
    elif args.scheme and args.nt and args.n:
        scheme = stbc.build_scheme(args.scheme, args.nt, args.n)
    else:
        raise harness.ConfigError("verify needs --code or --scheme/--nt/--n")
    reports = [diversity.check_ml_full_diversity(c, const, scheme_id=f"ml:user{c.user_index + 1}")
               for c in scheme.codes]
    if scheme.K >= 2:
        mode = args.mode or (picgd.PICGD_SIC if scheme.kind == stbc.THREE_USER else picgd.PICGD)
        reports.append(diversity.check_theorem1_rank(scheme, const, args.trials,
                                                     args.differences, mode, args.seed))
    text = json.dumps([r.to_dict() for r in reports], indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


def run_selftest(trials=200, seed=0, out=print):
    """Oracle cross-checks; returns the number of failed suites."""
    from .channel import build_equivalent, sample_channel, synthesize_rx
    from .constellation import noise_variance_for_ebn0
    from .sphere import LatticeProblem, exhaustive_search, sphere_search

    rng = np.random.default_rng(seed)
    failed = 0
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(1, 5))
        R = np.triu(rng.standard_normal((n, n)))
        np.fill_diagonal(R, np.abs(np.diag(R)) + 0.1)
        alph = [np.arange(-3, 4, 2.0)] * n
        prob = LatticeProblem(R, rng.standard_normal(n) * 3, alph)
        x, _ = sphere_search(prob)
        _, obj = exhaustive_search(prob)
        bad += abs(prob.objective(x) - obj) > 1e-9
    out(f"sphere vs exhaustive: {trials - bad}/{trials} agree")
    failed += bad > 0

    const = make_qam(4)
    for kind, n_t, n, mode in [(stbc.TWO_USER, 2, 3, picgd.PICGD),
                               (stbc.THREE_USER, 2, 3, picgd.PICGD_SIC)]:
        scheme = stbc.build_scheme(kind, n_t, n)
        N0 = noise_variance_for_ebn0(10.0, float(scheme.rate), const.bits_per_symbol)
        bad = 0
        for _ in range(trials):
            ch = sample_channel(scheme.K, n_t, 1, rng)
            dec = picgd.GroupDecoder.build(scheme, build_equivalent(scheme, ch), mode)
            sym = [const.points[rng.integers(0, 4, n)] for _ in range(scheme.K)]
            y = synthesize_rx(scheme, ch, sym, N0, rng)
            a = picgd.decode_all(dec, y, scheme, const)
            b = picgd.decode_all(dec, y, scheme, const, method=picgd.JOINT)
            bad += any(not np.allclose(u, w) for u, w in zip(a, b))
        out(f"{kind} {mode} decoupled vs joint: {trials - bad}/{trials} agree")
        failed += bad > 0
    return failed


def _export(args):
    if not (args.nt and args.n):
        raise harness.ConfigError("export needs --nt and --n")
    text = stbc.scheme_to_json(stbc.build_scheme(args.scheme, args.nt, args.n))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return _simulate(args)
        if args.command == "verify":
            return _verify(args)
        if args.command == "selftest":
            return EXIT_CHECK_FAILED if run_selftest(args.trials, args.seed) else EXIT_OK
        return _export(args)
    except (harness.ConfigError, stbc.RotationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
