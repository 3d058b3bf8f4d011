"""Re-run the sweeps behind one of the reference figures (2-7).

Writes one CSV per curve plus a plot script overlaying the shipped
reference series.  Trial budgets default to desk scale; raise
``--max-trials`` to push the high-SNR points further.

    python3 scripts/replicate_figure.py --figure 2 --outdir runs/fig2
"""

import argparse
import os

from icstbc import harness
from icstbc.fixtures import load_fixtures

# figure -> (scheme, n_t, n_r, decoder)
SETUPS = {
    2: ("two-user", 2, 1, "picgd"),
    3: ("two-user", 3, 1, "picgd"),
    4: ("three-user", 2, 1, "picgd-sic"),
    5: ("three-user", 3, 1, "picgd-sic"),
    6: ("two-user", 2, 4, "picgd"),
    7: ("two-user", 2, 4, "picgd"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--figure", type=int, required=True, choices=sorted(SETUPS))
    ap.add_argument("--outdir", default="runs")
    ap.add_argument("--min-errors", type=int, default=100)
    ap.add_argument("--max-trials", type=int, default=10 ** 6)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    scheme, n_t, n_r, decoder = SETUPS[args.figure]
    os.makedirs(args.outdir, exist_ok=True)
    curves = load_fixtures(figure=args.figure, source="own")
    for curve in curves:
        grid = tuple(x for x, _ in curve["points"])
        cfg = harness.SimConfig(scheme=scheme, n_t=n_t, n=curve["n"], n_r=n_r, q=curve["q"],
                                decoder=decoder, ebn0=grid, min_errors=args.min_errors,
                                max_trials=args.max_trials, seed=args.seed,
                                workers=args.workers).validate()
        stem = os.path.join(args.outdir, f"fig{args.figure}_n{cfg.n}_q{cfg.q}")
        print(f"== {curve['label']}")
        res = harness.run_sweep(cfg, progress=lambda p: print(
            f"  {p.ebn0_db:5.1f} dB  cer={p.cer:.3e} per-user={max(p.per_user_cer):.3e} "
            f"nodes={p.avg_visited_nodes:.2f} trials={p.trials}", flush=True))
        harness.emit_csv(res, stem + ".csv")
        overlay = [s for s in load_fixtures(figure=args.figure)
                   if s["source"] != "own" or (s["n"] == cfg.n and s["q"] == cfg.q)]
        harness.emit_plot_script(res, overlay, stem + ".csv", stem + "_plot.py")


if __name__ == "__main__":
    main()
