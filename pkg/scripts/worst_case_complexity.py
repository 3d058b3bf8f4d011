"""Worst-case leaf counts: two real searches vs one joint complex search.

Forces full-tree traversal on a random low-SNR instance and prints the
instrumented leaf counts next to the closed forms 2 q^(n/2) and q^n.

    python3 scripts/worst_case_complexity.py
"""

import numpy as np

from icstbc import picgd, stbc
from icstbc.channel import build_equivalent, sample_channel, synthesize_rx
from icstbc.constellation import make_qam, noise_variance_for_ebn0


def leaves(n, q, rng):
    const = make_qam(q)
    scheme = stbc.two_user_scheme(2, n)
    ch = sample_channel(2, 2, 2, rng)
    dec = picgd.GroupDecoder.build(scheme, build_equivalent(scheme, ch))
    N0 = noise_variance_for_ebn0(0.0, float(scheme.rate), const.bits_per_symbol)
    sym = [const.points[rng.integers(0, q, n)] for _ in range(2)]
    y = synthesize_rx(scheme, ch, sym, N0, rng)
    _, (sr, si) = picgd.decode_decoupled(dec, y, 0, const, full=True, return_stats=True)
    joint = None
    if q ** n <= 10 ** 6:
        st = dec.stages[0]
        joint = picgd._joint_sphere(st.channel, st.projection @ y, const, full=True)[1].leaf_updates
    return sr.leaf_updates + si.leaf_updates, joint


def main():
    rng = np.random.default_rng(0)
    print(f"{'q':>5} {'n':>2} {'decoupled':>10} {'2q^(n/2)':>10} {'joint':>10} {'q^n':>12}")
    for q in (4, 16, 64, 256):
        for n in (2, 3, 4, 5):
            dec, joint = leaves(n, q, rng)
            print(f"{q:5d} {n:2d} {dec:10d} {2 * round(q ** (n / 2)):10d} "
                  f"{joint if joint is not None else '-':>10} {q ** n:12d}")


if __name__ == "__main__":
    main()
