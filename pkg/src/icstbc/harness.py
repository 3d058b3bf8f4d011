"""Seeded Monte Carlo driver for codeword-error-rate and complexity sweeps.

Trials at one SNR point are split into fixed-size chunks.  Chunk ``c`` of
point ``p`` draws everything from ``SeedSequence(seed, spawn_key=(p, c))``,
and chunks are accumulated in index order, so results do not depend on the
number of worker processes.
"""

import csv
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache

import numpy as np

from . import picgd, stbc
from .channel import complex_normal, synthesize_rx_batch
from .constellation import SUPPORTED_ORDERS, make_qam, noise_variance_for_ebn0

log = logging.getLogger(__name__)

DECODERS = ("picgd", "picgd-sic", "ml-joint")
SCHEMES = (stbc.TWO_USER, stbc.THREE_USER)


class ConfigError(ValueError):
    pass


def parse_sweep(text):
    """``"start:step:stop"`` (inclusive) or a comma list of dB values."""
    text = str(text).strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3:
            raise ConfigError(f"sweep {text!r} must be start:step:stop")
        start, step, stop = parts
        if step <= 0:
            raise ConfigError("ebn0 step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(round(start + i * step, 10)) for i in range(max(count, 0)))
    if not text:
        return ()
    return tuple(float(p) for p in text.split(","))


@dataclass(frozen=True)
class SimConfig:
    scheme: str = stbc.TWO_USER
    n_t: int = 2
    n: int = 2
    n_r: int = 1
    q: int = 4
    decoder: str = "picgd"
    ebn0: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    min_trials: int = 0
    max_trials: int = 10 ** 7
    min_errors: int = 100
    seed: int = 0
    workers: int = 1
    chunk_size: int = 4096
    out: str = ""

    def validate(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.decoder not in DECODERS:
            raise ConfigError(f"decoder must be one of {DECODERS}, got {self.decoder!r}")
        if self.scheme == stbc.THREE_USER and self.decoder == "picgd":
            raise ConfigError("the three-user scheme is only decodable with picgd-sic or "
                              "ml-joint; plain picgd cannot cancel two interferers")
        if self.q not in SUPPORTED_ORDERS:
            raise ConfigError(f"q must be one of {SUPPORTED_ORDERS}")
        if min(self.n_t, self.n, self.n_r) < 1:
            raise ConfigError("n_t, n and n_r must be positive")
        if self.min_errors < 1:
            raise ConfigError("min_errors must be at least 1")
        if self.max_trials < 1 or self.min_trials < 0 or self.min_trials > self.max_trials:
            raise ConfigError("need 0 <= min_trials <= max_trials and max_trials >= 1")
        if self.workers < 1 or self.chunk_size < 1:
            raise ConfigError("workers and chunk_size must be positive")
        try:
            stbc.build_scheme(self.scheme, self.n_t, self.n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    @property
    def K(self):
        return 2 if self.scheme == stbc.TWO_USER else 3

    def decoder_setup(self):
        """``(mode, method)`` for :func:`icstbc.picgd.decode_batch`."""
        if self.decoder == "picgd":
            return picgd.PICGD, picgd.DECOUPLED
        if self.decoder == "picgd-sic":
            return picgd.PICGD_SIC, picgd.DECOUPLED
        mode = picgd.PICGD if self.scheme == stbc.TWO_USER else picgd.PICGD_SIC
        return mode, picgd.JOINT_SPHERE


_KEY_ALIASES = {"nt": "n_t", "nr": "n_r", "mod": "q", "chunk": "chunk_size"}


def _coerce(name, value):
    if name == "ebn0":
        return parse_sweep(value) if isinstance(value, str) else tuple(float(v) for v in value)
    if name == "q" and isinstance(value, str):
        return make_qam(value).order
    if name in ("scheme", "decoder", "out"):
        return str(value)
    return int(float(value))


def config_from_mapping(mapping, base=None):
    """Build a :class:`SimConfig` from string-valued keys (CLI names accepted)."""
    known = {f.name for f in fields(SimConfig)}
    kw = {}
    for key, value in mapping.items():
        name = _KEY_ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
        if name not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kw[name] = _coerce(name, value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    if "decoder" not in kw and kw.get("scheme") == stbc.THREE_USER:
        kw["decoder"] = "picgd-sic"
    return replace(base or SimConfig(), **kw)


def read_config_file(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


@dataclass
class PointResult:
    ebn0_db: float
    trials: int
    codeword_errors: int
    per_user_errors: tuple
    avg_visited_nodes: float
    wall_time: float = float("nan")

    @property
    def cer(self):
        return self.codeword_errors / self.trials if self.trials else float("nan")

    @property
    def per_user_cer(self):
        return tuple(e / self.trials if self.trials else float("nan")
                     for e in self.per_user_errors)

    def numeric(self):
        return (self.ebn0_db, self.trials, self.codeword_errors, tuple(self.per_user_errors),
                self.avg_visited_nodes)


@dataclass
class SimResult:
    config: SimConfig
    points: list = field(default_factory=list)

    @property
    def K(self):
        return self.config.K


@lru_cache(maxsize=32)
def _setup(scheme, n_t, n, q):
    return stbc.build_scheme(scheme, n_t, n), make_qam(q)


def run_chunk(cfg, point_index, chunk_index, size):
    """Simulate one chunk; returns ``(trials, errors, per_user_errors, visited_sum)``."""
    scheme, const = _setup(cfg.scheme, cfg.n_t, cfg.n, cfg.q)
    mode, method = cfg.decoder_setup()
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed,
                                                       spawn_key=(point_index, chunk_index)))
    K, n = scheme.K, scheme.n
    N0 = noise_variance_for_ebn0(cfg.ebn0[point_index], float(scheme.rate),
                                 const.bits_per_symbol)
    H = complex_normal(rng, (size, K, scheme.n_t, cfg.n_r))
    tx = rng.integers(0, const.order, (size, K, n))
    y = synthesize_rx_batch(scheme, H, const.points[tx], N0, rng)
    rx, visited = picgd.decode_batch(scheme, H, y, const, mode=mode, method=method)
    wrong = np.any(rx != tx, axis=2)
    return (size, int(np.sum(np.any(wrong, axis=1))), tuple(int(v) for v in wrong.sum(0)),
            int(visited.sum()))


def _chunk_sizes(cfg):
    full, rest = divmod(cfg.max_trials, cfg.chunk_size)
    return [cfg.chunk_size] * full + ([rest] if rest else [])


def _done(cfg, trials, errors):
    return (errors >= cfg.min_errors and trials >= cfg.min_trials) or trials >= cfg.max_trials


def run_point(cfg, point_index, pool=None):
    """Accumulate chunks in order until the stop rule holds."""
    t0 = time.perf_counter()
    sizes = _chunk_sizes(cfg)
    trials = errors = visited = 0
    per_user = np.zeros(cfg.K, dtype=np.int64)
    wave = cfg.workers if pool is not None else 1
    c = 0
    while c < len(sizes) and not _done(cfg, trials, errors):
        idx = list(range(c, min(c + wave, len(sizes))))
        if pool is None:
            outs = [run_chunk(cfg, point_index, i, sizes[i]) for i in idx]
        else:
            outs = list(pool.map(run_chunk, [cfg] * len(idx), [point_index] * len(idx), idx,
                                 [sizes[i] for i in idx]))
        for t, e, pu, v in outs:
            # chunks past the stopping one are discarded so the result does not
            # depend on how many ran concurrently
            if _done(cfg, trials, errors):
                break
            trials += t
            errors += e
            per_user += pu
            visited += v
        c = idx[-1] + 1
    return PointResult(cfg.ebn0[point_index], trials, errors, tuple(int(v) for v in per_user),
                       visited / trials if trials else float("nan"),
                       time.perf_counter() - t0)


def run_sweep(cfg, progress=None):
    """Run every SNR point of ``cfg``; ``progress(point_result)`` is called after each."""
    cfg.validate()
    res = SimResult(cfg)
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for p in range(len(cfg.ebn0)):
            pt = run_point(cfg, p, pool)
            log.info("%.2f dB: %d trials, %d errors, cer=%.3e", pt.ebn0_db, pt.trials,
                     pt.codeword_errors, pt.cer)
            res.points.append(pt)
            if progress:
                progress(pt)
    finally:
        if pool is not None:
            pool.shutdown()
    return res


def slope_per_decade(p_lo, p_hi):
    """Decades of CER drop per 10 dB between two points."""
    return np.log10(p_lo.cer / p_hi.cer) / ((p_hi.ebn0_db - p_lo.ebn0_db) / 10.0)


# ---------------------------------------------------------------- output

def csv_header(K):
    return (["ebn0_db", "trials", "errors", "cer"] + [f"cer_user{k + 1}" for k in range(K)]
            + ["avg_visited_nodes"])


def emit_csv(res, path):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(csv_header(res.K))
            for p in res.points:
                w.writerow([repr(p.ebn0_db), p.trials, p.codeword_errors, repr(p.cer)]
                           + [repr(c) for c in p.per_user_cer] + [repr(p.avg_visited_nodes)])
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc
    return path


def read_csv(path):
    """Parse an emitted CSV back into :class:`PointResult` rows.

    Per-user error counts are recovered from the rates and the trial count.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise OSError(f"cannot read CSV {path}: {exc}") from exc
    out = []
    for r in rows:
        trials = int(r["trials"])
        users = sorted((k for k in r if k.startswith("cer_user")), key=lambda k: int(k[8:]))
        out.append(PointResult(float(r["ebn0_db"]), trials, int(r["errors"]),
                               tuple(int(round(float(r[k]) * trials)) for k in users),
                               float(r["avg_visited_nodes"])))
    return out


_PLOT_TEMPLATE = '''\
import csv

import matplotlib.pyplot as plt

CSV_PATH = {csv_path!r}
FIXTURES = {fixtures!r}

rows = list(csv.DictReader(open(CSV_PATH)))
x = [float(r["ebn0_db"]) for r in rows]
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
ax1.semilogy(x, [float(r["cer"]) or float("nan") for r in rows], "ko-", label={label!r})
ax2.plot(x, [float(r["avg_visited_nodes"]) for r in rows], "ko-", label={label!r})
for f in FIXTURES:
    xs, ys = zip(*f["points"])
    style = {{"external": "r-", "reference": "g--"}}.get(f["source"], "b:")
    tag = f["label"] + " [fig %d%s]" % (f["figure"], ", external data" if f["source"] == "external" else "")
    if f["quantity"] == "cer":
        ax1.semilogy(xs, ys, style, marker="x" if f["source"] != "reference" else None, label=tag)
    else:
        ax2.plot(xs, ys, style, marker="x", label=tag)
ax1.set_xlabel("Eb/N0 (dB)")
ax1.set_ylabel("CER")
ax2.set_xlabel("Eb/N0 (dB)")
ax2.set_ylabel("average visited nodes")
for ax in (ax1, ax2):
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig({png_path!r}, dpi=120)
'''


def emit_plot_script(res, fixtures, csv_path, path, png_path=None):
    """Write a standalone matplotlib script plotting ``csv_path`` over ``fixtures``."""
    cfg = res.config
    label = f"{cfg.scheme} Nt={cfg.n_t} n={cfg.n} Nr={cfg.n_r} {cfg.q}-QAM {cfg.decoder}"
    text = _PLOT_TEMPLATE.format(
        csv_path=os.path.abspath(csv_path), fixtures=[dict(f) for f in fixtures], label=label,
        png_path=png_path or os.path.splitext(os.path.abspath(path))[0] + ".png")
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write plot script {path}: {exc}") from exc
    return path


def config_dict(cfg):
    d = asdict(cfg)
    d["ebn0"] = list(cfg.ebn0)
    return d
