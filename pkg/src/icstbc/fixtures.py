"""Digitized reference curves shipped with the package.

Each series carries ``figure`` (figure of origin), ``quantity`` ("cer" or
"nodes"), ``source`` ("own" scheme, "reference" diversity slope, or
"external" data for a scheme this package does not implement) and
``points`` as ``[ebn0_db, value]`` pairs.
"""

import json
from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=1)
def _load():
    text = resources.files("icstbc").joinpath("data/reference_curves.json").read_text()
    return tuple(json.loads(text))


def load_fixtures(figure=None, quantity=None, source=None):
    out = []
    for s in _load():
        if figure is not None and s["figure"] != figure:
            continue
        if quantity is not None and s["quantity"] != quantity:
            continue
        if source is not None and s["source"] != source:
            continue
        out.append(dict(s))
    return out


def find_series(figure, n=None, q=None, source="own", quantity="cer"):
    for s in load_fixtures(figure, quantity, source):
        if (n is None or s.get("n") == n) and (q is None or s.get("q") == q):
            return s
    raise KeyError(f"no {source} {quantity} series for figure {figure}, n={n}, q={q}")


def value_at(series, ebn0_db):
    for x, y in series["points"]:
        if abs(x - ebn0_db) < 1e-9:
            return y
    raise KeyError(f"{series['label']} has no point at {ebn0_db} dB")


def fixtures_for(scheme, n_t, n_r):
    """Every series whose figure uses the given configuration."""
    return [dict(s) for s in _load()
            if s["scheme"] == scheme and s["n_t"] == n_t and s["n_r"] == n_r]
