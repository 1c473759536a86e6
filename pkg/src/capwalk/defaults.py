"""Access to the checked-in defaults file (tolerances and calibration constants)."""

import copy
import functools
import json
from importlib import resources


@functools.lru_cache(maxsize=1)
def _load():
    text = resources.files("capwalk").joinpath("defaults.json").read_text()
    return json.loads(text)


def load():
    """A fresh copy of the defaults tree."""
    return copy.deepcopy(_load())


def rho_reg(n):
    """Diagonal regularisation factor for ambient dimension ``n``."""
    table = _load()["capacity"]["rho_reg"]
    key = str(int(n))
    if key not in table:
        raise KeyError(f"no calibrated rho_reg for dimension {n}; calibrated: {sorted(table)}")
    return float(table[key])
