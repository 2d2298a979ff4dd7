"""Desk-scale resource caps.

Dense amplitude storage means memory scales linearly with the number of
basis states, so both path enumeration and state allocation refuse to grow
past a cap. The default (2**22) can be overridden with the QIDS_SIM_CAP
environment variable.
"""

from __future__ import annotations

import os

from .errors import SizeLimit

DEFAULT_SIM_CAP = 2**22

_ENV_VAR = "QIDS_SIM_CAP"


def sim_cap() -> int:
    """Current simulation cap (basis states / enumerated paths)."""
    raw = os.environ.get(_ENV_VAR)
    if raw is None:
        return DEFAULT_SIM_CAP
    try:
        value = int(raw)
    except ValueError:
        raise SizeLimit(f"{_ENV_VAR} must be an integer, got {raw!r}") from None
    if value < 1:
        raise SizeLimit(f"{_ENV_VAR} must be positive, got {value}")
    return value


def check_size(count: int, what: str) -> None:
    """Raise SizeLimit if `count` objects of kind `what` exceed the cap."""
    cap = sim_cap()
    if count > cap:
        raise SizeLimit(f"{what} needs {count} entries, over the cap of {cap}")
