import argparse
import logging
from typing import Any, Callable, Sequence

import colorlog
import numpy as np
from numpy import ndarray

# general Python utilities

log = logging.getLogger("varhom")
log.setLevel(logging.INFO)
log.propagate = False

if not log.handlers:
    _handler = logging.StreamHandler()
    _handler.setFormatter(
        colorlog.ColoredFormatter(
            "%(log_color)s[%(asctime)s][%(process)05d] %(message)s",
            datefmt=None,
            reset=True,
            log_colors={
                "DEBUG": "cyan",
                "INFO": "white,bold",
                "INFOV": "cyan,bold",
                "WARNING": "yellow",
                "ERROR": "red,bold",
                "CRITICAL": "red,bg_white",
            },
            secondary_log_colors={},
            style="%",
        )
    )
    log.addHandler(_handler)


def set_log_level(level: str) -> None:
    log.setLevel(getattr(logging, level.upper()))


class AttrDict(dict):
    __setattr__ = dict.__setitem__

    def __getattr__(self, key):
        try:
            return self[key]
        except KeyError:
            raise AttributeError(key)


def str2bool(v: Any) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "t", "yes", "y", "1"):
        return True
    elif isinstance(v, str) and v.lower() in ("false", "f", "no", "n", "0"):
        return False
    else:
        raise argparse.ArgumentTypeError("Boolean value expected.")


def as_vectors(x: Any, dim: int) -> ndarray:
    """Broadcast ``x`` to an array of shape ``(N, dim)``; a single vector becomes ``N = 1``."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[-1] != dim:
        raise ValueError(f"expected vectors of dimension {dim}, got shape {arr.shape}")
    return arr.reshape(-1, dim)


def pairing(p: Sequence[float], q: Sequence[float], qstar: Sequence[float], pstar: Sequence[float]) -> float:
    """p·q* + p*·q, the term linking the two cell quantities."""
    return float(np.dot(p, qstar) + np.dot(pstar, q))


def midpoint_gap(f: Callable[[ndarray], ndarray], z1: ndarray, z2: ndarray) -> ndarray:
    """½f(z₁) + ½f(z₂) − f(½z₁ + ½z₂) for batches of points."""
    return 0.5 * f(z1) + 0.5 * f(z2) - f(0.5 * (z1 + z2))
