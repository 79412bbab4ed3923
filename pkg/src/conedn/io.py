"""Artifact serialization: deterministic CSV, JSON summaries, binary fields.

Float cells print with 17 significant digits, so identical runs produce
byte-identical files on any IEEE-754 platform.
"""

import hashlib
import json
import struct

import numpy as np

from .errors import ConfigurationError, DomainError
from .strip import StripField

_FLOAT_FMT = "%.17g"
_MAGIC = b"CDN1"


def write_csv(path, columns) -> None:
    """Write ordered ``(name, 1-d array)`` pairs of equal length."""
    names = [name for name, _ in columns]
    arrays = [np.asarray(arr, dtype=float) for _, arr in columns]
    n = arrays[0].size if arrays else 0
    for name, arr in zip(names, arrays):
        if arr.ndim != 1 or arr.size != n:
            raise DomainError(f"column {name} has shape {arr.shape}, want ({n},)")
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(_FLOAT_FMT % arr[i] for arr in arrays))
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def config_hash(config: dict, seed: int) -> str:
    """sha256 of the canonical JSON of the merged config, salted by the seed
    (the seed participates even when no randomness is consumed)."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(f"{canon}|seed={seed}".encode("ascii")).hexdigest()


def write_summary(path, subcommand: str, passed: bool, metrics: dict,
                  cfg_hash: str) -> None:
    doc = {
        "subcommand": subcommand,
        "pass": bool(passed),
        "metrics": metrics,
        "config_hash": cfg_hash,
    }
    with open(path, "w", encoding="ascii", newline="\n") as f:
        json.dump(doc, f, sort_keys=True, indent=2)
        f.write("\n")


def write_field_binary(path, field: StripField) -> None:
    """Row-major float64 dump behind a 16-byte header (magic, n_sigma,
    column count, reserved word)."""
    vals = field.values
    n_sigma, n_cols = vals.shape
    with open(path, "wb") as f:
        f.write(_MAGIC + struct.pack("<III", n_sigma, n_cols, 0))
        f.write(np.ascontiguousarray(vals, dtype="<f8").tobytes())


def read_field_binary(path) -> tuple[int, int, np.ndarray]:
    """Header-checked inverse of :func:`write_field_binary`; returns
    ``(n_sigma, n_cols, values)``."""
    with open(path, "rb") as f:
        header = f.read(16)
        if len(header) != 16 or header[:4] != _MAGIC:
            raise ConfigurationError(f"{path}: not a CDN1 field file")
        n_sigma, n_cols, _ = struct.unpack("<III", header[4:])
        data = np.frombuffer(f.read(), dtype="<f8")
    if data.size != n_sigma * n_cols:
        raise ConfigurationError(
            f"{path}: payload holds {data.size} values, "
            f"header promises {n_sigma * n_cols}")
    return n_sigma, n_cols, data.reshape(n_sigma, n_cols).copy()


_PLOT_SCRIPT = '''#!/usr/bin/env python3
"""Quick-look plots for the CSV artifacts in this directory.

Optional helper; the package itself never imports matplotlib.
"""
import csv
import pathlib
import sys

try:
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit("matplotlib is not installed; install it to use this script")

here = pathlib.Path(__file__).parent
for path in sorted(here.glob("*.csv")):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    header, data = rows[0], rows[1:]
    if len(data) < 2:
        continue
    cols = list(zip(*[[float(x) for x in row] for row in data]))
    fig, ax = plt.subplots()
    for name, col in zip(header[1:], cols[1:]):
        ax.plot(cols[0], col, label=name)
    ax.set_xlabel(header[0])
    ax.legend()
    ax.set_title(path.name)
    fig.savefig(path.with_suffix(".png"))
    plt.close(fig)
    print(f"wrote {path.with_suffix('.png').name}")
'''


def write_plot_script(path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(_PLOT_SCRIPT)
