"""CSV and JSON output with atomic writes and fixed number formatting."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .spectra import SpectrumDecomposition

__all__ = ["SPECTRUM_HEADER", "write_atomic", "spectrum_csv", "write_spectrum_csv",
           "reference_csv", "write_json", "read_spectrum_csv"]

SPECTRUM_HEADER = "detuning,background,scattered,interference,total"
_FMT = "{:.17g}"


def write_atomic(path: str | os.PathLike, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _rows(columns) -> str:
    cols = [np.asarray(c, dtype=float) for c in columns]
    lines = [",".join(_FMT.format(float(x)) for x in row) for row in zip(*cols)]
    return "\n".join(lines) + "\n"


def spectrum_csv(dec: SpectrumDecomposition, detuning_unit: float = 1.0,
                 metadata: dict | None = None) -> str:
    """CSV text of a decomposition in the 2*pi*S convention.

    Detunings are divided by ``detuning_unit`` (pass gamma to write them in
    units of gamma).  ``metadata`` becomes a leading ``# key=value;...`` row.
    """
    head = ""
    if metadata:
        head = "# " + ";".join(f"{k}={_FMT.format(v) if isinstance(v, float) else v}"
                               for k, v in metadata.items()) + "\n"
    return head + SPECTRUM_HEADER + "\n" + _rows(
        [dec.detunings / detuning_unit, dec.background, dec.scattered, dec.interference, dec.total])


def write_spectrum_csv(path, dec: SpectrumDecomposition, detuning_unit: float = 1.0,
                       metadata: dict | None = None) -> Path:
    return write_atomic(path, spectrum_csv(dec, detuning_unit, metadata))


def reference_csv(dec: SpectrumDecomposition, detuning_unit: float = 1.0) -> str:
    """Background and background + scattered reference curves."""
    return "detuning,background,background_plus_scattered\n" + _rows(
        [dec.detunings / detuning_unit, dec.background, dec.background + dec.scattered])


def write_json(path, obj) -> Path:
    return write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_spectrum_csv(path) -> dict[str, np.ndarray]:
    """Columns of a spectrum CSV by name (comment rows skipped)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    data = np.genfromtxt(lines, delimiter=",", names=True)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}
