"""Canonical JSON / CSV writers.

Every file the library emits goes through these helpers so that a rerun with
the same configuration and seed is byte-identical: keys are sorted, floats use
``repr`` (shortest round-trip form, >= 12 significant digits), and no
timestamps or machine state leak into result files.
"""

import json

import numpy as np


def _plainify(obj):
    """Convert numpy scalars/arrays to plain Python types for json."""
    if isinstance(obj, dict):
        return {k: _plainify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plainify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plainify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def canonical_json(obj) -> str:
    """Serialize ``obj`` deterministically (sorted keys, round-trip floats)."""
    return json.dumps(_plainify(obj), sort_keys=True, indent=2,
                      separators=(",", ": ")) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(canonical_json(obj))


def fmt_float(x) -> str:
    """Round-trip decimal representation of a float."""
    return repr(float(x))


def write_csv(path, header, rows, preamble=None):
    """Write a CSV file with deterministic float formatting.

    ``preamble`` is an optional list of comment lines (without the leading
    ``#``) placed before the header row.
    """
    with open(path, "w") as fh:
        for line in preamble or []:
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for cell in row:
                if isinstance(cell, (float, np.floating)):
                    cells.append(fmt_float(cell))
                else:
                    cells.append(str(cell))
            fh.write(",".join(cells) + "\n")
