"""CSV/JSON writers with exact float round-tripping."""

import csv
import json
import math

import numpy as np


def fmt(x):
    """17 significant digits: enough to round-trip any double."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan literals
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_triplets(path, triplets, header_info):
    """``(i, j, mass)`` rows preceded by a ``# {json}`` header line."""
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(_jsonable(header_info), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_atom_index", "col_atom_index", "mass"])
        for i, j, mass in triplets:
            w.writerow([int(i), int(j), fmt(mass)])


def read_triplets(path):
    with open(path, newline="") as fh:
        header = json.loads(fh.readline()[2:])
        rows = [(int(r["row_atom_index"]), int(r["col_atom_index"]), float(r["mass"]))
                for r in csv.DictReader(fh)]
    return header, rows
