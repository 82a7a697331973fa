"""JSON and CSV persistence.

Complex numbers are stored as parallel ``*_re`` / ``*_im`` arrays.  Every
loader validates its schema and raises :class:`SchemaError` with a
location string on violation.
"""

import csv
import io
import json
import math

import numpy as np

from .errors import InvalidInputError
from .fundamental import PotentialGrid
from .gl_inverse import make_gl_data
from .models import model_from_descriptor
from .spectral import BoundaryParams, SpectrumEntry, SpectrumList

TRACE_HEADER = ("mu_re", "mu_im", "delta_re", "delta_im")


class SchemaError(InvalidInputError):
    """Input document does not follow the expected schema."""

    def __init__(self, location, message):
        self.location = location
        super().__init__(f"{location}: {message}")


def _clean(obj):
    """Recursively convert numpy scalars and arrays to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), indent=1, sort_keys=True)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))
        fh.write("\n")


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}:{exc.colno}", f"malformed JSON ({exc.msg})") from None
    except OSError as exc:
        raise SchemaError(str(path), f"cannot read file ({exc.strerror})") from None


def _require(doc, key, where):
    if not isinstance(doc, dict):
        raise SchemaError(where, "expected a JSON object")
    if key not in doc:
        raise SchemaError(where, f"missing field {key!r}")
    return doc[key]


def _number_list(doc, key, where, length=None):
    vals = _require(doc, key, where)
    if not isinstance(vals, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals
    ):
        raise SchemaError(f"{where}.{key}", "expected a list of numbers")
    if length is not None and len(vals) != length:
        raise SchemaError(f"{where}.{key}", f"expected {length} values, got {len(vals)}")
    return np.asarray(vals, dtype=float)


def _int(doc, key, where, default=None):
    if default is not None and key not in doc:
        return default
    v = _require(doc, key, where)
    if not isinstance(v, int) or isinstance(v, bool):
        raise SchemaError(f"{where}.{key}", "expected an integer")
    return v


def _float(doc, key, where, default=None):
    if default is not None and key not in doc:
        return float(default)
    v = _require(doc, key, where)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise SchemaError(f"{where}.{key}", "expected a number")
    return float(v)


# potential

def potential_to_json(q):
    return {
        "point_count": q.point_count,
        "samples_re": q.samples.real.tolist(),
        "samples_im": q.samples.imag.tolist(),
    }


def potential_from_json(doc, where="potential"):
    n = _int(doc, "point_count", where)
    re = _number_list(doc, "samples_re", where, n)
    im = _number_list(doc, "samples_im", where, n)
    try:
        return PotentialGrid(re + 1j * im)
    except InvalidInputError as exc:
        raise SchemaError(where, str(exc)) from None


# boundary

def boundary_to_json(bc):
    return {"b_re": bc.b.real, "b_im": bc.b.imag, "theta": bc.theta}


def boundary_from_json(doc, where="boundary"):
    theta = _int(doc, "theta", where)
    b = complex(_float(doc, "b_re", where, 0.0), _float(doc, "b_im", where, 0.0))
    try:
        return BoundaryParams(b, theta)
    except InvalidInputError as exc:
        raise SchemaError(where, str(exc)) from None


# spectrum

def spectrum_to_json(spec):
    return {
        "entries": [
            {"n": e.n, "mu_re": e.mu.real, "mu_im": e.mu.imag, "mult": e.multiplicity}
            for e in spec.entries
        ],
        "meta": _clean(spec.meta),
    }


def spectrum_from_json(doc, where="spectrum"):
    raw = _require(doc, "entries", where)
    if not isinstance(raw, list):
        raise SchemaError(f"{where}.entries", "expected a list")
    entries = []
    for i, e in enumerate(raw):
        loc = f"{where}.entries[{i}]"
        entries.append(
            SpectrumEntry(_int(e, "n", loc), complex(_float(e, "mu_re", loc), _float(e, "mu_im", loc)), _int(e, "mult", loc))
        )
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise SchemaError(f"{where}.meta", "expected an object")
    return SpectrumList(tuple(entries), meta)


# models

def model_from_json(doc, where="model"):
    try:
        return model_from_descriptor(doc)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(where, f"invalid model descriptor ({exc})") from None


# inverse data

def gldata_to_json(data):
    return {
        "N": data.N,
        "nodes": data.mu_seq.tolist(),
        "c_re": data.c_seq.real.tolist(),
        "c_im": data.c_seq.imag.tolist(),
        "target": data.target.descriptor(),
        "boundary": boundary_to_json(data.bc),
        "meta": _clean(data.meta),
    }


def gldata_from_json(doc, where="gldata"):
    """Rebuild GLData; weights are recomputed from nodes and constants."""
    N = _int(doc, "N", where)
    nodes = _number_list(doc, "nodes", where)
    c = _number_list(doc, "c_re", where, nodes.size) + 1j * _number_list(doc, "c_im", where, nodes.size)
    target = model_from_json(_require(doc, "target", where), f"{where}.target")
    bc = boundary_from_json(doc.get("boundary", {"b_re": 0.0, "b_im": 0.0, "theta": 0}), f"{where}.boundary")
    if N > nodes.size:
        raise SchemaError(f"{where}.N", "N exceeds the number of nodes")
    expected = np.arange(N + 1, nodes.size + 1, dtype=float)
    if not np.array_equal(nodes[N:], expected):
        raise SchemaError(f"{where}.nodes", "nodes past N must be the integers N+1, N+2, ...")
    data = make_gl_data(target, bc, nodes[:N], nodes.size, meta=doc.get("meta", {}))
    if np.max(np.abs(data.c_seq - c), initial=0.0) > 1e-12:
        raise SchemaError(f"{where}.c_re", "constants do not match the target at the nodes")
    return data


# determinant traces

def trace_to_csv(mus, deltas):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for mu, d in zip(np.asarray(mus, dtype=complex), np.asarray(deltas, dtype=complex)):
        w.writerow([repr(float(mu.real)), repr(float(mu.imag)), repr(float(d.real)), repr(float(d.imag))])
    return buf.getvalue()


def trace_from_csv(text, where="trace"):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != TRACE_HEADER:
        raise SchemaError(f"{where}:1", f"header must be {','.join(TRACE_HEADER)}")
    mus, deltas = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise SchemaError(f"{where}:{i}", "expected 4 columns")
        try:
            a, b, c, d = map(float, row)
        except ValueError:
            raise SchemaError(f"{where}:{i}", "non-numeric value") from None
        mus.append(complex(a, b))
        deltas.append(complex(c, d))
    return np.array(mus, dtype=complex), np.array(deltas, dtype=complex)


def write_trace(path, mus, deltas):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(trace_to_csv(mus, deltas))


def read_trace(path):
    with open(path, encoding="utf-8") as fh:
        return trace_from_csv(fh.read(), str(path))


def load_potential(path):
    return potential_from_json(read_json(path), str(path))


def save_potential(path, q):
    write_json(path, potential_to_json(q))
