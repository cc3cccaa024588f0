"""Machine-readable certification reports.

Reports are plain dictionaries serialized to a canonical JSON form:
sorted keys, floats rendered with 17 significant digits (lossless for
binary64), infinities as the strings "+inf" / "-inf".  Identical inputs
produce byte-identical files.
"""

import hashlib
import json
import math

import numpy as np

from . import __version__


def _coerce(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def _format_float(x):
    if math.isnan(x):
        raise ValueError("reports must not contain NaN")
    if math.isinf(x):
        return '"+inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def _dumps(value):
    value = _coerce(value)
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return repr(value)
    if isinstance(value, float):
        return _format_float(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        items = []
        for key in sorted(value):
            if not isinstance(key, str):
                raise TypeError(f"report keys must be strings, got {key!r}")
            items.append(f"{json.dumps(key)}:{_dumps(value[key])}")
        return "{" + ",".join(items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_dumps(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__} into a report")


def canonical_json(report):
    return _dumps(report) + "\n"


def emit_report(report, path=None):
    """Serialize canonically; write to path when given, return the text."""
    text = canonical_json(report)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _revive(value):
    if isinstance(value, str):
        if value == "+inf":
            return math.inf
        if value == "-inf":
            return -math.inf
        return value
    if isinstance(value, list):
        return [_revive(v) for v in value]
    if isinstance(value, dict):
        return {k: _revive(v) for k, v in value.items()}
    return value


def parse_report(text):
    """Inverse of :func:`emit_report` (infinity strings revived)."""
    return _revive(json.loads(text))


def input_hash(data: bytes):
    return "sha256:" + hashlib.sha256(data).hexdigest()


def frame_summary(frame):
    return {
        "kind": frame.func.kind,
        "values": [float(v) for v in frame.values],
        "idx_above": [int(i) for i in frame.idx_above],
        "idx_at": [int(i) for i in frame.idx_at],
        "idx_below": [int(i) for i in frame.idx_below],
        "boundary_active": bool(frame.boundary_active),
    }


def kkt_summary(kkt):
    return {
        "stationarity_residual": float(kkt.stationarity_residual),
        "subgradient_residual": float(kkt.subgradient_residual),
        "tol": float(kkt.tol),
        "valid": bool(kkt.valid),
    }


def ssosc_summary(result):
    return {
        "margin": float(result.margin),
        "holds": bool(result.holds),
        "subspace_dim": int(result.subspace_dim),
        "scale": float(result.scale),
    }


def sweep_summary(entries):
    return [{
        "sigma": float(e.sigma),
        "min_eig": float(e.min_eig),
        "pd": bool(e.pd),
        "elements_tested": int(e.elements_tested),
        "exhaustive": bool(e.exhaustive),
    } for e in entries]


def base_report(command, problem_bytes, seed, tolerances):
    return {
        "command": command,
        "version": __version__,
        "input_hash": input_hash(problem_bytes),
        "seed": int(seed),
        "tolerances": tolerances.as_dict(),
    }
