"""Text formats for networks, phasor datasets and estimates.

Bus indices are 1-based in files and 0-based in memory. Floats are
written with 17 significant digits, enough for an exact round trip.
"""

from __future__ import annotations

import io as _io
import warnings
from pathlib import Path

import numpy as np

from .exceptions import FileFormatError, NetworkError
from .grid import NetworkSpec
from .simulation import PhasorDataset

__all__ = [
    "read_network",
    "write_network",
    "read_dataset",
    "write_dataset",
    "read_estimate",
    "write_estimate",
    "sniff_kind",
]

NETWORK_MAGIC = "gridspect-network v1"
DATASET_MAGIC = "gridspect-phasors v1"
_DATASET_KEYS = ("n", "N", "sigma_v", "sigma_i", "seed", "centered")


def _g(x):
    return format(float(x), ".17g")


def _parse_header(line, magic, path):
    parts = [p.strip() for p in line.split(",")]
    if parts[0] != magic:
        raise FileFormatError(f"expected header starting with {magic!r}, got {line.strip()!r}", path, 1)
    fields = {}
    for p in parts[1:]:
        key, sep, value = p.partition("=")
        if not sep or not key.strip():
            raise FileFormatError(f"malformed header field {p!r}", path, 1)
        fields[key.strip()] = value.strip()
    return fields


def _header_int(fields, key, path, minimum=1):
    try:
        v = int(fields[key])
    except KeyError:
        raise FileFormatError(f"header lacks {key}=", path, 1) from None
    except ValueError:
        raise FileFormatError(f"header field {key}={fields[key]!r} is not an integer", path, 1) from None
    if v < minimum:
        raise FileFormatError(f"header field {key}={v} must be >= {minimum}", path, 1)
    return v


def _header_float(fields, key, path):
    try:
        return float(fields[key])
    except KeyError:
        raise FileFormatError(f"header lacks {key}=", path, 1) from None
    except ValueError:
        raise FileFormatError(f"header field {key}={fields[key]!r} is not a number", path, 1) from None


def _read_lines(path):
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FileFormatError(f"cannot read file: {exc.strerror or exc}", path) from exc
    except UnicodeDecodeError as exc:
        raise FileFormatError(f"not UTF-8 text: {exc}", path) from exc


def _records(lines, path, start=1):
    """Yield (line number, fields) for non-blank, non-comment lines after the header."""
    for lineno, raw in enumerate(lines[start:], start=start + 1):
        text = raw.split("#", 1)[0].strip()
        if text:
            yield lineno, [f.strip() for f in text.split(",")]


def _bus(tok, n, path, lineno):
    try:
        i = int(tok)
    except ValueError:
        raise FileFormatError(f"bus index {tok!r} is not an integer", path, lineno) from None
    if not 1 <= i <= n:
        raise FileFormatError(f"bus index {i} outside 1..{n}", path, lineno)
    return i - 1


def _num(tok, path, lineno):
    try:
        return float(tok)
    except ValueError:
        raise FileFormatError(f"{tok!r} is not a number", path, lineno) from None


def sniff_kind(path):
    """``'network'``, ``'dataset'`` or ``'estimate'`` from the file header."""
    lines = _read_lines(path)
    if not lines:
        raise FileFormatError("empty file", path, 1)
    head = lines[0].split(",")[0].strip()
    if head == DATASET_MAGIC:
        return "dataset"
    if head == NETWORK_MAGIC:
        for _, rec in _records(lines, path):
            if rec[0] == "Y":
                return "estimate"
        return "network"
    raise FileFormatError(f"unrecognized header {lines[0].strip()!r}", path, 1)


def read_network(path):
    """Parse a network file into a :class:`NetworkSpec`.

    Raises :class:`FileFormatError` with the offending line for syntax
    problems and :class:`NetworkError` for an invalid network.
    """
    lines = _read_lines(path)
    if not lines:
        raise FileFormatError("empty file", path, 1)
    n = _header_int(_parse_header(lines[0], NETWORK_MAGIC, path), "n", path)
    branches, shunts = [], []
    for lineno, rec in _records(lines, path):
        kind = rec[0]
        if kind == "B":
            if len(rec) != 5:
                raise FileFormatError(f"branch line needs 5 fields, got {len(rec)}", path, lineno)
            i, j = _bus(rec[1], n, path, lineno), _bus(rec[2], n, path, lineno)
            branches.append((i, j, complex(_num(rec[3], path, lineno), _num(rec[4], path, lineno))))
        elif kind == "S":
            if len(rec) != 4:
                raise FileFormatError(f"shunt line needs 4 fields, got {len(rec)}", path, lineno)
            i = _bus(rec[1], n, path, lineno)
            shunts.append((i, complex(_num(rec[2], path, lineno), _num(rec[3], path, lineno))))
        elif kind == "Y":
            continue
        else:
            raise FileFormatError(f"unknown record type {kind!r}", path, lineno)
    try:
        return NetworkSpec(n, tuple(branches), tuple(shunts))
    except NetworkError as exc:
        raise NetworkError(f"{path}: {exc}") from exc


def _network_lines(spec):
    out = [f"{NETWORK_MAGIC}, n={spec.n}"]
    for i, j, y in spec.branches:
        out.append(f"B,{i + 1},{j + 1},{_g(y.real)},{_g(y.imag)}")
    for i, y in spec.shunts:
        out.append(f"S,{i + 1},{_g(complex(y).real)},{_g(complex(y).imag)}")
    return out


def write_network(spec, path, comments=()):
    lines = _network_lines(spec)
    lines[1:1] = [f"# {c}" for c in comments]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_dataset(dataset, path):
    """Write the measured samples; clean signals are not stored."""
    ds = dataset
    n, N = ds.n, ds.N
    seed = -1 if ds.seed is None else int(ds.seed)
    header = (
        f"{DATASET_MAGIC}, n={n}, N={N}, sigma_v={_g(ds.sigma_v)}, sigma_i={_g(ds.sigma_i)}, "
        f"seed={seed}, centered={int(bool(ds.centered))}"
    )
    # per sample: Re V1, Im V1, ..., Re Vn, Im Vn, Re I1, ..., Im In
    block = np.empty((N, 4 * n))
    block[:, 0 : 2 * n : 2] = ds.V_meas.real.T
    block[:, 1 : 2 * n : 2] = ds.V_meas.imag.T
    block[:, 2 * n :: 2] = ds.I_meas.real.T
    block[:, 2 * n + 1 :: 2] = ds.I_meas.imag.T
    buf = _io.StringIO()
    np.savetxt(buf, block, fmt="%.17g", delimiter=",")
    Path(path).write_text(header + "\n" + buf.getvalue(), encoding="utf-8")


def read_dataset(path):
    """Parse a dataset file into a :class:`PhasorDataset` (measured samples only)."""
    lines = _read_lines(path)
    if not lines:
        raise FileFormatError("empty file", path, 1)
    fields = _parse_header(lines[0], DATASET_MAGIC, path)
    missing = [k for k in _DATASET_KEYS if k not in fields]
    if missing:
        raise FileFormatError(f"header lacks {', '.join(k + '=' for k in missing)}", path, 1)
    n = _header_int(fields, "n", path)
    N = _header_int(fields, "N", path)
    sigma_v = _header_float(fields, "sigma_v", path)
    sigma_i = _header_float(fields, "sigma_i", path)
    seed = _header_int(fields, "seed", path, minimum=-1)
    centered = fields["centered"]
    if centered not in ("0", "1"):
        raise FileFormatError(f"centered must be 0 or 1, got {centered!r}", path, 1)
    rows = []
    for lineno, rec in _records(lines, path):
        if len(rec) != 4 * n:
            raise FileFormatError(f"expected {4 * n} values, got {len(rec)}", path, lineno)
        rows.append([_num(t, path, lineno) for t in rec])
    if len(rows) != N:
        raise FileFormatError(f"header says N={N} but file has {len(rows)} data lines", path)
    block = np.asarray(rows, dtype=float).reshape(N, 4 * n)
    V = (block[:, 0 : 2 * n : 2] + 1j * block[:, 1 : 2 * n : 2]).T
    I = (block[:, 2 * n :: 2] + 1j * block[:, 2 * n + 1 :: 2]).T
    return PhasorDataset(
        V_meas=V,
        I_meas=I,
        sigma_v=sigma_v,
        sigma_i=sigma_i,
        seed=None if seed < 0 else seed,
        centered=centered == "1",
    )


def write_estimate(Y, path, estimator, config=None):
    """Network-format file holding a dense estimate as ``Y,i,j,Re,Im`` records.

    Metadata comments name the estimator and echo its configuration.
    Branch and shunt records are omitted because a noisy dense estimate
    is generally not a valid network description.
    """
    Y = np.asarray(Y, dtype=complex)
    n = Y.shape[0]
    lines = [f"{NETWORK_MAGIC}, n={n}", f"# estimator: {estimator}"]
    for key in sorted(config or {}):
        lines.append(f"# config: {key}={config[key]}")
    for i in range(n):
        for j in range(n):
            lines.append(f"Y,{i + 1},{j + 1},{_g(Y[i, j].real)},{_g(Y[i, j].imag)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_estimate(path):
    """Return ``(Y, meta)`` where ``meta`` has ``estimator`` and a ``config`` dict of strings."""
    lines = _read_lines(path)
    if not lines:
        raise FileFormatError("empty file", path, 1)
    n = _header_int(_parse_header(lines[0], NETWORK_MAGIC, path), "n", path)
    meta = {"estimator": None, "config": {}}
    for raw in lines[1:]:
        s = raw.strip()
        if s.startswith("# estimator:"):
            meta["estimator"] = s.split(":", 1)[1].strip()
        elif s.startswith("# config:"):
            key, _, value = s.split(":", 1)[1].strip().partition("=")
            meta["config"][key.strip()] = value.strip()
    Y = np.zeros((n, n), dtype=complex)
    seen = np.zeros((n, n), dtype=bool)
    for lineno, rec in _records(lines, path):
        if rec[0] != "Y":
            continue
        if len(rec) != 5:
            raise FileFormatError(f"Y line needs 5 fields, got {len(rec)}", path, lineno)
        i, j = _bus(rec[1], n, path, lineno), _bus(rec[2], n, path, lineno)
        Y[i, j] = complex(_num(rec[3], path, lineno), _num(rec[4], path, lineno))
        seen[i, j] = True
    if not seen.all():
        missing = int((~seen).sum())
        warnings.warn(f"{path}: {missing} entries of Y missing, set to zero", stacklevel=2)
    return Y, meta
