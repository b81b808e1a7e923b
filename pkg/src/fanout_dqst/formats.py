"""Text and JSON serializers for count tables, estimates, confusion matrices,
density matrices and ZNE series.

Every format carries ``format_version: 1``.  Floats are written with 17
significant digits, which round-trips IEEE doubles exactly, so
``dumps(loads(text)) == text`` holds for all of them.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .dqst import ElementEstimate, RawMatrix
from .mitigation import ConfusionMatrix, ZneSeries
from .qcore import BitVector, DensityMatrix, num_qubits_for_dim
from .simkernel import CountTable, Setting

FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _header(fields: dict) -> list[str]:
    return [f"format_version: {FORMAT_VERSION}"] + [f"{k}: {v}" for k, v in fields.items()]


def _parse_header(lines: list[str], columns: str) -> tuple[dict, list[str]]:
    """Split ``key: value`` header lines from the body that follows the column line."""
    fields = {}
    for i, line in enumerate(lines):
        if line == columns:
            if fields.get("format_version") != str(FORMAT_VERSION):
                raise FormatError(f"unsupported format_version {fields.get('format_version')!r}")
            return fields, lines[i + 1 :]
        if line.startswith("#") or not line.strip():
            continue
        key, sep, value = line.partition(": ")
        if not sep:
            raise FormatError(f"malformed header line {line!r}")
        fields[key] = value
    raise FormatError(f"missing column line {columns!r}")


def _lines(text: str) -> list[str]:
    return text.rstrip("\n").split("\n")


# ---------------------------------------------------------------- count tables

COUNT_COLUMNS = "outcome_bits,meter_sign,count"


def dumps_counts(table: CountTable) -> str:
    n = table.n
    s = table.setting
    out = ["# fanout-dqst count table"]
    out += _header(
        {
            "n": n,
            "k": str(s.k) or "-",
            "basis": s.basis,
            "fold": s.fold,
            "shots": table.shots,
            "seed": "none" if table.seed is None else int(table.seed),
        }
    )
    out.append(COUNT_COLUMNS)
    for (a, sign), c in sorted(table.counts.items(), key=lambda kv: (kv[0][0], -kv[0][1])):
        if c:
            out.append(f"{format(a, f'0{n}b')},{'+1' if sign > 0 else '-1'},{c}")
    return "\n".join(out) + "\n"


def loads_counts(text: str) -> CountTable:
    fields, body = _parse_header(_lines(text), COUNT_COLUMNS)
    try:
        n = int(fields["n"])
        k = BitVector(n, 0) if fields["k"] == "-" else BitVector.from_string(fields["k"])
        setting = Setting(k, fields["basis"], int(fields["fold"]))
        shots = int(fields["shots"])
        seed = None if fields["seed"] == "none" else int(fields["seed"])
    except KeyError as exc:
        raise FormatError(f"count table header lacks {exc}") from None
    if k.n != n:
        raise FormatError("k length does not match n")
    counts = {}
    for line in body:
        bits, sign, c = line.split(",")
        if len(bits) != n:
            raise FormatError(f"outcome {bits!r} is not {n} bits long")
        counts[(int(bits, 2), 1 if sign == "+1" else -1)] = int(c)
    return CountTable(setting, shots, counts, seed)


# ------------------------------------------------------------------ estimates

ESTIMATE_COLUMNS = "row,col,part,re,im,stderr_re,stderr_im"


def dumps_estimates(estimates: Iterable[ElementEstimate]) -> str:
    ests = list(estimates)
    if not ests:
        raise FormatError("no estimates to write")
    out = _header({"n": ests[0].row.n})
    out.append(ESTIMATE_COLUMNS)
    for e in ests:
        out.append(
            ",".join(
                [str(e.row), str(e.col), e.part]
                + [fmt_float(v) for v in (e.value.real, e.value.imag, e.stderr_re, e.stderr_im)]
            )
        )
    return "\n".join(out) + "\n"


def loads_estimates(text: str) -> list[ElementEstimate]:
    fields, body = _parse_header(_lines(text), ESTIMATE_COLUMNS)
    n = int(fields["n"])
    out = []
    for line in body:
        row, col, part, re, im, sre, sim = line.split(",")
        r, c = BitVector.from_string(row), BitVector.from_string(col)
        if r.n != n or c.n != n:
            raise FormatError("estimate bit strings do not match n")
        out.append(ElementEstimate(r, c, complex(float(re), float(im)), float(sre), float(sim), part))
    return out


# ---------------------------------------------------------- confusion matrices

CONFUSION_COLUMNS = "entries"


def dumps_confusion(cm: ConfusionMatrix) -> str:
    out = _header({"mode": cm.mode, "n": cm.num_qubits})
    out.append(CONFUSION_COLUMNS)
    mats = cm.blocks if cm.mode == "per_qubit" else (cm.full,)
    for m in mats:
        for row in m:
            out.append(" ".join(fmt_float(v) for v in row))
    return "\n".join(out) + "\n"


def loads_confusion(text: str) -> ConfusionMatrix:
    fields, body = _parse_header(_lines(text), CONFUSION_COLUMNS)
    n, mode = int(fields["n"]), fields["mode"]
    rows = np.array([[float(v) for v in line.split()] for line in body])
    if mode == "per_qubit":
        if rows.shape != (2 * n, 2):
            raise FormatError(f"per-qubit confusion needs {2 * n} rows of 2 entries")
        return ConfusionMatrix(n, mode, tuple(rows[2 * q : 2 * q + 2] for q in range(n)))
    return ConfusionMatrix(n, mode, full=rows)


# ------------------------------------------------------------ density matrices


def dumps_matrix(mat, kind: str = "density_matrix") -> str:
    """JSON with ``n`` and row-major interleaved ``(re, im)`` values."""
    if isinstance(mat, (DensityMatrix, RawMatrix)):
        mat = mat.mat
    m = np.asarray(mat, dtype=complex)
    n = num_qubits_for_dim(m.shape[0])
    flat = np.stack([m.real.ravel(), m.imag.ravel()], axis=1).ravel()
    data = ", ".join(fmt_float(v) for v in flat)
    return (
        "{\n"
        f'  "format_version": {FORMAT_VERSION},\n'
        f'  "kind": {json.dumps(kind)},\n'
        f'  "n": {n},\n'
        f'  "data": [{data}]\n'
        "}\n"
    )


def loads_matrix(text: str) -> np.ndarray:
    obj = json.loads(text)
    if obj.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {obj.get('format_version')!r}")
    d = 1 << int(obj["n"])
    data = np.asarray(obj["data"], dtype=float)
    if data.size != 2 * d * d:
        raise FormatError(f"expected {2 * d * d} values, found {data.size}")
    return (data[0::2] + 1j * data[1::2]).reshape(d, d)


# -------------------------------------------------------------------- ZNE


def dumps_zne(series: ZneSeries) -> str:
    obj = {
        "format_version": FORMAT_VERSION,
        "points": [{"fold": f, "mean": m, "stderr": s} for f, m, s in series.points],
        "extrapolated": series.extrapolated,
        "slope": series.slope,
        "weighted": series.weighted,
        "instance_values": {str(f): list(v) for f, v in series.instance_values.items()},
    }
    # json writes floats with repr, the shortest exact round-trip form
    return json.dumps(obj, indent=2) + "\n"


def loads_zne(text: str) -> ZneSeries:
    obj = json.loads(text)
    if obj.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {obj.get('format_version')!r}")
    points = tuple((int(p["fold"]), float(p["mean"]), float(p["stderr"])) for p in obj["points"])
    values = {int(f): [float(x) for x in v] for f, v in obj["instance_values"].items()}
    return ZneSeries(points, float(obj["extrapolated"]), float(obj["slope"]), bool(obj["weighted"]), values)


# ---------------------------------------------------------------- file helpers


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def read_text(path) -> str:
    return Path(path).read_text(encoding="utf-8")
