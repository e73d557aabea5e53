"""CSV and JSON interchange formats.

Campaign CSV::

    specimen_id,strain_amplitude,cycles_to_initiation,gauge_area_mm2[,temperature_c,load_ratio]

Mesh CSV::

    element_id,area_mm2,strain_amplitude

Parsing is strict: unknown or missing columns, non-numeric, non-finite or
non-positive values and duplicate ids are rejected with the offending line
number.  Floats are written with ``repr`` so a write/read round trip is exact.
"""

from __future__ import annotations

import csv
import json
import math
from decimal import Decimal
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import Campaign, FitResult, TestRecord, fitted_scales
from .cmb import MaterialModel
from .exceptions import DomainError, SchemaError
from .ppp import SurfaceMesh

SCHEMA_VERSION = 1

CAMPAIGN_COLUMNS = ["specimen_id", "strain_amplitude", "cycles_to_initiation", "gauge_area_mm2"]
CAMPAIGN_OPTIONAL = ["temperature_c", "load_ratio"]
MESH_COLUMNS = ["element_id", "area_mm2", "strain_amplitude"]

STRAIN_UNITS = ("fraction", "percent")


def _check_unit(unit):
    if unit not in STRAIN_UNITS:
        raise SchemaError(f"strain unit must be one of {', '.join(STRAIN_UNITS)}, got {unit!r}")


def to_fraction(value, unit):
    """Strain as an absolute fraction.

    Percent values are shifted in decimal, so ``0.6`` percent becomes
    exactly the float ``0.006``.
    """
    _check_unit(unit)
    if unit == "fraction":
        return float(value)
    return float(Decimal(repr(float(value))).scaleb(-2))


def _read_rows(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read file: {exc.strerror}", path=path) from exc
    reader = csv.reader(text.splitlines())
    rows = [(reader.line_num, row) for row in reader]
    rows = [(n, r) for n, r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise SchemaError("file is empty; a header row is required", path=path)
    return path, rows


def _number(cell, column, line, path, positive=True):
    try:
        value = float(cell)
    except ValueError:
        raise SchemaError(f"column {column!r}: {cell!r} is not a number", line=line, path=path) from None
    if not math.isfinite(value):
        raise SchemaError(f"column {column!r}: value must be finite, got {cell!r}", line=line, path=path)
    if positive and value <= 0:
        raise SchemaError(f"column {column!r}: value must be positive, got {cell!r}", line=line, path=path)
    return value


def _check_header(header, required, optional, path, line):
    header = [h.strip() for h in header]
    allowed = [required + optional[:k] for k in range(len(optional) + 1)]
    if header not in allowed:
        expected = ",".join(required) + (f"[,{','.join(optional)}]" if optional else "")
        raise SchemaError(f"header must be {expected}, got {','.join(header)}", line=line, path=path)
    return header


def read_campaign_csv(path, strain_unit="fraction"):
    """Parse a campaign file into a :class:`Campaign`."""
    _check_unit(strain_unit)
    path, rows = _read_rows(path)
    header_line, header = rows[0]
    header = _check_header(header, CAMPAIGN_COLUMNS, CAMPAIGN_OPTIONAL, path, header_line)
    records, seen = [], {}
    for line, row in rows[1:]:
        if len(row) != len(header):
            raise SchemaError(f"expected {len(header)} fields, got {len(row)}", line=line, path=path)
        cells = dict(zip(header, (c.strip() for c in row)))
        sid = cells["specimen_id"]
        if not sid:
            raise SchemaError("specimen_id is empty", line=line, path=path)
        if sid in seen:
            raise SchemaError(f"duplicate specimen_id {sid!r} (first on line {seen[sid]})", line=line, path=path)
        seen[sid] = line
        strain = to_fraction(_number(cells["strain_amplitude"], "strain_amplitude", line, path), strain_unit)
        cycles = _number(cells["cycles_to_initiation"], "cycles_to_initiation", line, path)
        area = _number(cells["gauge_area_mm2"], "gauge_area_mm2", line, path)
        temp = cells.get("temperature_c")
        ratio = cells.get("load_ratio")
        temp = _number(temp, "temperature_c", line, path, positive=False) if temp else None
        ratio = _number(ratio, "load_ratio", line, path, positive=False) if ratio else None
        records.append(TestRecord(cycles, strain, area, sid, temp, ratio))
    if not records:
        raise SchemaError("campaign has a header but no records", path=path)
    return Campaign(records)


def write_campaign_csv(campaign, path):
    has_meta = any(r.temperature_c is not None or r.load_ratio is not None for r in campaign.records)
    header = CAMPAIGN_COLUMNS + (CAMPAIGN_OPTIONAL if has_meta else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in campaign.records:
            row = [r.specimen_id, repr(r.strain_amplitude), repr(r.cycles_to_initiation), repr(r.gauge_area)]
            if has_meta:
                row += ["" if r.temperature_c is None else repr(r.temperature_c),
                        "" if r.load_ratio is None else repr(r.load_ratio)]
            w.writerow(row)


def read_mesh_csv(path, strain_unit="fraction"):
    """Parse a surface mesh file into a :class:`SurfaceMesh`."""
    _check_unit(strain_unit)
    path, rows = _read_rows(path)
    header_line, header = rows[0]
    _check_header(header, MESH_COLUMNS, [], path, header_line)
    ids, areas, strains, seen = [], [], [], {}
    for line, row in rows[1:]:
        if len(row) != len(MESH_COLUMNS):
            raise SchemaError(f"expected {len(MESH_COLUMNS)} fields, got {len(row)}", line=line, path=path)
        eid, area, strain = (c.strip() for c in row)
        if not eid:
            raise SchemaError("element_id is empty", line=line, path=path)
        if eid in seen:
            raise SchemaError(f"duplicate element_id {eid!r} (first on line {seen[eid]})", line=line, path=path)
        seen[eid] = line
        ids.append(eid)
        areas.append(_number(area, "area_mm2", line, path))
        strains.append(to_fraction(_number(strain, "strain_amplitude", line, path), strain_unit))
    if not ids:
        raise SchemaError("mesh has a header but no elements", path=path)
    return SurfaceMesh(areas, strains, ids)


def write_mesh_csv(mesh, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MESH_COLUMNS)
        for eid, a, s in zip(mesh.ids, mesh.areas, mesh.strains):
            w.writerow([eid, repr(float(a)), repr(float(s))])


def write_table(path, header, rows):
    """Write numeric rows as CSV with exact float text."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _strict(value):
    # NaN/inf are not JSON; undefined numbers are written as null
    if isinstance(value, dict):
        return {k: _strict(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_strict(v) for v in value]
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_json(path, payload):
    payload = _strict({"schema_version": SCHEMA_VERSION, "probcmb_version": __version__, **payload})
    Path(path).write_text(json.dumps(payload, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _float(value):
    return float("nan") if value is None else float(value)


def read_json(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SchemaError(f"cannot read file: {exc.strerror}", path=path) from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", line=exc.lineno, path=path) from exc
    if not isinstance(data, dict):
        raise SchemaError("top-level JSON value must be an object", path=path)
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r}", path=path)
    return data


def material_from_dict(d, where="material"):
    keys = ("E", "sigma_f", "b", "eps_f", "c", "m")
    missing = [k for k in keys if k not in d]
    if missing:
        raise SchemaError(f"{where}: missing parameters {', '.join(missing)}")
    try:
        return MaterialModel.from_values(*(float(d[k]) for k in keys), a_ref=float(d.get("a_ref", 1.0)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise SchemaError(f"{where}: {exc}") from exc


def fit_to_dict(fit, config=None):
    out = {
        "theta": fit.theta_hat.as_dict(),
        "log_likelihood": fit.log_likelihood,
        "initial_log_likelihood": fit.initial_log_likelihood,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "gradient_norm": fit.gradient_norm,
        "n_records": int(len(fit.eta_hat)),
        "message": fit.message,
        "warnings": list(fit.warnings),
    }
    if config is not None:
        out["config"] = config
    return out


def fit_from_dict(data, campaign=None):
    """Rebuild a :class:`FitResult`; fitted scales are recomputed when a campaign is given."""
    if "theta" not in data:
        raise SchemaError("fit JSON lacks a 'theta' object")
    theta = material_from_dict(data["theta"], where="theta")
    n = int(data.get("n_records", 0))
    if campaign is not None:
        if n and n != len(campaign):
            raise DomainError(f"fit was made on {n} records but the campaign has {len(campaign)}")
        eta = fitted_scales(theta, campaign)
    else:
        eta = np.empty(0)
    return FitResult(
        theta_hat=theta,
        log_likelihood=_float(data.get("log_likelihood")),
        converged=bool(data.get("converged", False)),
        iterations=int(data.get("iterations", 0)),
        eta_hat=eta,
        initial_log_likelihood=_float(data.get("initial_log_likelihood")),
        gradient_norm=_float(data.get("gradient_norm")),
        message=str(data.get("message", "")),
        warnings=list(data.get("warnings", [])),
    )
