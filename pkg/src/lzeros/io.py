"""File formats: CSV/JSON serialization, config loading, report checksums.

All writers format floats with ``repr`` (shortest round-trip) and emit keys
in sorted order, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .amplitude import EnergyDistribution
from .envelope import Envelope
from .errors import ConfigError
from .zerofinder import Zero, ZeroSet

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------- distributions

def write_distribution_csv(dist: EnergyDistribution, path):
    """CSV with header energy,population, one level per row, ascending."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["energy", "population"])
        for e, k in zip(dist.energies, dist.populations):
            w.writerow([_fmt(e), _fmt(k)])


def read_distribution_csv(path) -> EnergyDistribution:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        if [h.strip() for h in header[:2]] != ["energy", "population"]:
            raise ConfigError(f"{path}: expected header energy,population")
        rows = [(float(a), float(b)) for a, b, *_ in r if a.strip()]
    if not rows:
        raise ConfigError(f"{path}: no levels")
    e, k = zip(*rows)
    return EnergyDistribution(e, k, label=str(path))


# -------------------------------------------------------------------- zero sets

def write_zeroset_csv(zs: ZeroSet, path):
    """CSV schema beta,t,multiplicity,provenance,chain_id."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "t", "multiplicity", "provenance", "chain_id"])
        for z in zs:
            w.writerow([_fmt(z.beta), _fmt(z.t), z.multiplicity, z.provenance,
                        "" if z.chain_id is None else z.chain_id])


def read_zeroset_csv(path) -> ZeroSet:
    zeros = []
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.DictReader(fh)
        for row in r:
            zeros.append(Zero(beta=float(row["beta"]), t=float(row["t"]),
                              multiplicity=int(row["multiplicity"]),
                              provenance=row["provenance"],
                              chain_id=int(row["chain_id"]) if row["chain_id"] else None))
    return ZeroSet(zeros).sort()


def zeroset_payload(zs: ZeroSet) -> dict:
    meta = {}
    for key, val in zs.meta.items():
        if key == "curves":
            continue  # polylines ship in their own CSV
        meta[key] = list(val) if isinstance(val, tuple) else val
    return {
        "meta": meta,
        "zeros": [
            {"beta": z.beta, "t": z.t, "multiplicity": z.multiplicity,
             "provenance": z.provenance, "chain_id": z.chain_id,
             "multilevel": z.multilevel}
            for z in zs
        ],
    }


def write_zeroset_json(zs: ZeroSet, path):
    write_json(zeroset_payload(zs), path)


# --------------------------------------------------------------------- envelope

def envelope_payload(env: Envelope) -> dict:
    return {
        "members": list(env.members),
        "segments": [
            {"a": s.a, "b": s.b, "beta": s.beta, "period": s.period}
            for s in env.segments
        ],
        "groups": [
            {"indices": list(g.indices), "kappa": g.kappa, "beta": g.beta,
             "period": g.period, "equidistant": g.equidistant,
             "spacing": g.spacing}
            for g in env.groups
        ],
    }


def write_envelope_json(env: Envelope, path):
    write_json(envelope_payload(env), path)


# ------------------------------------------------------------------ other CSVs

def write_delta_eta_csv(rows_by_width: dict, path):
    """Rows (width, box_center_t, delta_eta, eta_exact, eta_approx)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["width", "box_center_t", "delta_eta", "eta_exact", "eta_approx"])
        for width in sorted(rows_by_width):
            for center_t, value, eta_e, eta_a, _box in rows_by_width[width]:
                w.writerow([_fmt(width), _fmt(center_t),
                            "" if value is None else _fmt(value), eta_e, eta_a])


def write_modes_csv(quench, path):
    """Per-momentum dump: q, eps_i, eps_f, |Z|, W."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "eps_i", "eps_f", "abs_Z", "W"])
        for m in quench.modes:
            w.writerow([_fmt(m.q), _fmt(m.eps_i), _fmt(m.eps_f),
                        _fmt(abs(m.Z)), _fmt(m.W)])


def write_decay_csv(ts, abs_l, decay, path):
    """Real-time-axis table: |L_U| against the dephasing decay envelope."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "abs_L_unbounded", "theta_decay"])
        for tv, lv, dv in zip(ts, abs_l, decay):
            w.writerow([_fmt(tv), _fmt(lv), _fmt(dv)])


def write_polylines_csv(polylines, path, header=("x", "y", "id")):
    """Flat (x, y, id) dump of a list of complex polylines."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(header))
        for pid, line in enumerate(polylines):
            for z in np.asarray(line, dtype=complex):
                w.writerow([_fmt(z.real), _fmt(z.imag), pid])


# --------------------------------------------------------------- config / json

def write_json(payload, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path) -> dict:
    """TOML (primary) or JSON run configuration."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        if p.suffix.lower() == ".json":
            return json.loads(p.read_text(encoding="utf-8"))
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def report_schema() -> dict:
    with resources.files("lzeros.schemas").joinpath("report.schema.json").open("rb") as fh:
        return json.load(fh)


def validate_report(payload: dict):
    import jsonschema

    jsonschema.validate(payload, report_schema())
