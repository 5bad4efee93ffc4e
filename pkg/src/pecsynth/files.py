"""File formats: JSON model/certificate/realization files with named,
explicitly-dimensioned matrices, and CSV trace export at 17 significant
digits so re-runs round-trip exactly."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from pecsynth.model import BaseController, DisturbanceBounds, LtiPlant
from pecsynth.set_analysis import EllipsoidCertificate
from pecsynth.simulator import SimTrace
from pecsynth.synthesis import SynthesisResult

FMT = "%.17g"


def mat_to_obj(M):
    M = np.asarray(M, dtype=float)
    return {"rows": M.shape[0], "cols": M.shape[1], "data": M.reshape(-1).tolist()}


def mat_from_obj(obj):
    M = np.asarray(obj["data"], dtype=float).reshape(obj["rows"], obj["cols"])
    return M


def save_model(path, plant: LtiPlant, base: BaseController, L, bounds: DisturbanceBounds,
               observer_poles=None, meta=None):
    doc = {
        "kind": "pecsynth-model",
        "plant": {k: mat_to_obj(getattr(plant, k)) for k in ("A", "B", "C", "G", "H")},
        "controller": {k: mat_to_obj(getattr(base, k)) for k in ("A_c", "B_c", "C_c", "D_c")},
        "observer_gain": mat_to_obj(L),
        "bounds": {"W_w": mat_to_obj(bounds.W_w), "W_v": mat_to_obj(bounds.W_v)},
    }
    if observer_poles is not None:
        doc["observer_poles"] = list(map(float, observer_poles))
    if meta:
        doc["meta"] = meta
    Path(path).write_text(json.dumps(doc, indent=1))


def load_model(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("kind") != "pecsynth-model":
        raise ValueError(f"{path}: not a pecsynth model file")
    plant = LtiPlant(**{k: mat_from_obj(v) for k, v in doc["plant"].items()})
    base = BaseController(**{k: mat_from_obj(v) for k, v in doc["controller"].items()})
    L = mat_from_obj(doc["observer_gain"])
    bounds = DisturbanceBounds(
        mat_from_obj(doc["bounds"]["W_w"]), mat_from_obj(doc["bounds"]["W_v"])
    )
    return plant, base, L, bounds


def save_certificate(path, cert: EllipsoidCertificate, extra=None):
    doc = {
        "kind": "pecsynth-certificate",
        "program": cert.program,
        "P": mat_to_obj(cert.P),
        "alpha": list(cert.alpha),
        "multipliers": {k: float(v) for k, v in cert.multipliers.items()},
        "objective": cert.objective,
        "residual": cert.residual,
        "scenario": cert.scenario,
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1))


def load_certificate(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("kind") != "pecsynth-certificate":
        raise ValueError(f"{path}: not a pecsynth certificate file")
    cert = EllipsoidCertificate(
        P=mat_from_obj(doc["P"]),
        alpha=tuple(doc["alpha"]),
        multipliers=doc["multipliers"],
        objective=doc["objective"],
        program=doc["program"],
        residual=doc["residual"],
        scenario=doc.get("scenario", ""),
    )
    return cert, doc


def save_realization(path, res: SynthesisResult, realized):
    doc = {
        "kind": "pecsynth-realization",
        "scenario": res.scenario,
        "F": mat_to_obj(res.F_star),
        "Y": mat_to_obj(res.Y),
        "trace": res.trace_value,
        "baseline_trace": res.baseline_trace,
        "alpha": res.alpha,
        "baseline_alpha": res.baseline_alpha,
        "controller": {k: mat_to_obj(getattr(realized, k))
                       for k in ("A_c", "B_c", "C_c", "D_c")},
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_realization(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("kind") != "pecsynth-realization":
        raise ValueError(f"{path}: not a pecsynth realization file")
    return {
        "scenario": doc["scenario"],
        "F": mat_from_obj(doc["F"]),
        "Y": mat_from_obj(doc["Y"]),
        "trace": doc["trace"],
        "baseline_trace": doc["baseline_trace"],
        "alpha": doc["alpha"],
        "controller": {k: mat_from_obj(v) for k, v in doc["controller"].items()},
    }


def trace_to_csv(path, trace: SimTrace):
    """One row per step: time, states, inputs, residuals, stealth, alarm."""
    n_x = trace.x.shape[1]
    n_u = trace.u.shape[1]
    n_y = trace.r.shape[1]
    header = (["time"] + [f"x{i+1}" for i in range(n_x)] + [f"u{i+1}" for i in range(n_u)]
              + [f"r{i+1}" for i in range(n_y)] + ["stealth", "alarm"])
    cols = np.column_stack([trace.t, trace.x, trace.u, trace.r, trace.stealth,
                            trace.alarm.astype(float)])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in cols:
            fh.write(",".join(FMT % v for v in row) + "\n")


def table2_to_csv(path, rows):
    """rows: list of dicts with sensors, logdet_Pe_bar, trace_base, trace_opt, F."""
    with open(path, "w") as fh:
        fh.write("sensors,logdet_Pe_bar,trace_base,trace_opt,F_entries\n")
        for row in rows:
            f_entries = ";".join(FMT % v for v in np.asarray(row["F"]).reshape(-1))
            fh.write(",".join([
                '"' + row["sensors"] + '"',
                FMT % row["logdet_Pe_bar"],
                FMT % row["trace_base"],
                FMT % row["trace_opt"],
                '"' + f_entries + '"',
            ]) + "\n")
