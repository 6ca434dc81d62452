"""JSON serialization for matrices, bases, tensors, scenarios and reports.

Floats are written with Python's shortest round-trip repr, so a parse followed by
a dump reproduces the file byte for byte.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .bases import OpBasis
from .choi import ChoiMap
from .process_tensor import ProcessTensor
from .simulator import EnvModel, Scenario, XStateParams, xstate


class SchemaError(ValueError):
    """Malformed JSON input; the message names the offending field."""


def _need(obj: dict, key: str, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    return obj[key]


# --- matrices ---------------------------------------------------------------


def cmatrix_to_json(m) -> dict:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def cmatrix_from_json(obj, where: str = "matrix") -> np.ndarray:
    rows = _need(obj, "rows", where)
    cols = _need(obj, "cols", where)
    data = _need(obj, "data", where)
    if not (isinstance(rows, int) and isinstance(cols, int) and rows > 0 and cols > 0):
        raise SchemaError(f"{where}: rows and cols must be positive integers")
    if len(data) != rows * cols:
        raise SchemaError(f"{where}: data has {len(data)} entries, expected {rows * cols}")
    try:
        vals = [complex(float(re), float(im)) for re, im in data]
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: entries must be [re, im] pairs") from exc
    return np.array(vals, dtype=complex).reshape(rows, cols)


def _complex(x, where: str) -> complex:
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, (int, float)):
        return complex(x)
    raise SchemaError(f"{where}: expected a number or an [re, im] pair")


# --- bases and tensors ------------------------------------------------------


def basis_to_json(b: OpBasis) -> dict:
    return {
        "label": b.label,
        "d_in": b.d_in,
        "d_out": b.d_out,
        "names": list(b.names),
        "elements": [cmatrix_to_json(e.choi) for e in b.elements],
        "duals": [cmatrix_to_json(t) for t in b.duals],
    }


def basis_from_json(obj, where: str = "basis") -> OpBasis:
    els = _need(obj, "elements", where)
    d_in = obj.get("d_in")
    d_out = obj.get("d_out")
    mats = [cmatrix_from_json(e, f"{where}.elements[{i}]") for i, e in enumerate(els)]
    if not mats:
        raise SchemaError(f"{where}: no elements")
    if d_in is None or d_out is None:
        d_out = d_in = int(round(np.sqrt(mats[0].shape[0])))
    maps = [ChoiMap(m, d_in, d_out) for m in mats]
    label = obj.get("label", "custom")
    if "duals" in obj:
        duals = tuple(cmatrix_from_json(t, f"{where}.duals[{i}]") for i, t in enumerate(obj["duals"]))
        return OpBasis(tuple(maps), duals, label, tuple(obj.get("names", ())))
    return OpBasis.from_elements(maps, label, obj.get("names", ()))


def tensor_to_json(pt: ProcessTensor) -> dict:
    out = {
        "choi": cmatrix_to_json(pt.choi),
        "n_steps": pt.n_steps,
        "d_sys": pt.d_sys,
        "basis_label": pt.basis_label,
        "leg_order": pt.leg_order,
        "step_bases": [basis_to_json(b) for b in pt.step_bases],
    }
    if pt.default_map is not None:
        out["default_map"] = cmatrix_to_json(pt.default_map.choi)
    return out


def tensor_from_json(obj) -> ProcessTensor:
    choi = cmatrix_from_json(_need(obj, "choi", "tensor"), "tensor.choi")
    d = _need(obj, "d_sys", "tensor")
    n = _need(obj, "n_steps", "tensor")
    bases = [basis_from_json(b, f"tensor.step_bases[{i}]")
             for i, b in enumerate(_need(obj, "step_bases", "tensor"))]
    if len(bases) != n:
        raise SchemaError("tensor: n_steps does not match step_bases")
    default = None
    if "default_map" in obj:
        default = ChoiMap(cmatrix_from_json(obj["default_map"], "tensor.default_map"), d, d)
    try:
        return ProcessTensor(choi, d, bases, obj.get("basis_label", "custom"), default)
    except ValueError as exc:
        raise SchemaError(f"tensor: {exc}") from exc


# --- scenarios -----------------------------------------------------------------


def xparams_to_json(p: XStateParams) -> dict:
    c = lambda z: [float(np.real(z)), float(np.imag(z))]
    return {"a11": p.a11, "a22": p.a22, "a33": p.a33, "a44": p.a44,
            "a14": c(p.a14), "a23": c(p.a23)}


def scenario_from_json(obj) -> Scenario:
    d = _need(obj, "d_sys", "scenario")
    env_obj = _need(obj, "env", "scenario")
    variant = _need(env_obj, "variant", "scenario.env")
    unitaries = tuple(cmatrix_from_json(u, f"scenario.env.unitaries[{i}]")
                      for i, u in enumerate(env_obj.get("unitaries", [])))
    try:
        env = EnvModel(variant, omega=float(env_obj.get("omega", 1.0)),
                       g=float(env_obj.get("g", 1.0)), gamma=float(env_obj.get("gamma", 1.0)),
                       unitaries=unitaries, d_env=env_obj.get("d_env"))
    except ValueError as exc:
        raise SchemaError(f"scenario.env: {exc}") from exc
    init = _need(obj, "initial", "scenario")
    kind = _need(init, "type", "scenario.initial")
    try:
        if kind == "x-state":
            p = _need(init, "params", "scenario.initial")
            params = XStateParams(
                float(p.get("a11", 0)), float(p.get("a22", 0)), float(p.get("a33", 0)),
                float(p.get("a44", 0)), _complex(p.get("a14", 0), "a14"),
                _complex(p.get("a23", 0), "a23"))
            rho = xstate(params)
        elif kind == "matrix":
            rho = cmatrix_from_json(_need(init, "value", "scenario.initial"), "scenario.initial.value")
        elif kind == "product":
            rs = cmatrix_from_json(_need(init, "rho_s", "scenario.initial"), "scenario.initial.rho_s")
            if variant == "shallow_pocket" and "rho_e" not in init:
                rho = rs
            else:
                re = cmatrix_from_json(_need(init, "rho_e", "scenario.initial"),
                                       "scenario.initial.rho_e")
                rho = np.kron(rs, re)
        else:
            raise SchemaError(f"scenario.initial: unknown type {kind!r}")
        default = None
        if "default_map" in obj:
            default = ChoiMap(cmatrix_from_json(obj["default_map"], "scenario.default_map"), d, d)
        return Scenario(d, env, rho, tuple(_need(obj, "times", "scenario")),
                        obj.get("label", ""), default)
    except SchemaError:
        raise
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"scenario: {exc}") from exc


def scenario_to_json(sc: Scenario) -> dict:
    env = {"variant": sc.env.variant}
    if sc.env.variant == "heisenberg_qubit":
        env["omega"] = sc.env.omega
    elif sc.env.variant == "shallow_pocket":
        env.update(g=sc.env.g, gamma=sc.env.gamma)
    elif sc.env.variant == "matrix_unitary":
        env.update(d_env=sc.env.d_env, unitaries=[cmatrix_to_json(u) for u in sc.env.unitaries])
    out = {
        "d_sys": sc.d_sys,
        "env": env,
        "initial": {"type": "matrix", "value": cmatrix_to_json(sc.initial)},
        "times": list(sc.times),
        "label": sc.label,
    }
    if sc.default_map is not None:
        out["default_map"] = cmatrix_to_json(sc.default_map.choi)
    return out


# --- reports ------------------------------------------------------------------------


def correlation_report(w) -> dict:
    return {"type": "correlation", "detected": bool(w.detected), "norm": w.norm,
            "basis_label": w.basis_label, "k_matrix": cmatrix_to_json(w.k_matrix)}


def markov_report(r, basis_label: str) -> dict:
    return {
        "type": "markov",
        "detected": not r.is_markovian_within_test,
        "violations": [
            {"history_1": a, "history_2": b, "break_1": c, "break_2": d_, "discrepancy": e}
            for a, b, c, d_, e in r.violations
        ],
        "tolerance": r.tolerance,
        "basis_label": basis_label,
    }


def cptp_report(residual: float, detected: bool, basis_label: str) -> dict:
    return {"type": "cptp", "detected": bool(detected), "residual": residual,
            "basis_label": basis_label}


def decouple_to_json(res) -> dict:
    return {
        "best_sequence": [[float(a) for a in s] for s in res.best_sequence],
        "best_score": float(res.best_score),
        "evaluations": int(res.evaluations),
        "r_choi": cmatrix_to_json(res.r_choi),
    }


# --- files -------------------------------------------------------------------------


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(dumps(obj))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
