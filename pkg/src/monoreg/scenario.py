"""Scenario JSON: parsing, validation, serialization, bundled fixtures.

Document layout::

    {
      "plant":       {"A": [[..]], "B_u": [[..]], "B_v": [[..]], "C": [[..]], "D": [[..]]},
      "storage":     {"P": [[..]]},                      # optional
      "controller":  {"epsilon": 1e-4,
                      "potential": {"type": "zero" | "log_sum_exp" | "quadratic", ...},
                      "set": {"type": "segment" | "box" | "hull", ...}},
      "reference":   {"type": "constant", "y_d": [..]} |
                     {"type": "sawtooth", "base": [..], "channel": 1,
                      "amplitude": 0.5, "frequency_hz": 2.0, "phase": 0.0, "offset": 0.0},
      "disturbance": {"constant": [..], "components": [{"channel": 0, "waveform": "sine",
                      "amplitude": 2.0, "frequency_hz": 10.0, "phase": 0.0}, ..]},
      "sim":         {"x0": [..], "t0": 0.0, "tf": 10.0, "dt": 1e-4},
      "analysis":    {"gamma": 1e-4, "lmi_tol": 0.0}     # optional
    }

A "segment" set without an explicit "y_d" tracks the reference, which is how
a time-varying constraint segment conv{0, y_d(t)} is expressed.
"""

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .controller import RegularizedController
from .convex import Box, Hull, LogSumExp, QuadraticPotential, Segment, ZeroPotential
from .errors import MonoregError, ScenarioError
from .plant import Plant
from .simulator import (ConstantReference, DisturbanceComponent, DisturbanceSpec,
                        SawtoothReference, Scenario)


@dataclass
class ScenarioDoc:
    """Validated scenario document, one step short of runnable objects."""

    plant: Plant
    P: np.ndarray | None
    epsilon: float
    potential_cfg: dict
    set_cfg: dict
    reference_cfg: dict
    disturbance: DisturbanceSpec
    x0: np.ndarray
    t0: float
    tf: float
    dt: float
    gamma: float
    lmi_tol: float


def _require(cond, message):
    if not cond:
        raise ScenarioError(message)


def _matrix(section, key, where):
    _require(key in section, f"missing {where}.{key}")
    try:
        M = np.asarray(section[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}.{key} is not a numeric matrix: {exc}") from exc
    _require(M.ndim == 2, f"{where}.{key} must be a nested array (matrix)")
    _require(np.all(np.isfinite(M)), f"{where}.{key} has non-finite entries")
    return M


def _vector(obj, where):
    try:
        v = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where} is not a numeric vector: {exc}") from exc
    _require(v.ndim == 1, f"{where} must be a flat array")
    _require(np.all(np.isfinite(v)), f"{where} has non-finite entries")
    return v


def parse_scenario(doc: dict) -> ScenarioDoc:
    """Validate a parsed JSON document into a ScenarioDoc."""
    _require(isinstance(doc, dict), "scenario root must be an object")
    for key in ("plant", "controller", "reference", "disturbance", "sim"):
        _require(key in doc, f"missing top-level section '{key}'")

    psec = doc["plant"]
    A = _matrix(psec, "A", "plant")
    B_u = _matrix(psec, "B_u", "plant")
    B_v = _matrix(psec, "B_v", "plant")
    C = _matrix(psec, "C", "plant")
    D = _matrix(psec, "D", "plant")
    try:
        plant = Plant(A=A, B_u=B_u, B_v=B_v, C=C, D=D)
    except MonoregError as exc:
        raise ScenarioError(f"plant: {exc}") from exc

    P = None
    if "storage" in doc and doc["storage"] is not None:
        P = _matrix(doc["storage"], "P", "storage")
        _require(P.shape == (plant.n, plant.n), "storage.P has wrong shape")

    csec = doc["controller"]
    _require("epsilon" in csec, "missing controller.epsilon")
    epsilon = float(csec["epsilon"])
    _require(epsilon > 0, "controller.epsilon must be positive")
    pot_cfg = csec.get("potential", {"type": "zero"})
    _require(isinstance(pot_cfg, dict) and "type" in pot_cfg, "controller.potential needs a type")
    set_cfg = csec.get("set", {"type": "segment"})
    _require(isinstance(set_cfg, dict) and "type" in set_cfg, "controller.set needs a type")

    rsec = doc["reference"]
    _require(isinstance(rsec, dict) and "type" in rsec, "reference needs a type")
    if rsec["type"] == "constant":
        y_d = _vector(rsec.get("y_d"), "reference.y_d")
        _require(y_d.shape[0] == plant.m, "reference.y_d dimension mismatch")
    elif rsec["type"] == "sawtooth":
        base = _vector(rsec.get("base"), "reference.base")
        _require(base.shape[0] == plant.m, "reference.base dimension mismatch")
        for key in ("channel", "amplitude", "frequency_hz"):
            _require(key in rsec, f"missing reference.{key}")
    else:
        raise ScenarioError(f"unknown reference type {rsec['type']!r}")

    dsec = doc["disturbance"]
    constant = _vector(dsec.get("constant"), "disturbance.constant")
    _require(constant.shape[0] == plant.n_dist,
             f"disturbance.constant must have length {plant.n_dist}")
    components = []
    for i, comp in enumerate(dsec.get("components", [])):
        where = f"disturbance.components[{i}]"
        _require(isinstance(comp, dict), f"{where} must be an object")
        for key in ("channel", "waveform", "amplitude", "frequency_hz"):
            _require(key in comp, f"missing {where}.{key}")
        try:
            components.append(DisturbanceComponent(
                channel=int(comp["channel"]), waveform=str(comp["waveform"]),
                amplitude=float(comp["amplitude"]), frequency_hz=float(comp["frequency_hz"]),
                phase=float(comp.get("phase", 0.0))))
        except MonoregError as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
    try:
        disturbance = DisturbanceSpec(constant=constant, components=tuple(components))
    except MonoregError as exc:
        raise ScenarioError(f"disturbance: {exc}") from exc

    ssec = doc["sim"]
    x0 = _vector(ssec.get("x0"), "sim.x0")
    _require(x0.shape[0] == plant.n, f"sim.x0 must have length {plant.n}")
    for key in ("t0", "tf", "dt"):
        _require(key in ssec, f"missing sim.{key}")
    t0, tf, dt = float(ssec["t0"]), float(ssec["tf"]), float(ssec["dt"])
    _require(tf > t0, "sim.tf must exceed sim.t0")
    _require(dt > 0, "sim.dt must be positive")
    _require(dt <= (tf - t0) / 10.0, "sim.dt must be at most (tf - t0)/10")

    asec = doc.get("analysis", {}) or {}
    gamma = float(asec.get("gamma", 1e-4))
    lmi_tol = float(asec.get("lmi_tol", 0.0))
    _require(gamma > 0, "analysis.gamma must be positive")

    return ScenarioDoc(plant=plant, P=P, epsilon=epsilon, potential_cfg=pot_cfg,
                       set_cfg=set_cfg, reference_cfg=rsec, disturbance=disturbance,
                       x0=x0, t0=t0, tf=tf, dt=dt, gamma=gamma, lmi_tol=lmi_tol)


def load_scenario_file(path) -> ScenarioDoc:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path} is not valid JSON: {exc}") from exc
    return parse_scenario(doc)


def build_potential(cfg: dict):
    kind = cfg["type"]
    if kind == "zero":
        return ZeroPotential()
    if kind == "log_sum_exp":
        return LogSumExp()
    if kind == "quadratic":
        _require("Q" in cfg, "quadratic potential needs Q")
        try:
            return QuadraticPotential(np.asarray(cfg["Q"], dtype=float))
        except MonoregError as exc:
            raise ScenarioError(f"potential.Q: {exc}") from exc
    raise ScenarioError(f"unknown potential type {kind!r}")


def build_reference(cfg: dict):
    if cfg["type"] == "constant":
        return ConstantReference(_vector(cfg["y_d"], "reference.y_d"))
    try:
        return SawtoothReference(base=_vector(cfg["base"], "reference.base"),
                                 channel=int(cfg["channel"]),
                                 amplitude=float(cfg["amplitude"]),
                                 frequency_hz=float(cfg["frequency_hz"]),
                                 phase=float(cfg.get("phase", 0.0)),
                                 offset=float(cfg.get("offset", 0.0)))
    except MonoregError as exc:
        raise ScenarioError(f"reference: {exc}") from exc


def build_set_source(cfg: dict, reference):
    """A ConvexSet, or a callable t -> ConvexSet for reference-tracking segments."""
    kind = cfg["type"]
    try:
        if kind == "segment":
            if "y_d" in cfg:
                return Segment(_vector(cfg["y_d"], "set.y_d"))
            if reference.time_varying:
                return lambda t: Segment(reference.y_d(t))
            return Segment(reference.y_d(0.0))
        if kind == "box":
            return Box(_vector(cfg["lower"], "set.lower"), _vector(cfg["upper"], "set.upper"))
        if kind == "hull":
            return Hull(np.asarray(cfg["vertices"], dtype=float))
    except KeyError as exc:
        raise ScenarioError(f"set config missing {exc}") from exc
    except MonoregError as exc:
        raise ScenarioError(f"set: {exc}") from exc
    raise ScenarioError(f"unknown set type {kind!r}")


def build_scenario(sdoc: ScenarioDoc, P=None, epsilon=None) -> Scenario:
    """Runnable Scenario; P/epsilon overrides support check-then-simulate and sweeps."""
    reference = build_reference(sdoc.reference_cfg)
    phi = build_potential(sdoc.potential_cfg)
    set_source = build_set_source(sdoc.set_cfg, reference)
    eps = sdoc.epsilon if epsilon is None else float(epsilon)
    ctrl = RegularizedController(epsilon=eps, set_source=set_source, phi=phi,
                                 D=sdoc.plant.D)
    P_use = sdoc.P if P is None else P
    try:
        return Scenario(plant=sdoc.plant, controller=ctrl, disturbance=sdoc.disturbance,
                        reference=reference, x0=sdoc.x0, t0=sdoc.t0, tf=sdoc.tf,
                        dt=sdoc.dt, P=P_use)
    except MonoregError as exc:
        raise ScenarioError(str(exc)) from exc


def scenario_to_dict(sdoc: ScenarioDoc) -> dict:
    """Inverse of parse_scenario (round-trips to an equal document)."""
    doc = {
        "plant": {key: getattr(sdoc.plant, key).tolist()
                  for key in ("A", "B_u", "B_v", "C", "D")},
        "controller": {"epsilon": sdoc.epsilon,
                       "potential": dict(sdoc.potential_cfg),
                       "set": dict(sdoc.set_cfg)},
        "reference": dict(sdoc.reference_cfg),
        "disturbance": {
            "constant": sdoc.disturbance.constant.tolist(),
            "components": [{"channel": c.channel, "waveform": c.waveform,
                            "amplitude": c.amplitude, "frequency_hz": c.frequency_hz,
                            "phase": c.phase} for c in sdoc.disturbance.components]},
        "sim": {"x0": sdoc.x0.tolist(), "t0": sdoc.t0, "tf": sdoc.tf, "dt": sdoc.dt},
        "analysis": {"gamma": sdoc.gamma, "lmi_tol": sdoc.lmi_tol},
    }
    if sdoc.P is not None:
        doc["storage"] = {"P": sdoc.P.tolist()}
    return doc


def fixture_path(name: str):
    """Filesystem path of a bundled scenario (example1.json / example2.json)."""
    return resources.files("monoreg").joinpath("fixtures", name)


def load_fixture(name: str) -> ScenarioDoc:
    with resources.files("monoreg").joinpath("fixtures", name).open("r") as fh:
        return parse_scenario(json.load(fh))
