"""Scenario configuration: YAML grammar, validation and scenario construction.

A configuration is a YAML mapping with the sections below. Every key not
listed here is rejected. ``?`` marks optional keys (defaults in brackets).

.. code-block:: yaml

    scenario:
      kind: accelerated | gravitational | time-parametrized
      include_rest_mass?: false
      ordering?: weyl | left | right            # time-parametrized only [weyl]
      external_clock?: B                        # label of an uncoupled extra clock
      softening?: 0.25                          # gravitational only
    constants?:
      hbar?: 1.0
      c?: 1.0
      G?: 0.0
    clocks:                                     # 1 clock (2 for gravitational, A then B)
      - label: A
        dimension: 64
        tick: 0.015625
        ideal?: true                            # exclusive with width
        width?: 0.01                            # Gaussian (non-ideal) clock
    particles:                                  # 1 particle (2 for gravitational, M then N)
      - label: M
        grid: {min: -8.0, max: 8.0, count: 64}  # count points, max excluded
        mass?: 1.0
        hamiltonian?: kinetic                   # kinetic | zero
        offset?: 0.0                            # constant added to the free Hamiltonian
    profile?:                                   # accelerated / time-parametrized only
      family: zero | constant | linear | quadratic | tabulated
      a?: 0.5           # constant acceleration (accelerated)
      x0?: 0.0          # reference position with V(x0) = 0
      alpha?: 0.1       # g(t) = alpha t (time-parametrized)
      beta?: 0.1        # g(t) = beta t^2 (time-parametrized)
      points?: [[x, a], ...]   # tabulated acceleration, linear interpolation
    run:
      perspective: A
      readings: {start: 0.0, stop: 1.0, count: 129}
      integrator?: rk4 | midpoint-exponential   [rk4]
      dt?: 0.0001                               # default: reading spacing / 16
      initial?:
        particle_width?: 1.0                    # momentum-space Gaussian width
        clock_center?: null                     # time probe centre [mid-period]
        clock_width?: null                      # time probe width [0.08 period]
      observables?: [position:M, momentum:M, energy:M, time:A]
    output?:
      csv?: trajectory.csv
      report?: report.json
      svg?: false

The dense-matrix cap applies to the joint dimension of every factor.
"""

from __future__ import annotations

import contextlib
import copy
import math
from numbers import Real

import numpy as np
import yaml

from .clocks import make_gaussian_clock, make_ideal_clock
from .errors import ClockFramesError, ConfigError
from .operators import MAX_DIMENSION
from .scenarios import (
    PhysicalConstants,
    add_external_clock,
    build_accelerated,
    build_gravitational,
    build_time_parametrized,
    make_particle,
    position_profile,
    potential_profile,
)

__all__ = ["parse_config", "serialize_config", "load_config", "build_scenario", "profile_functions",
           "DEFAULTS", "config_path"]

KINDS = ("accelerated", "gravitational", "time-parametrized")
FAMILIES = ("zero", "constant", "linear", "quadratic", "tabulated")

SCHEMA = {
    "scenario": {"kind", "include_rest_mass", "ordering", "external_clock", "softening"},
    "constants": {"hbar", "c", "G"},
    "clocks": {"label", "dimension", "tick", "ideal", "width"},
    "particles": {"label", "grid", "mass", "hamiltonian", "offset"},
    "profile": {"family", "a", "x0", "alpha", "beta", "points"},
    "run": {"perspective", "readings", "integrator", "dt", "initial", "observables"},
    "output": {"csv", "report", "svg"},
}
GRID_KEYS = {"min", "max", "count"}
READING_KEYS = {"start", "stop", "count"}
INITIAL_KEYS = {"particle_width", "clock_center", "clock_width"}
REQUIRED_TOP = ("scenario", "clocks", "particles", "run")

DEFAULTS = {
    "output": {"csv": "trajectory.csv", "report": "report.json", "svg": False},
}


def _is_number(x):
    return isinstance(x, Real) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


class _Collector:
    def __init__(self):
        self.errors = []

    def add(self, path, message):
        self.errors.append(f"{path}: {message}")

    def keys(self, mapping, allowed, path, required=()):
        if not isinstance(mapping, dict):
            self.add(path, "expected a mapping")
            return False
        for key in mapping:
            if key not in allowed:
                self.add(f"{path}.{key}", "unknown key")
        for key in required:
            if key not in mapping:
                self.add(f"{path}.{key}", "missing required key")
        return True

    def number(self, mapping, key, path, positive=False, nonneg=False, required=False):
        if key not in mapping:
            if required:
                self.add(f"{path}.{key}", "missing required key")
            return
        value = mapping[key]
        if not _is_number(value):
            self.add(f"{path}.{key}", f"expected a finite number, got {value!r}")
        elif positive and not value > 0:
            self.add(f"{path}.{key}", f"must be > 0, got {value}")
        elif nonneg and value < 0:
            self.add(f"{path}.{key}", f"must be >= 0, got {value}")


def _validate(cfg):
    c = _Collector()
    if not isinstance(cfg, dict):
        raise ConfigError(["<root>: expected a mapping"])
    for key in cfg:
        if key not in SCHEMA:
            c.add(key, "unknown section")
    for key in REQUIRED_TOP:
        if key not in cfg:
            c.add(key, "missing required section")

    scen = cfg.get("scenario", {})
    kind = None
    if c.keys(scen, SCHEMA["scenario"], "scenario", required=("kind",)):
        kind = scen.get("kind")
        if "kind" in scen and kind not in KINDS:
            c.add("scenario.kind", f"must be one of {KINDS}")
        if "include_rest_mass" in scen and not isinstance(scen["include_rest_mass"], bool):
            c.add("scenario.include_rest_mass", "expected true/false")
        if "ordering" in scen:
            if scen["ordering"] not in ("weyl", "left", "right"):
                c.add("scenario.ordering", "must be weyl, left or right")
            elif kind != "time-parametrized":
                c.add("scenario.ordering", "only valid for time-parametrized scenarios")
        if "softening" in scen:
            c.number(scen, "softening", "scenario", positive=True)
            if kind != "gravitational":
                c.add("scenario.softening", "only valid for gravitational scenarios")
        if "external_clock" in scen:
            if not isinstance(scen["external_clock"], str):
                c.add("scenario.external_clock", "expected a label")
            elif kind == "gravitational":
                c.add("scenario.external_clock", "not supported for gravitational scenarios")

    consts = cfg.get("constants", {})
    if c.keys(consts, SCHEMA["constants"], "constants"):
        c.number(consts, "hbar", "constants", positive=True)
        c.number(consts, "c", "constants", positive=True)
        c.number(consts, "G", "constants", nonneg=True)

    labels = []
    dims = []
    clocks = cfg.get("clocks", [])
    if not isinstance(clocks, list) or not clocks:
        c.add("clocks", "expected a non-empty list")
        clocks = []
    for i, spec in enumerate(clocks):
        path = f"clocks[{i}]"
        if not c.keys(spec, SCHEMA["clocks"], path, required=("label", "dimension", "tick")):
            continue
        labels.append(spec.get("label"))
        dim = spec.get("dimension")
        if "dimension" in spec:
            if not _is_int(dim) or dim < 2:
                c.add(f"{path}.dimension", f"expected an integer >= 2, got {dim!r}")
            else:
                dims.append(dim)
        c.number(spec, "tick", path, positive=True)
        if "ideal" in spec and not isinstance(spec["ideal"], bool):
            c.add(f"{path}.ideal", "expected true/false")
        if "width" in spec:
            c.number(spec, "width", path, positive=True)
            if spec.get("ideal") is True:
                c.add(f"{path}", "contradiction: ideal=true and width are mutually exclusive")
        elif spec.get("ideal") is False:
            c.add(f"{path}.width", "non-ideal clock needs a width")

    particles = cfg.get("particles", [])
    if not isinstance(particles, list) or not particles:
        c.add("particles", "expected a non-empty list")
        particles = []
    for i, spec in enumerate(particles):
        path = f"particles[{i}]"
        if not c.keys(spec, SCHEMA["particles"], path, required=("label", "grid")):
            continue
        labels.append(spec.get("label"))
        grid = spec.get("grid")
        if "grid" in spec and c.keys(grid, GRID_KEYS, f"{path}.grid", required=("min", "max", "count")):
            c.number(grid, "min", f"{path}.grid", required=False)
            c.number(grid, "max", f"{path}.grid", required=False)
            count = grid.get("count")
            if "count" in grid:
                if not _is_int(count) or count < 2:
                    c.add(f"{path}.grid.count", f"expected an integer >= 2, got {count!r}")
                else:
                    dims.append(count)
            if _is_number(grid.get("min")) and _is_number(grid.get("max")) and not grid["max"] > grid["min"]:
                c.add(f"{path}.grid", "max must exceed min")
        c.number(spec, "mass", path, nonneg=True)
        c.number(spec, "offset", path)
        if spec.get("hamiltonian", "kinetic") not in ("kinetic", "zero"):
            c.add(f"{path}.hamiltonian", "must be kinetic or zero")
        if spec.get("hamiltonian", "kinetic") == "kinetic" and "mass" in spec and _is_number(spec["mass"]) \
                and spec["mass"] <= 0:
            c.add(f"{path}.mass", "kinetic Hamiltonian needs mass > 0")

    for label in labels:
        if not isinstance(label, str) or not label:
            c.add("labels", f"invalid label {label!r}")
    ext = scen.get("external_clock") if isinstance(scen, dict) else None
    all_labels = [x for x in labels if isinstance(x, str)] + ([ext] if isinstance(ext, str) else [])
    if len(set(all_labels)) != len(all_labels):
        c.add("labels", f"labels must be distinct, got {all_labels}")
    if dims:
        total = int(np.prod([float(x) for x in dims]))
        if isinstance(ext, str) and clocks and _is_int(clocks[0].get("dimension")):
            total *= clocks[0]["dimension"]
        if total > MAX_DIMENSION:
            c.add("dimensions", f"joint dimension {total} exceeds the dense cap {MAX_DIMENSION}")

    if kind == "gravitational":
        if len(clocks) != 2 or len(particles) != 2:
            c.add("scenario", "gravitational scenarios need exactly 2 clocks and 2 particles")
        if "profile" in cfg:
            c.add("profile", "not used by gravitational scenarios")
        if len(particles) == 2 and isinstance(particles[1], dict):
            grid = particles[1].get("grid")
            if isinstance(grid, dict) and all(_is_number(grid.get(k)) for k in ("min", "max")) \
                    and _is_int(grid.get("count")) and grid["count"] >= 2:
                xs = _grid_values(grid)
                eps = scen.get("softening") if _is_number(scen.get("softening", None)) else 0.5 * (xs[1] - xs[0])
                if np.any(np.abs(xs) < eps) or np.any(xs == 0.0):
                    c.add("particles[1].grid", f"singularity: grid passes within {eps:g} of the origin")
    elif kind in ("accelerated", "time-parametrized"):
        if len(clocks) != 1 or len(particles) != 1:
            c.add("scenario", f"{kind} scenarios need exactly 1 clock and 1 particle")

    prof = cfg.get("profile")
    if prof is not None and c.keys(prof, SCHEMA["profile"], "profile", required=("family",)):
        fam = prof.get("family")
        if fam not in FAMILIES:
            c.add("profile.family", f"must be one of {FAMILIES}")
        for key in ("a", "x0", "alpha", "beta"):
            c.number(prof, key, "profile")
        if kind == "accelerated" and fam in ("linear", "quadratic"):
            c.add("profile.family", "linear/quadratic g families apply to time-parametrized scenarios")
        if kind == "time-parametrized" and fam == "constant":
            c.add("profile.family", "constant acceleration applies to accelerated scenarios")
        if fam == "constant" and "a" not in prof:
            c.add("profile.a", "missing required key")
        if fam == "linear" and "alpha" not in prof:
            c.add("profile.alpha", "missing required key")
        if fam == "quadratic" and "beta" not in prof:
            c.add("profile.beta", "missing required key")
        if fam == "tabulated":
            pts = prof.get("points")
            if not isinstance(pts, list) or len(pts) < 2 or not all(
                    isinstance(p, list) and len(p) == 2 and all(_is_number(v) for v in p) for p in pts):
                c.add("profile.points", "expected a list of >= 2 [x, value] pairs")
            elif not np.all(np.diff([p[0] for p in pts]) > 0):
                c.add("profile.points", "abscissae must increase")

    run = cfg.get("run", {})
    if c.keys(run, SCHEMA["run"], "run", required=("perspective", "readings")):
        persp = run.get("perspective")
        if "perspective" in run and persp not in [s.get("label") for s in clocks if isinstance(s, dict)] + [ext]:
            c.add("run.perspective", f"unknown clock {persp!r}")
        rd = run.get("readings")
        if "readings" in run and c.keys(rd, READING_KEYS, "run.readings", required=("start", "stop", "count")):
            c.number(rd, "start", "run.readings")
            c.number(rd, "stop", "run.readings")
            if "count" in rd and (not _is_int(rd["count"]) or rd["count"] < 2):
                c.add("run.readings.count", "expected an integer >= 2")
            if _is_number(rd.get("start")) and _is_number(rd.get("stop")) and not rd["stop"] > rd["start"]:
                c.add("run.readings", "stop must exceed start")
        if run.get("integrator", "rk4") not in ("rk4", "midpoint-exponential"):
            c.add("run.integrator", "must be rk4 or midpoint-exponential")
        if "dt" in run:
            c.number(run, "dt", "run", positive=True)
        init = run.get("initial")
        if init is not None and c.keys(init, INITIAL_KEYS, "run.initial"):
            c.number(init, "particle_width", "run.initial", positive=True)
            if init.get("clock_center") is not None:
                c.number(init, "clock_center", "run.initial")
            if init.get("clock_width") is not None:
                c.number(init, "clock_width", "run.initial", positive=True)
        obs = run.get("observables", [])
        if not isinstance(obs, list):
            c.add("run.observables", "expected a list")
        else:
            for j, name in enumerate(obs):
                if not isinstance(name, str) or name.count(":") != 1:
                    c.add(f"run.observables[{j}]", f"expected 'kind:label', got {name!r}")
                    continue
                okind, olabel = name.split(":")
                if okind not in ("position", "momentum", "energy", "time"):
                    c.add(f"run.observables[{j}]", f"unknown observable kind {okind!r}")
                if olabel not in all_labels:
                    c.add(f"run.observables[{j}]", f"unknown factor {olabel!r}")
                elif olabel == persp:
                    c.add(f"run.observables[{j}]", "observable acts on the perspective clock itself")

    out = cfg.get("output", {})
    if c.keys(out, SCHEMA["output"], "output"):
        for key in ("csv", "report"):
            if key in out and not isinstance(out[key], str):
                c.add(f"output.{key}", "expected a file name")
        if "svg" in out and not isinstance(out["svg"], bool):
            c.add("output.svg", "expected true/false")
    if c.errors:
        raise ConfigError(c.errors)


def parse_config(text):
    """Parse and validate YAML text; raises :class:`ConfigError` listing every problem."""
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"<yaml>: {exc}"]) from None
    _validate(cfg)
    return cfg


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(cfg):
    """Canonical YAML for a configuration; ``parse_config`` inverts it exactly."""
    return yaml.safe_dump(cfg, sort_keys=True, default_flow_style=False, allow_unicode=True)


def _grid_values(grid):
    return np.linspace(grid["min"], grid["max"], grid["count"], endpoint=False)


def profile_functions(profile):
    """``(kind, first, second)`` callables for a profile section.

    For time families ``first``/``second`` are ``g`` and ``g'``; for
    position families ``first`` is the acceleration ``a(x)``.
    """
    fam = profile.get("family", "zero")
    if fam == "zero":
        return "zero", (lambda t: 0.0 * t), (lambda t: 0.0 * t)
    if fam == "constant":
        a = float(profile["a"])
        return "position", (lambda x: a + 0.0 * x), None
    if fam == "linear":
        alpha = float(profile["alpha"])
        return "time", (lambda t: alpha * t), (lambda t: alpha + 0.0 * t)
    if fam == "quadratic":
        beta = float(profile["beta"])
        return "time", (lambda t: beta * t * t), (lambda t: 2.0 * beta * t)
    pts = np.asarray(profile["points"], dtype=float)
    xs, ys = pts[:, 0].copy(), pts[:, 1].copy()
    return "tabulated", (lambda x: np.interp(x, xs, ys)), None


@contextlib.contextmanager
def config_path(path):
    """Tag any library error raised inside the block with the config ``path`` that caused it."""
    try:
        yield
    except ClockFramesError as exc:
        if getattr(exc, "config_path", None) is None:
            exc.config_path = path
        raise


def build_scenario(cfg):
    """Build the :class:`Scenario` a validated configuration describes."""
    cfg = copy.deepcopy(cfg)
    scen = cfg["scenario"]
    with config_path("constants"):
        constants = PhysicalConstants(**cfg.get("constants", {}))
    hbar = constants.hbar
    clocks = []
    for i, spec in enumerate(cfg["clocks"]):
        with config_path(f"clocks[{i}]"):
            if "width" in spec:
                clocks.append(make_gaussian_clock(spec["dimension"], spec["tick"], spec["width"], spec["label"], hbar))
            else:
                clocks.append(make_ideal_clock(spec["dimension"], spec["tick"], spec["label"], hbar))
    particles = []
    for i, spec in enumerate(cfg["particles"]):
        with config_path(f"particles[{i}]"):
            grid = _grid_values(spec["grid"])
            mass = spec.get("mass", 1.0)
            if spec.get("hamiltonian", "kinetic") == "zero":
                part = make_particle(spec["label"], grid, mass, hbar, hamiltonian=np.zeros((len(grid), len(grid))))
            else:
                part = make_particle(spec["label"], grid, mass, hbar)
            if spec.get("offset", 0.0):
                part = part.shifted(-spec["offset"])
            particles.append(part)
    kind = scen["kind"]
    rest_mass = scen.get("include_rest_mass", False)
    if kind == "gravitational":
        with config_path("particles[1].grid"):
            sc = build_gravitational(clocks[0], particles[0], clocks[1], particles[1], constants,
                                     softening=scen.get("softening"))
        return sc
    prof = cfg.get("profile", {"family": "zero"})
    pkind, first, second = profile_functions(prof)
    with config_path("profile"):
        if kind == "accelerated":
            if pkind == "zero":
                profile = potential_profile(lambda x: 0.0 * x, name="zero")
            else:
                profile = position_profile(first, x0=prof.get("x0", 0.0), name=prof["family"])
            sc = build_accelerated(clocks[0], particles[0], profile, constants, include_rest_mass=rest_mass)
        else:
            sc = build_time_parametrized(clocks[0], particles[0], first, constants, dg=second,
                                         ordering=scen.get("ordering", "weyl"), include_rest_mass=rest_mass)
    if "external_clock" in scen:
        with config_path("scenario.external_clock"):
            ref = cfg["clocks"][0]
            ext = make_ideal_clock(ref["dimension"], ref["tick"], scen["external_clock"], hbar)
            sc = add_external_clock(sc, ext)
    return sc
