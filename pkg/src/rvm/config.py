"""Run configuration: one JSON document, validated and completed with defaults.

Every key is optional; an empty object yields the full default
configuration.  Structural problems are reported with the JSON path of
the offending entry (``$.force.M``), physical ones (``M > 2``, the minimal
decay rate ``A``) with the same path and the violated condition.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass

import jsonschema

from .errors import ConfigError, ParameterError
from .fields import GridSpec
from .force import ForceParams
from .kinetic import InitialDistribution, InitialFields

MODES = ("simulate", "trace", "verify", "kernels", "ode")

DEFAULTS = {
    "mode": "verify",
    "seed": 0,
    "force": {"M": 3.0, "R0": 1.0, "R1": 2.0, "A": 5.0, "enforce_admissibility": True},
    "grid": {"L": 4 * math.pi, "Nx": 64, "dt": 0.05},
    "simulation": {"steps": 500, "output_every": 50, "backend": "compiled"},
    "distribution": {"C0": 1.0, "amplitude": 1.0, "modulation": 0.2, "mode": 1,
                     "n_particles": 100_000, "tracers": [[1.0, [0.0, 0.0, 0.0]]]},
    "initial_fields": {"wave_amplitude": 0.5, "wave_mode": 1, "Bx": 0.5},
    "trace": {"fields": 100, "characteristics": 100, "dt": 1e-3, "t_end": 5.0, "n_modes": 3,
              "p_min": 1e-3, "p_max": 10.0, "box": 5.0, "export": 0},
    "kernels": {"samples": 1_000_000, "adversarial": 10_000, "pmax": 1e3},
    "ode": {"C": 1.0, "W0": math.e, "Z0": math.e, "t": 3.0, "dt": 1e-4, "log_factor": 1.0},
    "verify": {"scale": "full", "workers": 1},
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int_pos = {"type": "integer", "minimum": 1}
_int_nonneg = {"type": "integer", "minimum": 0}


def _obj(props):
    return {"type": "object", "properties": props, "additionalProperties": False}


SCHEMA = _obj({
    "mode": {"enum": list(MODES)},
    "seed": _int_nonneg,
    "force": _obj({"M": _num, "R0": _num, "R1": _num, "A": _num,
                   "enforce_admissibility": {"type": "boolean"}}),
    "grid": _obj({"L": _pos, "Nx": _int_pos, "dt": _pos}),
    "simulation": _obj({"steps": _int_nonneg, "output_every": _int_pos,
                        "backend": {"enum": ["compiled", "numpy"]}}),
    "distribution": _obj({
        "C0": _pos, "amplitude": {"type": "number", "minimum": 0, "maximum": 1},
        "modulation": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "mode": _int_pos, "n_particles": _int_nonneg,
        "tracers": {"type": "array", "items": {
            "type": "array", "prefixItems": [_num, {"type": "array", "items": _num,
                                                   "minItems": 3, "maxItems": 3}],
            "minItems": 2, "maxItems": 2}},
    }),
    "initial_fields": _obj({"wave_amplitude": _num, "wave_mode": _int_pos, "Bx": _num}),
    "trace": _obj({"fields": _int_pos, "characteristics": _int_pos, "dt": _pos, "t_end": _pos,
                   "n_modes": _int_nonneg, "p_min": _pos, "p_max": _pos, "box": _pos,
                   "export": _int_nonneg}),
    "kernels": _obj({"samples": _int_pos, "adversarial": _int_nonneg, "pmax": _pos}),
    "ode": _obj({"C": {"type": "number", "minimum": 0}, "W0": _pos, "Z0": _pos, "t": _pos,
                 "dt": _pos, "log_factor": _pos}),
    "verify": _obj({"scale": {"enum": ["full", "quick"]}, "workers": _int_pos}),
})


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _json_path(error):
    path = "$"
    for part in error.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


@dataclass
class RunConfig:
    """Validated configuration with typed views of each block."""

    data: dict

    @property
    def mode(self):
        return self.data["mode"]

    @property
    def seed(self):
        return self.data["seed"]

    @property
    def force(self):
        f = self.data["force"]
        return ForceParams(M=f["M"], R0=f["R0"], A=f["A"],
                           enforce_admissibility=f["enforce_admissibility"])

    @property
    def grid(self):
        g = self.data["grid"]
        return GridSpec(L=float(g["L"]), Nx=int(g["Nx"]), dt=float(g["dt"]))

    @property
    def steps(self):
        return self.data["simulation"]["steps"]

    @property
    def output_every(self):
        return self.data["simulation"]["output_every"]

    @property
    def backend(self):
        return self.data["simulation"]["backend"]

    @property
    def distribution(self):
        d = self.data["distribution"]
        tracers = tuple((float(x), tuple(float(c) for c in p)) for x, p in d["tracers"])
        return InitialDistribution(A=self.data["force"]["A"], C0=d["C0"], amplitude=d["amplitude"],
                                   modulation=d["modulation"], mode=d["mode"],
                                   n_particles=d["n_particles"], tracers=tracers)

    @property
    def initial_fields(self):
        f = self.data["initial_fields"]
        return InitialFields(wave_amplitude=f["wave_amplitude"], wave_mode=f["wave_mode"],
                             Bx=f["Bx"])

    def block(self, name):
        return self.data[name]

    def with_overrides(self, **blocks):
        return parse_config(json.dumps(_merge(self.data, blocks)))

    def to_dict(self):
        return copy.deepcopy(self.data)


def parse_config(text):
    """Parse and validate a JSON configuration document; defaults fill omitted keys.

    Raises :class:`ConfigError` whose ``path`` is the JSON path of the
    problem.
    """
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from exc
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError(errors[0].message, path=_json_path(errors[0]))
    data = _merge(DEFAULTS, raw)
    f = data["force"]
    if "R1" in raw.get("force", {}):
        if abs(f["R1"] - (f["R0"] + 1.0)) > 1e-12:
            raise ConfigError(f"R1={f['R1']} must equal R0+1={f['R0'] + 1.0}", path="$.force.R1")
    f["R1"] = f["R0"] + 1.0
    cfg = RunConfig(data)
    for name, path in (("force", "$.force"), ("grid", "$.grid"), ("distribution", "$.distribution"),
                       ("initial_fields", "$.initial_fields")):
        try:
            getattr(cfg, name)
        except ParameterError as exc:
            raise ConfigError(str(exc), path=_physical_path(path, str(exc))) from exc
    return cfg


def _physical_path(block, message):
    for key in ("M", "R0", "A", "Nx", "dt", "L"):
        if message.startswith(f"{key}=") or message.startswith(f"{key} "):
            return f"{block}.{key}"
    if "CFL" in message:
        return f"{block}.dt"
    return block


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file {path}: {exc.strerror}") from exc
    return parse_config(text)


def default_config():
    return parse_config("{}")
