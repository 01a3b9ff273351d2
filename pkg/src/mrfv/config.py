"""INI-style run configuration.

Example::

    [problem]
    name = sedimentation-ex1
    initial = rough

    [params]
    v_inf = 1e-4

    [run]
    method = mr            ; fv | mr, or mode = MR_RKF
    levels = 11
    t_final = 2000
    snapshot_times = 500, 1000

    [tolerance]
    epsilon = 5.16e-5      ; or C = 500 with alpha = 0.6

    [time]
    mode = rkf             ; fixed | rkf
    cfl0 = 0.5
    delta_desired = 5e-4

Custom problems use ``name = custom`` with ``flux`` and ``diffusion``
coefficient lists (lowest order first) in ``[params]``.
"""

from __future__ import annotations

import configparser
import io
import json
from pathlib import Path

from .solver_driver import RunConfig


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


# (section, key) -> (RunConfig field, parser)
KEYS = {
    ("problem", "name"): ("problem", str),
    ("problem", "initial"): ("initial", str),
    ("problem", "light_blocks"): ("light_blocks", str),
    ("run", "levels"): ("levels", int),
    ("run", "t_final"): ("t_final", float),
    ("run", "snapshot_times"): ("snapshot_times", _floats),
    ("run", "trace_stride"): ("trace_stride", int),
    ("run", "max_steps"): ("max_steps", int),
    ("run", "check_grading"): ("check_grading", _bool),
    ("run", "top_down_init"): ("top_down_init", _bool),
    ("tolerance", "epsilon"): ("epsilon", float),
    ("tolerance", "c"): ("C", float),
    ("tolerance", "alpha"): ("alpha", float),
    ("time", "dt0"): ("dt0", float),
    ("time", "cfl0"): ("cfl0", float),
    ("time", "lambda_fixed"): ("lambda_fixed", float),
    ("time", "delta_desired"): ("delta_desired", float),
    ("time", "s0"): ("s0", float),
    ("time", "s_min"): ("s_min", float),
    ("time", "cfl_ceiling"): ("cfl_ceiling", float),
    ("scheme", "theta"): ("theta", float),
}


class ConfigError(ValueError):
    """Raised for unreadable or inconsistent configuration files."""


def _param_value(text):
    """Numbers, JSON lists, or plain strings for [params] entries."""
    text = text.strip()
    try:
        return json.loads(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def combine_mode(method, time_mode):
    """('mr', 'rkf') -> 'MR_RKF'."""
    method = (method or "fv").strip().upper()
    if method not in ("FV", "MR"):
        raise ConfigError(f"run.method must be fv or mr, got {method!r}")
    tm = (time_mode or "fixed").strip().lower()
    if tm not in ("fixed", "rkf"):
        raise ConfigError(f"time.mode must be fixed or rkf, got {time_mode!r}")
    return method + ("_RKF" if tm == "rkf" else "")


def parse_config(text, source="<string>"):
    """Return (RunConfig keyword dict, output dir or None) from INI text."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # parameter names such as K are case-sensitive
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    values, params, out_dir = {}, {}, None
    method = time_mode = None
    for section in cp.sections():
        for key, raw in cp.items(section):
            sk = (section.lower(), key.lower())
            if section.lower() == "params":
                params[key] = _param_value(raw)
            elif sk == ("run", "mode"):
                values["mode"] = raw.strip().upper()
            elif sk == ("run", "method"):
                method = raw
            elif sk == ("time", "mode"):
                time_mode = raw
            elif sk == ("output", "dir"):
                out_dir = raw.strip()
            elif sk in KEYS:
                field, conv = KEYS[sk]
                try:
                    values[field] = conv(raw)
                except ValueError as exc:
                    raise ConfigError(f"{source}: {section}.{key}: {exc}") from None
            else:
                raise ConfigError(f"{source}: unknown key {section}.{key}")
    if "mode" not in values and (method is not None or time_mode is not None):
        values["mode"] = combine_mode(method, time_mode)
    elif "mode" in values and time_mode is not None:
        if values["mode"].endswith("_RKF") != (time_mode.strip().lower() == "rkf"):
            raise ConfigError(f"{source}: run.mode and time.mode disagree")
    if params:
        values["params"] = params
    return values, out_dir


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_config(text, source=str(path))


def build_config(file_values=None, overrides=None) -> RunConfig:
    """RunConfig from file values with command-line overrides taking precedence."""
    merged = dict(file_values or {})
    for k, v in (overrides or {}).items():
        if v is not None:
            merged[k] = v
    # an explicit epsilon on the command line replaces a C from the file and vice versa
    if (overrides or {}).get("epsilon") is not None:
        merged.pop("C", None)
    if (overrides or {}).get("C") is not None:
        merged.pop("epsilon", None)
    try:
        return RunConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def dump_config(config: RunConfig) -> str:
    """INI text that parses back to the same RunConfig."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["problem"] = {"name": config.problem, "initial": config.initial}
    if config.light_blocks is not None:
        cp["problem"]["light_blocks"] = config.light_blocks
    if config.params:
        cp["params"] = {k: json.dumps(v) for k, v in config.params.items()}
    cp["run"] = {"mode": config.mode, "levels": str(config.levels), "t_final": repr(config.t_final),
                 "snapshot_times": ", ".join(repr(t) for t in config.snapshot_times),
                 "trace_stride": str(config.trace_stride), "max_steps": str(config.max_steps),
                 "check_grading": str(config.check_grading).lower(),
                 "top_down_init": str(config.top_down_init).lower()}
    tol = {"alpha": repr(config.alpha)}
    if config.epsilon is not None:
        tol["epsilon"] = repr(config.epsilon)
    if config.C is not None:
        tol["C"] = repr(config.C)
    cp["tolerance"] = tol
    tm = {k: repr(getattr(config, k)) for k in ("delta_desired", "s0", "s_min", "cfl_ceiling")}
    for k in ("dt0", "cfl0", "lambda_fixed"):
        if getattr(config, k) is not None:
            tm[k] = repr(getattr(config, k))
    cp["time"] = tm
    cp["scheme"] = {"theta": repr(config.theta)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
