"""Run-configuration files: a line-based `key = value` format with
`[section]` headers, `#` comments, and SI units throughout.

Sections and keys (defaults in parentheses):

[converter]  v_s, L, C, R, f_s, scheme         -- required
             r (0), R_c (0), V_h (0; required > 0 for pvmc/vmc_type3)
             k_p                               -- pvmc / cmc_closed
             K_c, z1, z2, p1, p2               -- vmc_type3
             scheme in {pvmc, vmc_type3, cmc_open, cmc_closed}
[sweep]      from, to (no default), points (101), duty_max (0.99)
[simulate]   cycles (5000), kick (1e-3), presamples (64)
[poles]      d_from (0), d_to (0.95), points (201)
[output]     out_dir (.), run_id (config name), jobs (0 = all processors)

Unknown sections or keys are errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .params import (CmcClosedLoop, CmcOpenLoop, ConverterParams, Pvmc,
                     VmcType3)


class ConfigError(ValueError):
    """Malformed config text; carries the offending line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


_SCHEMA = {
    "converter": {
        "v_s": float, "L": float, "C": float, "R": float, "r": float,
        "R_c": float, "V_h": float, "f_s": float, "scheme": str,
        "k_p": float, "K_c": float, "z1": float, "z2": float,
        "p1": float, "p2": float,
    },
    "sweep": {"from": float, "to": float, "points": int, "duty_max": float},
    "simulate": {"cycles": int, "kick": float, "presamples": int},
    "poles": {"d_from": float, "d_to": float, "points": int},
    "output": {"out_dir": str, "run_id": str, "jobs": int},
}

_SCHEMES = {"pvmc", "vmc_type3", "cmc_open", "cmc_closed"}


@dataclass
class RunConfig:
    """Validated converter parameters plus per-command settings."""

    params: ConverterParams
    sweep_from: Optional[float] = None
    sweep_to: Optional[float] = None
    sweep_points: int = 101
    duty_max: float = 0.99
    sim_cycles: int = 5000
    sim_kick: float = 1e-3
    presamples: int = 64
    poles_d_from: float = 0.0
    poles_d_to: float = 0.95
    poles_points: int = 201
    out_dir: str = "."
    run_id: str = "run"
    jobs: int = 0


def _parse_lines(text: str):
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected `key = value`, got {line!r}", lineno)
        if section is None:
            raise ConfigError("key outside any [section]", lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        yield section, key, value, lineno


def parse_config(text: str, run_id: str = "run") -> RunConfig:
    """Parse and validate config text into a RunConfig."""
    raw = {s: {} for s in _SCHEMA}
    for section, key, value, lineno in _parse_lines(text):
        typ = _SCHEMA[section][key]
        if typ is str:
            parsed = value
        else:
            try:
                parsed = typ(value)
            except ValueError:
                raise ConfigError(
                    f"could not parse {key} = {value!r} as {typ.__name__}", lineno)
        raw[section][key] = parsed

    conv = raw["converter"]
    for req in ("v_s", "L", "C", "R", "f_s", "scheme"):
        if req not in conv:
            raise ConfigError(f"missing required [converter] key: {req}")
    scheme_name = conv["scheme"]
    if scheme_name not in _SCHEMES:
        raise ConfigError(f"unknown scheme {scheme_name!r} "
                          f"(expected one of {sorted(_SCHEMES)})")

    def need(key):
        if key not in conv:
            raise ConfigError(f"scheme {scheme_name} requires [converter] key: {key}")
        return conv[key]

    if scheme_name == "pvmc":
        scheme = Pvmc(k_p=need("k_p"))
    elif scheme_name == "vmc_type3":
        scheme = VmcType3(K_c=need("K_c"), z1=need("z1"), z2=need("z2"),
                          p1=need("p1"), p2=need("p2"))
    elif scheme_name == "cmc_open":
        scheme = CmcOpenLoop()
    else:
        scheme = CmcClosedLoop(k_p=need("k_p"))

    v_h = conv.get("V_h", 0.0)
    if scheme_name in ("pvmc", "vmc_type3") and v_h <= 0:
        raise ConfigError(f"scheme {scheme_name} requires V_h > 0")
    try:
        params = ConverterParams(
            v_s=conv["v_s"], L=conv["L"], C_f=conv["C"], R=conv["R"],
            r=conv.get("r", 0.0), R_c=conv.get("R_c", 0.0), V_h=v_h,
            f_s=conv["f_s"], scheme=scheme)
    except ValueError as exc:
        raise ConfigError(str(exc))

    cfg = RunConfig(params=params, run_id=run_id)
    sw, si, po, ou = raw["sweep"], raw["simulate"], raw["poles"], raw["output"]
    cfg.sweep_from = sw.get("from")
    cfg.sweep_to = sw.get("to")
    cfg.sweep_points = sw.get("points", cfg.sweep_points)
    cfg.duty_max = sw.get("duty_max", cfg.duty_max)
    cfg.sim_cycles = si.get("cycles", cfg.sim_cycles)
    cfg.sim_kick = si.get("kick", cfg.sim_kick)
    cfg.presamples = si.get("presamples", cfg.presamples)
    cfg.poles_d_from = po.get("d_from", cfg.poles_d_from)
    cfg.poles_d_to = po.get("d_to", cfg.poles_d_to)
    cfg.poles_points = po.get("points", cfg.poles_points)
    cfg.out_dir = ou.get("out_dir", cfg.out_dir)
    cfg.run_id = ou.get("run_id", cfg.run_id)
    cfg.jobs = ou.get("jobs", cfg.jobs)

    for name, val in (("sweep_points", cfg.sweep_points),
                      ("cycles", cfg.sim_cycles),
                      ("presamples", cfg.presamples),
                      ("poles_points", cfg.poles_points)):
        if val < 2 and name != "cycles":
            raise ConfigError(f"{name} must be >= 2")
    if cfg.sim_cycles < 1:
        raise ConfigError("cycles must be >= 1")
    if not 0.0 < cfg.duty_max < 1.0:
        raise ConfigError("duty_max must lie in (0, 1)")
    if cfg.sim_kick < 0:
        raise ConfigError("kick must be >= 0")
    if cfg.jobs < 0:
        raise ConfigError("jobs must be >= 0")
    return cfg
