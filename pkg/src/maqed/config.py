"""Scenario configuration: strict TOML schema, resolution and re-emission.

Scenario files double as regression fixtures, so parsing is strict (unknown
keys are rejected, types are checked) and a resolved configuration can be
dumped back to TOML that re-parses to an equal structure.
"""

from __future__ import annotations

import math
from pathlib import Path

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - py310 path
    import tomli as tomllib

import numpy as np

from maqed.constants import constants_by_name
from maqed.errors import ConfigError
from maqed.medium import (
    Constant,
    InhomogeneousModel,
    Lorentz,
    Medium,
    RectPulse,
    Region,
    load_tabulated_csv,
)
from maqed.mode_space import BoxGeometry

__all__ = ["load_config", "resolve", "dump_toml", "ScenarioConfig"]

_TWO_PI = 2.0 * math.pi


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _check_keys(table, allowed, path):
    unknown = set(table) - set(allowed)
    if unknown:
        _fail(path, f"unknown key(s) {sorted(unknown)!r}; allowed: {sorted(allowed)!r}")


def _get(table, key, path, kind, default=None, required=False, positive=False):
    if key not in table:
        if required:
            _fail(path, f"missing required key {key!r}")
        return default
    val = table[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if kind is not None and not isinstance(val, kind):
        _fail(f"{path}.{key}", f"expected {kind}, got {type(val).__name__}")
    if positive and val <= 0:
        _fail(f"{path}.{key}", "must be positive")
    return val


def _tensor(raw, path):
    try:
        t = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        _fail(path, "expected a 3x3 array of numbers")
    if t.shape != (3, 3):
        _fail(path, f"expected shape (3, 3), got {t.shape}")
    return t


def _vec3(raw, path, dtype=float):
    try:
        v = np.array(raw, dtype=dtype)
    except (TypeError, ValueError):
        _fail(path, "expected a 3-vector")
    if v.shape != (3,):
        _fail(path, f"expected a 3-vector, got shape {v.shape}")
    return v


_MODEL_KEYS = {
    "none": set(),
    "lorentz": {"plasma", "gamma", "K"},
    "rect_pulse": {"chi0", "delta"},
    "constant": {"chi0"},
    "tabulated": {"path"},
}


def _build_model(table, path, base_dir):
    kind = _get(table, "model", path, str, default="none")
    if kind not in _MODEL_KEYS:
        _fail(f"{path}.model", f"unknown model {kind!r}; one of {sorted(_MODEL_KEYS)}")
    _check_keys(table, {"model"} | _MODEL_KEYS[kind], path)
    if kind == "none":
        return None
    if kind == "lorentz":
        return Lorentz(
            plasma=_get(table, "plasma", path, float, required=True),
            gamma=_get(table, "gamma", path, float, required=True),
            K=_tensor(table.get("K"), f"{path}.K"),
        )
    if kind == "rect_pulse":
        return RectPulse(
            chi0=_tensor(table.get("chi0"), f"{path}.chi0"),
            delta=_get(table, "delta", path, float, required=True, positive=True),
        )
    if kind == "constant":
        return Constant(chi0=_tensor(table.get("chi0"), f"{path}.chi0"))
    csv_path = Path(_get(table, "path", path, str, required=True))
    if not csv_path.is_absolute():
        csv_path = base_dir / csv_path
    if not csv_path.exists():
        _fail(f"{path}.path", f"tabulated file {csv_path} not found")
    try:
        return load_tabulated_csv(csv_path)
    except ValueError as exc:
        _fail(f"{path}.path", f"bad tabulated file: {exc}")


class ScenarioConfig:
    """Fully resolved scenario: constants, geometry, medium, grids, state."""

    def __init__(self, resolved: dict, base_dir: Path):
        self.raw = resolved
        self.base_dir = base_dir
        self.consts = constants_by_name(resolved["constants"]["units"])
        g = resolved["geometry"]
        self.geometry = BoxGeometry(*g["lengths"], n_max=g["n_max"])
        self.medium, self.position = self._medium(resolved["medium"])
        self.omega_grid = self._omega_grid(resolved["grids"])
        gr = resolved["grids"]
        self.t_grid = np.linspace(gr["t_start"], gr["t_stop"], gr["t_num"])
        self.omega_q = np.array(resolved["kernels"]["omega_q"], dtype=float)
        self.kernel_modes = [tuple(m) for m in resolved["kernels"]["modes"]]
        self.kernel_method = resolved["kernels"]["method"]
        self.r_points = np.array(resolved["evolve"]["r_points"], dtype=float)
        self.out_dir = Path(resolved["output"]["dir"])
        self.plots = resolved["output"]["plots"]

    def _medium(self, m):
        base = self.base_dir
        if m["regions"]:
            regions = []
            for reg in m["regions"]:
                regions.append(
                    (
                        np.array(reg["lo"], dtype=float),
                        np.array(reg["hi"], dtype=float),
                        _build_model(reg["electric"], "medium.regions.electric", base),
                        _build_model(reg["magnetic"], "medium.regions.magnetic", base),
                    )
                )
            electric = InhomogeneousModel(
                [Region(lo, hi, e) for lo, hi, e, _ in regions]
            )
            magnetic = InhomogeneousModel(
                [Region(lo, hi, g) for lo, hi, _, g in regions]
            )
            medium = Medium(electric=electric, magnetic=magnetic)
        else:
            medium = Medium(
                electric=_build_model(m["electric"], "medium.electric", base),
                magnetic=_build_model(m["magnetic"], "medium.magnetic", base),
            )
        return medium, np.array(m["position"], dtype=float)

    def _omega_grid(self, g):
        return np.geomspace(
            g["omega_ref"] / g["omega_span"],
            g["omega_ref"] * g["omega_span"],
            g["omega_num"],
        )

    def initial_state(self):
        from maqed.dynamics import InitialState

        st = self.raw["initial_state"]
        init = InitialState(omega_q=self.omega_q)
        for entry in st["photon"]:
            key = (tuple(entry["n"]), entry["lam"])
            init.photon[key] = complex(entry["re"], entry["im"])
        for which, store in (("d_amp", init.d_amp), ("b_amp", init.b_amp)):
            for entry in st[which]:
                n = tuple(entry["n"])
                arr = store.setdefault(
                    n, np.zeros((3, self.omega_q.size), dtype=complex)
                )
                arr[entry["nu"] - 1, entry["omega_index"]] += complex(
                    entry["re"], entry["im"]
                )
        for which, store in (("d_field", init.d_field), ("b_field", init.b_field)):
            for entry in st[which]:
                store[tuple(entry["n"])] = np.array(
                    entry["re"], dtype=float
                ) + 1j * np.array(entry["im"], dtype=float)
        return init


def _resolve_amplitude_entries(raw, path, vector_valued=False):
    out = []
    for i, entry in enumerate(raw):
        p = f"{path}[{i}]"
        if not isinstance(entry, dict):
            _fail(p, "expected a table")
        allowed = {"n", "re", "im"}
        if not vector_valued:
            allowed |= {"lam", "nu", "omega_index"}
        _check_keys(entry, allowed, p)
        n = entry.get("n")
        if not (isinstance(n, list) and len(n) == 3 and all(isinstance(x, int) for x in n)):
            _fail(p, "n must be a triple of integers")
        item = {"n": list(n)}
        if vector_valued:
            for key in ("re", "im"):
                v = entry.get(key, [0.0, 0.0, 0.0])
                _vec3(v, f"{p}.{key}")
                item[key] = [float(x) for x in v]
        else:
            item["re"] = float(entry.get("re", 0.0))
            item["im"] = float(entry.get("im", 0.0))
            if "lam" in entry:
                if entry["lam"] not in (1, 2):
                    _fail(p, "lam must be 1 or 2")
                item["lam"] = entry["lam"]
            if "nu" in entry:
                if entry["nu"] not in (1, 2, 3):
                    _fail(p, "nu must be 1, 2 or 3")
                item["nu"] = entry["nu"]
            if "omega_index" in entry:
                item["omega_index"] = int(entry["omega_index"])
        out.append(item)
    return out


def resolve(data: dict, base_dir: Path) -> ScenarioConfig:
    """Validate a parsed TOML tree and resolve defaults (strict schema)."""
    _check_keys(
        data,
        {"constants", "geometry", "medium", "grids", "initial_state", "kernels", "evolve", "output"},
        "config",
    )
    out: dict = {}

    c = data.get("constants", {})
    _check_keys(c, {"units"}, "constants")
    units = _get(c, "units", "constants", str, default="natural")
    if units.lower() not in ("natural", "si"):
        _fail("constants.units", f"unknown unit system {units!r}")
    out["constants"] = {"units": units.lower()}

    g = data.get("geometry", {})
    _check_keys(g, {"lengths", "n_max"}, "geometry")
    lengths = g.get("lengths", [_TWO_PI, _TWO_PI, _TWO_PI])
    if not (isinstance(lengths, list) and len(lengths) == 3):
        _fail("geometry.lengths", "expected three positive lengths")
    lengths = [float(x) for x in lengths]
    if min(lengths) <= 0:
        _fail("geometry.lengths", "lengths must be positive")
    n_max = _get(g, "n_max", "geometry", int, default=1, positive=True)
    out["geometry"] = {"lengths": lengths, "n_max": n_max}

    m = data.get("medium", {})
    _check_keys(m, {"electric", "magnetic", "position", "regions"}, "medium")
    position = m.get("position", [0.0, 0.0, 0.0])
    _vec3(position, "medium.position")
    regions_out = []
    for i, reg in enumerate(m.get("regions", [])):
        p = f"medium.regions[{i}]"
        _check_keys(reg, {"lo", "hi", "electric", "magnetic"}, p)
        lo = _vec3(reg.get("lo"), f"{p}.lo")
        hi = _vec3(reg.get("hi"), f"{p}.hi")
        if np.any(hi <= lo):
            _fail(p, "hi must exceed lo componentwise")
        regions_out.append(
            {
                "lo": [float(x) for x in lo],
                "hi": [float(x) for x in hi],
                "electric": dict(reg.get("electric", {"model": "none"})),
                "magnetic": dict(reg.get("magnetic", {"model": "none"})),
            }
        )
    out["medium"] = {
        "electric": dict(m.get("electric", {"model": "none"})),
        "magnetic": dict(m.get("magnetic", {"model": "none"})),
        "position": [float(x) for x in position],
        "regions": regions_out,
    }

    gr = data.get("grids", {})
    _check_keys(
        gr, {"omega_ref", "omega_num", "omega_span", "t_start", "t_stop", "t_num"}, "grids"
    )
    out["grids"] = {
        "omega_ref": _get(gr, "omega_ref", "grids", float, default=1.0, positive=True),
        "omega_num": _get(gr, "omega_num", "grids", int, default=2048, positive=True),
        "omega_span": _get(gr, "omega_span", "grids", float, default=1e3, positive=True),
        "t_start": _get(gr, "t_start", "grids", float, default=0.0),
        "t_stop": _get(gr, "t_stop", "grids", float, default=10.0),
        "t_num": _get(gr, "t_num", "grids", int, default=200, positive=True),
    }
    if out["grids"]["t_stop"] <= out["grids"]["t_start"]:
        _fail("grids.t_stop", "must exceed t_start")

    st = data.get("initial_state", {})
    _check_keys(st, {"photon", "d_amp", "b_amp", "d_field", "b_field"}, "initial_state")
    out["initial_state"] = {
        "photon": _resolve_amplitude_entries(st.get("photon", []), "initial_state.photon"),
        "d_amp": _resolve_amplitude_entries(st.get("d_amp", []), "initial_state.d_amp"),
        "b_amp": _resolve_amplitude_entries(st.get("b_amp", []), "initial_state.b_amp"),
        "d_field": _resolve_amplitude_entries(
            st.get("d_field", []), "initial_state.d_field", vector_valued=True
        ),
        "b_field": _resolve_amplitude_entries(
            st.get("b_field", []), "initial_state.b_field", vector_valued=True
        ),
    }
    for which in ("photon",):
        for item in out["initial_state"][which]:
            item.setdefault("lam", 1)
    for which in ("d_amp", "b_amp"):
        for item in out["initial_state"][which]:
            item.setdefault("nu", 1)
            item.setdefault("omega_index", 0)
            if not (0 <= item["omega_index"]):
                _fail(f"initial_state.{which}", "omega_index must be >= 0")

    k = data.get("kernels", {})
    _check_keys(k, {"modes", "method", "omega_q"}, "kernels")
    modes = k.get("modes", [[0, 0, 1]])
    for mode in modes:
        if not (isinstance(mode, list) and len(mode) == 3 and all(isinstance(x, int) for x in mode)):
            _fail("kernels.modes", "each mode must be a triple of integers")
    method = _get(k, "method", "kernels", str, default="auto")
    if method not in ("auto", "residue", "talbot"):
        _fail("kernels.method", f"unknown method {method!r}")
    omega_q = [float(x) for x in k.get("omega_q", [])]
    if any(x <= 0 for x in omega_q):
        _fail("kernels.omega_q", "medium frequency nodes must be positive")
    out["kernels"] = {"modes": [list(m) for m in modes], "method": method, "omega_q": omega_q}

    ev = data.get("evolve", {})
    _check_keys(ev, {"r_points"}, "evolve")
    r_points = ev.get("r_points", [[0.0, 0.0, 0.0]])
    for rp in r_points:
        _vec3(rp, "evolve.r_points")
    out["evolve"] = {"r_points": [[float(x) for x in rp] for rp in r_points]}

    o = data.get("output", {})
    _check_keys(o, {"dir", "plots"}, "output")
    out["output"] = {
        "dir": _get(o, "dir", "output", str, default="out"),
        "plots": _get(o, "plots", "output", bool, default=True),
    }

    cfg = ScenarioConfig(out, base_dir)
    # amplitude omega_index bounds need the resolved grid
    for which in ("d_amp", "b_amp"):
        for item in out["initial_state"][which]:
            if item["omega_index"] >= len(cfg.omega_q):
                _fail(
                    f"initial_state.{which}",
                    f"omega_index {item['omega_index']} outside kernels.omega_q "
                    f"(size {len(cfg.omega_q)})",
                )
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}") from None
    return resolve(data, path.parent.resolve())


def _fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    raise TypeError(f"cannot format {type(v)}")


def dump_toml(resolved: dict) -> str:
    """Emit a resolved configuration as TOML (re-parses to an equal tree)."""
    lines = []
    for section, table in resolved.items():
        plain = {k: v for k, v in table.items() if not _is_table_list(v)}
        tables = {k: v for k, v in table.items() if _is_table_list(v)}
        lines.append(f"[{section}]")
        for k, v in plain.items():
            if isinstance(v, dict):
                continue
            lines.append(f"{k} = {_fmt_value(v)}")
        for k, v in plain.items():
            if isinstance(v, dict):
                lines.append(f"\n[{section}.{k}]")
                for kk, vv in v.items():
                    lines.append(f"{kk} = {_fmt_value(vv)}")
        for k, items in tables.items():
            for item in items:
                lines.append(f"\n[[{section}.{k}]]")
                for kk, vv in item.items():
                    if isinstance(vv, dict):
                        continue
                    lines.append(f"{kk} = {_fmt_value(vv)}")
                for kk, vv in item.items():
                    if isinstance(vv, dict):
                        lines.append(f"\n[{section}.{k}.{kk}]")
                        for k3, v3 in vv.items():
                            lines.append(f"{k3} = {_fmt_value(v3)}")
        lines.append("")
    return "\n".join(lines)


def _is_table_list(v):
    return isinstance(v, list) and v and all(isinstance(x, dict) for x in v)
