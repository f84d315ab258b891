"""
Run configuration
Module-level defaults plus the INI loader that turns each section into its domain type.
Unknown sections or keys are rejected with their line number.
"""

import configparser
import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np

from app.services.fitting.fitter import DEFAULT_BOUNDS, FIT_PARAMS, FitConfig
from app.services.optics.tmm import Polarization, energy_grid
from app.services.polariton.dispersion import AngleGrid, CavityModel
from app.services.polariton.hopfield import CouplingParams, ModelKind, cavity_energy_for_lp
from app.services.polariton.observables import MaterialParams
from app.utils.errors import ConfigError, PolaritonError, ValidationError

logger = logging.getLogger(__name__)

# Coupling
DEFAULT_E_X = 1.22
DEFAULT_RABI = 0.50

# Cavity
DEFAULT_N_EFF = 1.7
DEFAULT_LP_TARGET = 1.02

# Material
DEFAULT_M_EX = 25.0
DEFAULT_ALPHA_PEAK = 1.05e5
DEFAULT_SIGMA = 6.14e-17
DEFAULT_MOLAR_ABSORPTIVITY = 3.7e4
DEFAULT_M_PH_OVERRIDE = 1.0e-4

# Film
DEFAULT_E_RES = 1.22
DEFAULT_GAMMA = 0.15
DEFAULT_EPS_INF = 2.5

# Stack
DEFAULT_LAYERS = "au:22, film:300, au:22"
DEFAULT_SUBSTRATE_INDEX = 1.52

DEFAULT_OUTPUT_DIR = "out"
BUNDLED_CONFIG = Path(__file__).resolve().parents[1] / "data" / "default_config.ini"

# io only moves files around; it never enters the hash
NON_SEMANTIC_SECTIONS = ("io",)


def _text(raw: str) -> str:
    return raw.strip()


def _floats(raw: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in raw.split(",") if part.strip())


def _model(raw: str) -> str:
    return ModelKind.parse(raw).value


def _polarization(raw: str) -> str:
    return Polarization.parse(raw).value


def _names(raw: str) -> Tuple[str, ...]:
    return tuple(part.strip().lower() for part in raw.split(",") if part.strip())


# section -> key -> (parser, default); None default marks an optional key.
# default_config.ini carries the same values and is read underneath every run.
SCHEMA: Dict[str, Dict[str, Tuple[Callable[[str], Any], Any]]] = {
    "coupling": {
        "e_x": (float, DEFAULT_E_X),
        "rabi": (float, DEFAULT_RABI),
    },
    "cavity": {
        "e0": (float, None),
        "n_eff": (float, DEFAULT_N_EFF),
        "lp_target": (float, DEFAULT_LP_TARGET),
    },
    "material": {
        "m_ex": (float, DEFAULT_M_EX),
        "m_ph_override": (float, DEFAULT_M_PH_OVERRIDE),
        "alpha_peak": (float, DEFAULT_ALPHA_PEAK),
        "sigma": (float, DEFAULT_SIGMA),
        "molar_absorptivity": (float, DEFAULT_MOLAR_ABSORPTIVITY),
    },
    "film": {
        "e_res": (float, DEFAULT_E_RES),
        "gamma": (float, DEFAULT_GAMMA),
        "eps_inf": (float, DEFAULT_EPS_INF),
        "alpha_target": (float, DEFAULT_ALPHA_PEAK),
        "strength": (float, None),
        "strength_scale": (float, 1.0),
    },
    "stack": {
        "layers": (_text, DEFAULT_LAYERS),
        "ambient_index": (float, 1.0),
        "substrate_index": (float, DEFAULT_SUBSTRATE_INDEX),
        "au_table": (_text, None),
        "polarization": (_polarization, Polarization.TE.value),
    },
    "grid": {
        "angle_start": (float, 0.0),
        "angle_stop": (float, 60.0),
        "angle_step": (float, 5.0),
        "energy_start": (float, 0.6),
        "energy_stop": (float, 2.2),
        "energy_step": (float, 0.001),
    },
    "fit": {
        "model": (_model, ModelKind.FULL_HOPFIELD.value),
        "restarts": (int, 4),
        "max_iter": (int, 4000),
        "xatol": (float, 1e-9),
        "fatol": (float, 1e-14),
        "free": (_names, FIT_PARAMS),
        "seed": (int, 0),
        **{f"{name}_bounds": (_floats, DEFAULT_BOUNDS[name]) for name in FIT_PARAMS},
    },
    "peaks": {
        "min_prominence": (float, 0.002),
        "window": (int, 5),
    },
    "io": {
        "output_dir": (_text, DEFAULT_OUTPUT_DIR),
    },
}


@dataclass(frozen=True)
class FilmSettings:
    e_res: float
    gamma: float
    eps_inf: float
    alpha_target: float
    strength: Optional[float]
    strength_scale: float

    def __post_init__(self):
        if self.strength_scale < 0:
            raise ConfigError(f"film.strength_scale must be >= 0, got {self.strength_scale}")
        if self.alpha_target < 0:
            raise ConfigError(f"film.alpha_target must be >= 0, got {self.alpha_target}")


@dataclass(frozen=True)
class StackSettings:
    """layers: (material, thickness_nm) with material 'au', 'film' or a constant index"""
    layers: Tuple[Tuple[Union[str, float], float], ...]
    ambient_index: float
    substrate_index: float
    au_table: Optional[Path]
    polarization: Polarization


@dataclass(frozen=True)
class GridSettings:
    angles: AngleGrid
    energy_start: float
    energy_stop: float
    energy_step: float

    @property
    def energies(self) -> np.ndarray:
        return energy_grid(self.energy_start, self.energy_stop, self.energy_step)


@dataclass(frozen=True)
class PeakSettings:
    min_prominence: float
    window: int


@dataclass(frozen=True)
class RunConfig:
    coupling: CouplingParams
    cavity: CavityModel
    lp_target: float
    e0_solved: bool
    material: MaterialParams
    molar_absorptivity: float
    film: FilmSettings
    stack: StackSettings
    grid: GridSettings
    fit: FitConfig
    peaks: PeakSettings
    output_dir: Path
    values: Dict[str, Dict[str, Any]] = field(repr=False, compare=False)
    source: Optional[Path] = None

    @property
    def model(self) -> ModelKind:
        return self.fit.model

    @property
    def config_hash(self) -> str:
        return config_hash(self.values)


def _key_line(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r"^\[(.+)\]$", stripped)
        if header:
            current = header.group(1).strip().lower()
            if key is None and current == section:
                return number
            continue
        if key is not None and current == section:
            name = re.split(r"[=:]", stripped, maxsplit=1)[0].strip().lower()
            if name == key:
                return number
    return None


def _where(text: str, section: str, key: Optional[str] = None) -> str:
    line = _key_line(text, section, key) if text else None
    return f" (line {line})" if line else ""


def read_raw(path: Optional[Union[str, Path]]) -> Tuple[Dict[str, Dict[str, str]], str]:
    """Raw string values per section, checked against SCHEMA"""
    if path is None:
        return {}, ""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")

    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from e

    raw: Dict[str, Dict[str, str]] = {}
    for section in parser.sections():
        name = section.strip().lower()
        if name not in SCHEMA:
            raise ConfigError(f"unknown section '{name}'{_where(text, name)}")
        for key, value in parser.items(section):
            if key not in SCHEMA[name]:
                raise ConfigError(f"unknown key '{name}.{key}'{_where(text, name, key)}")
            raw.setdefault(name, {})[key] = value
    return raw, text


def _parse_values(raw: Mapping[str, Mapping[str, str]], text: str) -> Dict[str, Dict[str, Any]]:
    values: Dict[str, Dict[str, Any]] = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (parse, default) in keys.items():
            given = raw.get(section, {}).get(key)
            if given is None or given.strip() == "":
                values[section][key] = default
                continue
            try:
                values[section][key] = parse(given)
            except (ValueError, ValidationError):
                raise ConfigError(f"{section}.{key}: cannot parse '{given}'{_where(text, section, key)}") from None
    return values


def _parse_layers(spec: str) -> Tuple[Tuple[Union[str, float], float], ...]:
    layers = []
    for part in spec.split(","):
        if not part.strip():
            continue
        material, sep, thickness = part.partition(":")
        if not sep:
            raise ConfigError(f"stack.layers: expected material:thickness, got '{part.strip()}'")
        material = material.strip().lower()
        try:
            thickness_nm = float(thickness)
        except ValueError:
            raise ConfigError(f"stack.layers: bad thickness in '{part.strip()}'") from None
        if thickness_nm <= 0:
            raise ConfigError(f"stack.layers: thickness must be > 0 nm in '{part.strip()}'")
        if material not in ("au", "film"):
            try:
                material = float(material)
            except ValueError:
                raise ConfigError(f"stack.layers: unknown material '{material}' (au, film or an index)") from None
        layers.append((material, thickness_nm))
    if not layers:
        raise ConfigError("stack.layers: at least one layer is required")
    return tuple(layers)


def _bounds(fit: Mapping[str, Any]) -> Dict[str, Tuple[float, float]]:
    bounds = {}
    for name in FIT_PARAMS:
        pair = fit[f"{name}_bounds"]
        if pair is None:
            continue
        if len(pair) != 2:
            raise ConfigError(f"fit.{name}_bounds needs two values 'lower, upper', got {pair}")
        bounds[name] = (pair[0], pair[1])
    return bounds


def build_run_config(values: Dict[str, Dict[str, Any]], source: Optional[Path] = None) -> RunConfig:
    c, f, s, g, ft = values["cavity"], values["film"], values["stack"], values["grid"], values["fit"]
    fit = FitConfig(free=ft["free"], bounds=_bounds(ft), model=ModelKind.parse(ft["model"]),
                    xatol=ft["xatol"], fatol=ft["fatol"], max_iter=ft["max_iter"],
                    restarts=ft["restarts"], seed=ft["seed"])
    coupling = CouplingParams(**values["coupling"])

    e0_solved = c["e0"] is None
    e0 = cavity_energy_for_lp(c["lp_target"], coupling, fit.model) if e0_solved else c["e0"]
    if e0_solved:
        logger.debug("Cavity e0=%.6f eV solved from LP(0)=%.4f eV", e0, c["lp_target"])

    m = values["material"]
    return RunConfig(
        coupling=coupling,
        cavity=CavityModel(e0=e0, n_eff=c["n_eff"]),
        lp_target=c["lp_target"],
        e0_solved=e0_solved,
        material=MaterialParams(m_ex=m["m_ex"], m_ph_override=m["m_ph_override"],
                                alpha_peak=m["alpha_peak"], sigma=m["sigma"]),
        molar_absorptivity=m["molar_absorptivity"],
        film=FilmSettings(**f),
        stack=StackSettings(layers=_parse_layers(s["layers"]), ambient_index=s["ambient_index"],
                            substrate_index=s["substrate_index"],
                            au_table=Path(s["au_table"]) if s["au_table"] else None,
                            polarization=Polarization.parse(s["polarization"])),
        grid=GridSettings(angles=AngleGrid.from_range(g["angle_start"], g["angle_stop"], g["angle_step"]),
                          energy_start=g["energy_start"], energy_stop=g["energy_stop"],
                          energy_step=g["energy_step"]),
        fit=fit,
        peaks=PeakSettings(**values["peaks"]),
        output_dir=Path(values["io"]["output_dir"]),
        values=values,
        source=source,
    )


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Layer the bundled defaults, the INI at path (if any) and overrides, in that order.
    overrides maps 'section.key' to a raw value.
    """
    raw, _ = read_raw(BUNDLED_CONFIG)
    user, text = read_raw(path)
    for section, keys in user.items():
        raw.setdefault(section, {}).update(keys)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown override '{dotted}'")
        raw.setdefault(section, {})[key] = str(value)

    values = _parse_values(raw, text)
    try:
        cfg = build_run_config(values, Path(path) if path else None)
    except ConfigError:
        raise
    except PolaritonError as e:
        where = f" in {path}" if path else ""
        raise type(e)(f"invalid configuration{where}: {e}") from e
    logger.debug("Loaded configuration %s (hash %s)", path or "<defaults>", cfg.config_hash[:12])
    return cfg


def _canonical(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return [_canonical(v) for v in value]
    return value


def config_hash(values: Mapping[str, Mapping[str, Any]]) -> str:
    """SHA-256 of the semantic sections as canonical JSON"""
    semantic = {section: {key: _canonical(v) for key, v in keys.items()}
                for section, keys in values.items() if section not in NON_SEMANTIC_SECTIONS}
    payload = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
