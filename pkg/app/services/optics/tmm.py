"""
Characteristic-matrix (transfer-matrix) optics for planar stacks
Stack order is ambient -> substrate; thicknesses in nm, energies in eV, angles in degrees
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np
import pandas as pd

from app.services.optics.dielectric import ConstantIndex, DielectricModel, LorentzSet
from app.services.polariton.dispersion import AngleGrid
from app.utils.constants import HBARC_EV_NM
from app.utils.errors import TransferMatrixError, ValidationError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

SPECTRUM_COLUMNS = ["angle_deg", "energy_ev", "transmission", "reflection", "absorption"]
CONSERVATION_TOL = 1e-9


class Polarization(str, Enum):
    TE = "te"
    TM = "tm"

    @classmethod
    def parse(cls, value: Union[str, "Polarization"]) -> "Polarization":
        if isinstance(value, Polarization):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValidationError(f"unknown polarization '{value}' (expected te or tm)") from None


@dataclass(frozen=True)
class Layer:
    """thickness in nm; None marks the semi-infinite ambient/substrate"""
    dielectric: DielectricModel
    thickness: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        if self.thickness is not None and not (np.isfinite(self.thickness) and self.thickness > 0):
            raise ValidationError(f"layer '{self.label}' thickness must be > 0 nm, got {self.thickness}")

    @property
    def semi_infinite(self) -> bool:
        return self.thickness is None


@dataclass(frozen=True)
class Stack:
    layers: Tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if len(layers) < 2:
            raise ValidationError("a stack needs at least an ambient and a substrate")
        if not (layers[0].semi_infinite and layers[-1].semi_infinite):
            raise ValidationError("first and last layers must be semi-infinite")
        if any(layer.semi_infinite for layer in layers[1:-1]):
            raise ValidationError("interior layers need a finite thickness")
        object.__setattr__(self, "layers", layers)

    @property
    def ambient(self) -> Layer:
        return self.layers[0]

    @property
    def substrate(self) -> Layer:
        return self.layers[-1]

    @property
    def interior(self) -> Tuple[Layer, ...]:
        return self.layers[1:-1]

    def reversed(self) -> "Stack":
        return Stack(tuple(reversed(self.layers)))

    def without_oscillators(self) -> "Stack":
        """Lorentz films replaced by their background (empty cavity)"""
        return Stack(tuple(replace(layer, dielectric=layer.dielectric.background())
                           if isinstance(layer.dielectric, LorentzSet) else layer
                           for layer in self.layers))

    def with_film(self, film: LorentzSet) -> "Stack":
        return Stack(tuple(replace(layer, dielectric=film)
                           if isinstance(layer.dielectric, LorentzSet) else layer
                           for layer in self.layers))


@dataclass(frozen=True)
class Spectrum:
    energy: np.ndarray = field(repr=False)
    transmission: np.ndarray = field(repr=False)
    reflection: np.ndarray = field(repr=False)
    absorption: np.ndarray = field(repr=False)

    def __post_init__(self):
        arrays = [np.asarray(a, dtype=float) for a in
                  (self.energy, self.transmission, self.reflection, self.absorption)]
        if len({a.shape for a in arrays}) != 1:
            raise ValidationError("spectrum arrays must share one shape")
        total = arrays[1] + arrays[2] + arrays[3]
        if np.any(np.abs(total - 1) > CONSERVATION_TOL):
            raise TransferMatrixError("T + R + A deviates from 1")
        for name, a in zip(("transmission", "reflection", "absorption"), arrays[1:]):
            if np.any((a < -CONSERVATION_TOL) | (a > 1 + CONSERVATION_TOL)):
                raise TransferMatrixError(f"{name} outside [0, 1]: min {a.min():.3g}, max {a.max():.3g}")
        for name, a in zip(("energy", "transmission", "reflection", "absorption"), arrays):
            object.__setattr__(self, name, a)


def build_cavity_stack(film: DielectricModel, film_thickness: float, mirror: DielectricModel,
                       mirror_thickness: float, ambient_index: float = 1.0,
                       substrate_index: float = 1.52) -> Stack:
    """ambient / mirror / film / mirror / substrate"""
    return Stack((
        Layer(ConstantIndex(ambient_index), None, "ambient"),
        Layer(mirror, mirror_thickness, "mirror"),
        Layer(film, film_thickness, "film"),
        Layer(mirror, mirror_thickness, "mirror"),
        Layer(ConstantIndex(substrate_index), None, "substrate"),
    ))


def _normal_component(n: np.ndarray, s0: np.ndarray) -> np.ndarray:
    """n cos(theta_j) with Im >= 0 (decaying or outgoing wave)"""
    q = np.sqrt(n.astype(complex) ** 2 - s0 ** 2 + 0j)
    return np.where(q.imag < 0, -q, q)


def _admittance(n: np.ndarray, q: np.ndarray, pol: Polarization) -> np.ndarray:
    if pol is Polarization.TE:
        return q
    if np.any(q == 0):
        raise TransferMatrixError("TM admittance undefined at grazing incidence inside a layer")
    return n.astype(complex) ** 2 / q


def transfer_matrix(s: Stack, e: ArrayLike, theta: float,
                    pol: Union[Polarization, str] = Polarization.TE) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    """(T, R, A) of the stack for light incident from the ambient side"""
    pol = Polarization.parse(pol)
    if not 0 <= theta < 90:
        raise ValidationError(f"theta must lie in [0, 90) degrees, got {theta}")
    scalar = np.ndim(e) == 0
    energy = np.atleast_1d(np.asarray(e, dtype=float))
    if np.any(energy <= 0):
        raise ValidationError("photon energies must be > 0 eV")

    n0 = s.ambient.dielectric.refractive_index(energy)
    if np.any(np.abs(n0.imag) > 1e-12):
        raise ValidationError("the ambient medium must be lossless")
    s0 = n0.real * np.sin(np.deg2rad(theta))
    k0 = energy / HBARC_EV_NM

    eta0 = _admittance(n0, _normal_component(n0, s0), pol)

    m11 = np.ones(energy.shape, dtype=complex)
    m12 = np.zeros(energy.shape, dtype=complex)
    m21 = np.zeros(energy.shape, dtype=complex)
    m22 = np.ones(energy.shape, dtype=complex)
    for layer in s.interior:
        n = layer.dielectric.refractive_index(energy)
        q = _normal_component(n, s0)
        eta = _admittance(n, q, pol)
        delta = k0 * layer.thickness * q
        cos_d, sin_d = np.cos(delta), np.sin(delta)
        # exp(-i w t) convention: N = n + ik, Im q >= 0
        l11, l12, l21, l22 = cos_d, -1j * sin_d / eta, -1j * eta * sin_d, cos_d
        m11, m12, m21, m22 = (m11 * l11 + m12 * l21, m11 * l12 + m12 * l22,
                              m21 * l11 + m22 * l21, m21 * l12 + m22 * l22)

    n_sub = s.substrate.dielectric.refractive_index(energy)
    eta_s = _admittance(n_sub, _normal_component(n_sub, s0), pol)
    b = m11 + m12 * eta_s
    c = m21 + m22 * eta_s
    denom = eta0 * b + c

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        transmission = 4 * eta0.real * eta_s.real / np.abs(denom) ** 2
        reflection = np.abs((eta0 * b - c) / denom) ** 2

    bad = ~(np.isfinite(transmission) & np.isfinite(reflection)) | (denom == 0)
    if np.any(bad):
        where = energy[np.argmax(bad)]
        raise TransferMatrixError(f"singular transfer matrix at E={where:.6f} eV, theta={theta} deg ({pol.value})")

    absorption = 1.0 - transmission - reflection
    if scalar:
        return float(transmission[0]), float(reflection[0]), float(absorption[0])
    return transmission, reflection, absorption


def simulate_spectrum(s: Stack, energies: ArrayLike, theta: float,
                      pol: Union[Polarization, str] = Polarization.TE) -> Spectrum:
    energy = np.asarray(energies, dtype=float)
    t, r, a = transfer_matrix(s, energy, theta, pol)
    return Spectrum(energy, t, r, a)


def simulate_angle_spectra(s: Stack, g: AngleGrid, energies: ArrayLike,
                           pol: Union[Polarization, str] = Polarization.TE) -> Dict[float, Spectrum]:
    """One spectrum per angle, in grid order"""
    energy = np.asarray(energies, dtype=float)
    if energy.ndim != 1 or energy.size < 3:
        raise ValidationError("energy grid needs at least three points")
    spectra = {float(theta): simulate_spectrum(s, energy, float(theta), pol) for theta in g.angles}
    logger.info("🔬 Simulated %d angles x %d energies (%s)", len(g), energy.size, Polarization.parse(pol).value)
    return spectra


def energy_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Uniform inclusive grid"""
    if step <= 0 or stop <= start:
        raise ValidationError(f"invalid energy grid {start}..{stop} step {step}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def spectra_to_frame(spectra: Dict[float, Spectrum]) -> pd.DataFrame:
    frames = [pd.DataFrame({"angle_deg": np.full(sp.energy.shape, angle), "energy_ev": sp.energy,
                            "transmission": sp.transmission, "reflection": sp.reflection,
                            "absorption": sp.absorption}, columns=SPECTRUM_COLUMNS)
              for angle, sp in spectra.items()]
    return pd.concat(frames, ignore_index=True)


def frame_to_spectra(frame: pd.DataFrame) -> Dict[float, Spectrum]:
    missing = [c for c in SPECTRUM_COLUMNS if c not in frame.columns]
    if missing:
        raise ValidationError(f"spectrum table lacks columns {missing}")
    spectra = {}
    for angle, rows in frame.groupby("angle_deg", sort=True):
        rows = rows.sort_values("energy_ev")
        spectra[float(angle)] = Spectrum(rows["energy_ev"].to_numpy(), rows["transmission"].to_numpy(),
                                         rows["reflection"].to_numpy(), rows["absorption"].to_numpy())
    return spectra


def stack_summary(s: Stack) -> Iterable[str]:
    for layer in s.layers:
        thickness = "semi-infinite" if layer.semi_infinite else f"{layer.thickness:g} nm"
        yield f"{layer.label or type(layer.dielectric).__name__}: {thickness}"
