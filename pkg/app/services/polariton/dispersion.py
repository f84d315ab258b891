"""
Fabry-Perot cavity dispersion and polariton branch tables versus incidence angle
Angles are external incidence angles in degrees; refraction is absorbed into n_eff
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import pandas as pd

from app.services.polariton.hopfield import CouplingParams, ModelKind, branch_energies
from app.utils.constants import ELECTRON_REST_ENERGY_EV, HBARC_EV_UM
from app.utils.errors import DispersionError, ValidationError

logger = logging.getLogger(__name__)

MAX_ANGLE_DEG = 89.0

DISPERSION_COLUMNS = ["theta_deg", "e_cav_ev", "lp_ev", "up_ev", "k_lp_um", "k_up_um"]


@dataclass(frozen=True)
class CavityModel:
    """Normal-incidence cavity energy e0 (eV) and effective refractive index"""
    e0: float
    n_eff: float

    def __post_init__(self):
        if not np.isfinite(self.e0) or self.e0 <= 0:
            raise ValidationError(f"cavity e0 must be > 0 eV, got {self.e0}")
        if not np.isfinite(self.n_eff) or self.n_eff < 1:
            raise ValidationError(f"n_eff must be >= 1, got {self.n_eff}")


@dataclass(frozen=True)
class AngleGrid:
    angles: np.ndarray = field(repr=False)

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float).ravel()
        if angles.size == 0:
            raise ValidationError("angle grid is empty")
        if np.any(angles < 0) or np.any(angles > MAX_ANGLE_DEG):
            raise ValidationError(f"angles must lie within [0, {MAX_ANGLE_DEG}] degrees")
        if np.any(np.diff(angles) <= 0):
            raise ValidationError("angles must be strictly increasing")
        object.__setattr__(self, "angles", angles)

    @classmethod
    def from_range(cls, start: float, stop: float, step: float) -> "AngleGrid":
        """Inclusive grid start..stop"""
        if step <= 0:
            raise ValidationError(f"angle step must be > 0, got {step}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return cls(start + step * np.arange(count))

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "AngleGrid":
        return cls(np.asarray(values, dtype=float))

    def __len__(self) -> int:
        return int(self.angles.size)

    def k_par(self, energies: Union[float, np.ndarray]) -> np.ndarray:
        return in_plane_wavevector(energies, self.angles)


def in_plane_wavevector(energy: Union[float, np.ndarray], theta: Union[float, np.ndarray]) -> np.ndarray:
    """k_par = (E / hbar c) sin(theta), in 1/um"""
    return np.asarray(energy, dtype=float) / HBARC_EV_UM * np.sin(np.deg2rad(theta))


def cavity_energy(m: CavityModel, theta: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """e0 / sqrt(1 - sin^2(theta) / n_eff^2)"""
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(theta_arr < 0) or np.any(theta_arr >= 90):
        raise ValidationError(f"theta must lie in [0, 90) degrees, got {theta}")
    ratio = np.sin(np.deg2rad(theta_arr)) ** 2 / m.n_eff ** 2
    if np.any(ratio >= 1):
        raise DispersionError(f"evanescent cavity mode at theta={theta} for n_eff={m.n_eff}")
    energy = m.e0 / np.sqrt(1 - ratio)
    return float(energy) if np.ndim(theta) == 0 else energy


def photon_effective_mass(m: CavityModel) -> float:
    """Cavity-photon mass e0 n_eff^2 / c^2, in units of the bare electron mass"""
    return m.e0 * m.n_eff ** 2 / ELECTRON_REST_ENERGY_EV


def detuning(e_cav: Union[float, np.ndarray], p: CouplingParams) -> Union[float, np.ndarray]:
    """E_cav - E_x; positive means blue-detuned"""
    return e_cav - p.e_x


def branch_dispersion(p: CouplingParams, m: CavityModel, g: AngleGrid,
                      k: Union[ModelKind, str] = ModelKind.FULL_HOPFIELD) -> pd.DataFrame:
    """Per-angle cavity and polariton energies, ordered by theta"""
    e_cav = cavity_energy(m, g.angles)
    energies = branch_energies(np.asarray(e_cav), p, k)
    table = pd.DataFrame({
        "theta_deg": g.angles,
        "e_cav_ev": e_cav,
        "lp_ev": energies.lp,
        "up_ev": energies.up,
        "k_lp_um": in_plane_wavevector(energies.lp, g.angles),
        "k_up_um": in_plane_wavevector(energies.up, g.angles),
    }, columns=DISPERSION_COLUMNS)
    logger.debug("Dispersion over %d angles (%s)", len(g), ModelKind.parse(k).value)
    return table
