"""
Dielectric models for the cavity layers
- ConstantIndex: fixed complex index n + ik
- TabulatedIndex: (energy, n, k) rows, linear interpolation (e.g. the bundled Au table)
- LorentzSet: eps_inf + sum_j f_j / (e_res_j^2 - E^2 - i gamma_j E) for the active film
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import brentq, minimize_scalar

from app.utils.constants import HBARC_EV_CM
from app.utils.errors import CalibrationError, ValidationError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

TABLE_COLUMNS = ["energy_ev", "n", "k"]
BUNDLED_AU_TABLE = Path(__file__).resolve().parents[2] / "data" / "au_johnson_christy.csv"


def _energies(e: ArrayLike) -> np.ndarray:
    arr = np.asarray(e, dtype=float)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValidationError("photon energies must be finite and > 0 eV")
    return arr


class DielectricModel(ABC):
    @abstractmethod
    def epsilon(self, e: ArrayLike) -> np.ndarray: ...

    def refractive_index(self, e: ArrayLike) -> np.ndarray:
        """Complex index n + ik with k >= 0 for passive media"""
        return np.sqrt(self.epsilon(e).astype(complex))

    @property
    def is_lossless(self) -> bool:
        return False


@dataclass(frozen=True)
class ConstantIndex(DielectricModel):
    n: float
    k: float = 0.0

    def __post_init__(self):
        if self.n <= 0 or self.k < 0:
            raise ValidationError(f"constant index needs n > 0 and k >= 0, got {self.n}+{self.k}i")

    def epsilon(self, e: ArrayLike) -> np.ndarray:
        shape = np.shape(_energies(e))
        return np.full(shape, complex(self.n, self.k) ** 2, dtype=complex)

    def refractive_index(self, e: ArrayLike) -> np.ndarray:
        return np.full(np.shape(_energies(e)), complex(self.n, self.k), dtype=complex)

    @property
    def is_lossless(self) -> bool:
        return self.k == 0


@dataclass(frozen=True)
class TabulatedIndex(DielectricModel):
    energy: np.ndarray = field(repr=False)
    n: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)
    name: str = "tabulated"
    _clamp_warned: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        energy = np.asarray(self.energy, dtype=float)
        n = np.asarray(self.n, dtype=float)
        k = np.asarray(self.k, dtype=float)
        if not (energy.shape == n.shape == k.shape) or energy.ndim != 1 or energy.size < 2:
            raise ValidationError(f"{self.name}: need at least two (energy, n, k) rows of equal length")
        if np.any(np.diff(energy) <= 0):
            raise ValidationError(f"{self.name}: energies must be strictly increasing")
        if np.any(k < 0):
            raise ValidationError(f"{self.name}: extinction coefficient k must be >= 0")
        object.__setattr__(self, "energy", energy)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)

    def refractive_index(self, e: ArrayLike) -> np.ndarray:
        arr = _energies(e)
        outside = np.any(arr < self.energy[0]) or np.any(arr > self.energy[-1])
        if outside and not self._clamp_warned:
            object.__setattr__(self, "_clamp_warned", True)
            logger.warning("⚠️ %s: energies outside %.3f..%.3f eV are clamped to the table ends",
                           self.name, self.energy[0], self.energy[-1])
        return np.interp(arr, self.energy, self.n) + 1j * np.interp(arr, self.energy, self.k)

    def epsilon(self, e: ArrayLike) -> np.ndarray:
        return self.refractive_index(e) ** 2


@dataclass(frozen=True)
class LorentzOscillator:
    f: float
    e_res: float
    gamma: float

    def __post_init__(self):
        if self.f < 0:
            raise ValidationError(f"oscillator strength must be >= 0 eV^2, got {self.f}")
        if self.e_res <= 0:
            raise ValidationError(f"resonance energy must be > 0 eV, got {self.e_res}")
        if self.gamma <= 0:
            raise ValidationError(f"damping gamma must be > 0 eV, got {self.gamma}")


@dataclass(frozen=True)
class LorentzSet(DielectricModel):
    eps_inf: float
    oscillators: Tuple[LorentzOscillator, ...] = ()

    def __post_init__(self):
        if self.eps_inf < 1:
            raise ValidationError(f"eps_inf must be >= 1, got {self.eps_inf}")
        object.__setattr__(self, "oscillators", tuple(self.oscillators))

    def epsilon(self, e: ArrayLike) -> np.ndarray:
        return lorentz_epsilon(self, e)

    def scaled(self, factor: float) -> "LorentzSet":
        """Same film with every oscillator strength multiplied by factor (density scaling)"""
        return replace(self, oscillators=tuple(replace(o, f=o.f * factor) for o in self.oscillators))

    def background(self) -> "LorentzSet":
        """Film with its oscillators removed (empty-cavity reference)"""
        return replace(self, oscillators=())

    @property
    def is_lossless(self) -> bool:
        return all(o.f == 0 for o in self.oscillators)


def lorentz_epsilon(m: LorentzSet, e: ArrayLike) -> np.ndarray:
    energy = _energies(e)
    eps = np.full(energy.shape, m.eps_inf, dtype=complex)
    for osc in m.oscillators:
        eps = eps + osc.f / (osc.e_res ** 2 - energy ** 2 - 1j * osc.gamma * energy)
    return eps


def absorption_coefficient(epsilon: ArrayLike, e: ArrayLike) -> np.ndarray:
    """alpha = 2 E kappa / (hbar c) in 1/cm, kappa = Im sqrt(eps)"""
    kappa = np.sqrt(np.asarray(epsilon, dtype=complex)).imag
    return 2 * _energies(e) * kappa / HBARC_EV_CM


def film_absorption_spectrum(m: DielectricModel, energies: ArrayLike) -> pd.DataFrame:
    energy = _energies(energies)
    return pd.DataFrame({"energy_ev": energy,
                         "alpha_cm": absorption_coefficient(m.epsilon(energy), energy)})


def peak_absorption(m: LorentzSet) -> Tuple[float, float]:
    """(energy, alpha) of the absorption maximum of a single-band film"""
    if not m.oscillators:
        return 0.0, 0.0
    lo = max(min(o.e_res - 8 * o.gamma for o in m.oscillators), 1e-3)
    hi = max(np.sqrt(o.e_res ** 2 + o.f / m.eps_inf) + 8 * o.gamma for o in m.oscillators)
    grid = np.linspace(lo, hi, 4001)
    alpha = absorption_coefficient(m.epsilon(grid), grid)
    i = int(np.argmax(alpha))
    if alpha[i] <= 0:
        return float(grid[i]), 0.0
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    best = minimize_scalar(lambda x: -absorption_coefficient(m.epsilon(x), x), bounds=(a, b),
                           method="bounded", options={"xatol": 1e-10})
    return float(best.x), float(-best.fun)


def calibrate_oscillator_strength(target_alpha: float, e_res: float, gamma: float,
                                  eps_inf: float) -> float:
    """Oscillator strength f (eV^2) whose peak absorption coefficient equals target_alpha"""
    if target_alpha < 0:
        raise ValidationError(f"target absorption must be >= 0, got {target_alpha}")
    if target_alpha == 0:
        return 0.0

    def mismatch(f: float) -> float:
        film = LorentzSet(eps_inf, (LorentzOscillator(f, e_res, gamma),))
        return peak_absorption(film)[1] - target_alpha

    f_hi = 1.0
    for _ in range(60):
        if mismatch(f_hi) >= 0:
            break
        f_hi *= 2
    else:
        raise CalibrationError(f"no oscillator strength reaches alpha={target_alpha:.4g} 1/cm")

    f = brentq(mismatch, 0.0, f_hi, xtol=1e-14, rtol=1e-12, maxiter=500)
    logger.info("✅ Calibrated oscillator strength f=%.6f eV^2 for alpha=%.4g 1/cm", f, target_alpha)
    return float(f)


def load_tabulated(path: Union[str, Path], name: str = None) -> TabulatedIndex:
    """Read a CSV with header energy_ev,n,k"""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"dielectric table not found: {path}")
    table = pd.read_csv(path, encoding="utf-8")
    if list(table.columns) != TABLE_COLUMNS:
        raise ValidationError(f"{path}: header must be {','.join(TABLE_COLUMNS)}, got {','.join(table.columns)}")
    if table.isna().any().any():
        raise ValidationError(f"{path}: empty cells are not allowed")
    return TabulatedIndex(table["energy_ev"].to_numpy(), table["n"].to_numpy(),
                          table["k"].to_numpy(), name=name or path.stem)


def load_gold(path: Union[str, Path, None] = None) -> TabulatedIndex:
    return load_tabulated(path or BUNDLED_AU_TABLE, name="Au")
