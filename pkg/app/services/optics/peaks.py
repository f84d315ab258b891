"""
Spectral peak extraction
Local maxima above a prominence threshold, refined by 3-point parabolic interpolation,
then assigned to lower/upper polariton branches per angle
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple, Union

import numpy as np
import pandas as pd
from scipy.signal import find_peaks, peak_widths

from app.services.fitting.dataset import PeakDataset
from app.services.optics.tmm import Polarization, Spectrum, Stack, transfer_matrix
from app.utils.errors import ValidationError

logger = logging.getLogger(__name__)

PEAK_COLUMNS = ["angle_deg", "energy_ev", "height", "width_ev"]


@dataclass(frozen=True)
class Peak:
    energy: float
    height: float
    width: float


@dataclass(frozen=True)
class PeakList:
    peaks: Tuple[Peak, ...] = ()

    def __post_init__(self):
        peaks = tuple(sorted(self.peaks, key=lambda p: p.energy))
        object.__setattr__(self, "peaks", peaks)

    def __len__(self) -> int:
        return len(self.peaks)

    def __iter__(self) -> Iterator[Peak]:
        return iter(self.peaks)

    @property
    def energies(self) -> np.ndarray:
        return np.array([p.energy for p in self.peaks])


def parabolic_vertex(ym1: float, y0: float, yp1: float) -> Tuple[float, float]:
    """Offset (in samples) and height of the parabola through three equally spaced points"""
    denom = 2 * (2 * y0 - yp1 - ym1)
    if denom == 0:
        return 0.0, y0
    p = (yp1 - ym1) / denom
    return p, y0 - 0.25 * (ym1 - yp1) * p


def _grid_step(energy: np.ndarray) -> float:
    steps = np.diff(energy)
    if steps.size == 0 or np.any(steps <= 0):
        raise ValidationError("spectrum energies must be strictly increasing")
    step = float(np.mean(steps))
    if np.max(np.abs(steps - step)) > 1e-6 * step + 1e-12:
        raise ValidationError("peak extraction needs a uniform energy grid")
    return step


def extract_peaks(sp: Union[Spectrum, Tuple[np.ndarray, np.ndarray]], min_prominence: float = 0.002,
                  window: int = 5, signal: str = "transmission") -> PeakList:
    """Maxima of one spectrum channel; window is the minimum separation in samples"""
    if isinstance(sp, Spectrum):
        energy, values = sp.energy, getattr(sp, signal)
    else:
        energy, values = (np.asarray(a, dtype=float) for a in sp)
    if energy.size < 3:
        return PeakList()
    step = _grid_step(energy)

    indices, _ = find_peaks(values, prominence=min_prominence, distance=max(int(window), 1))
    if indices.size == 0:
        return PeakList()
    widths = peak_widths(values, indices, rel_height=0.5)[0] * step

    peaks: List[Peak] = []
    for i, width in zip(indices, widths):
        offset, height = parabolic_vertex(values[i - 1], values[i], values[i + 1])
        offset = float(np.clip(offset, -0.5, 0.5))
        peaks.append(Peak(energy=float(energy[i] + offset * step), height=float(height), width=float(width)))
    return PeakList(tuple(peaks))


def extract_angle_peaks(spectra: Dict[float, Spectrum], min_prominence: float = 0.002,
                        window: int = 5) -> Dict[float, PeakList]:
    return {angle: extract_peaks(sp, min_prominence, window) for angle, sp in spectra.items()}


def peaks_to_frame(peaks_by_angle: Dict[float, PeakList]) -> pd.DataFrame:
    rows = [(angle, p.energy, p.height, p.width) for angle, peaks in peaks_by_angle.items() for p in peaks]
    return pd.DataFrame(rows, columns=PEAK_COLUMNS)


def peaks_to_dataset(peaks_by_angle: Dict[float, PeakList], e_x_hint: float) -> PeakDataset:
    """
    Nearest peak below e_x_hint -> LP, nearest peak at or above it -> UP.
    Higher-order cavity modes and stray maxima further out are ignored; a side
    without any peak leaves that branch missing.
    """
    thetas, lps, ups = [], [], []
    for angle, peaks in sorted(peaks_by_angle.items()):
        below = [p.energy for p in peaks if p.energy < e_x_hint]
        above = [p.energy for p in peaks if p.energy >= e_x_hint]
        if not below and not above:
            continue
        thetas.append(angle)
        lps.append(max(below) if below else np.nan)
        ups.append(min(above) if above else np.nan)
    logger.info("🔎 Assigned branches at %d of %d angles", len(thetas), len(peaks_by_angle))
    return PeakDataset(theta=np.array(thetas), e_lp=np.array(lps, dtype=float),
                       e_up=np.array(ups, dtype=float), weight=np.ones(len(thetas)))


def empty_cavity_mode(s: Stack, theta: float, energies: np.ndarray,
                      pol: Union[Polarization, str] = Polarization.TE) -> float:
    """Lowest transmission mode of the stack with the film oscillators removed"""
    energy = np.asarray(energies, dtype=float)
    transmission, _, _ = transfer_matrix(s.without_oscillators(), energy, theta, pol)
    peaks = extract_peaks((energy, transmission), min_prominence=0.05 * float(np.max(transmission)), window=1)
    if len(peaks) == 0:
        raise ValidationError(f"no empty-cavity mode inside {energy[0]:.3f}..{energy[-1]:.3f} eV at {theta} deg")
    return peaks.peaks[0].energy
