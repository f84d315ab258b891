"""
Ultrastrong-coupling polariton core
Branch energies of the cavity-exciton Hamiltonian in two conventions:

- Quadratic: (E_cav^2 - E^2)(E_x^2 - E^2) = rabi^2 * E_cav^2
- FullHopfield: 4x4 Bogoliubov matrix with resonant, anti-resonant and
  diamagnetic terms, coupling g = rabi/2 and diamagnetic D = g^2/E_x

All energies in eV. Every function is pure.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

import numpy as np
from scipy.optimize import brentq

from app.utils.errors import DispersionError, HopfieldError, ValidationError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Below this LP/UP separation the branches cannot be labelled
DEGENERACY_TOL_EV = 1e-12
NORM_TOL = 1e-9


class ModelKind(str, Enum):
    QUADRATIC = "quadratic"
    FULL_HOPFIELD = "hopfield"

    @classmethod
    def parse(cls, value: Union[str, "ModelKind"]) -> "ModelKind":
        if isinstance(value, ModelKind):
            return value
        key = str(value).strip().lower()
        aliases = {"quadratic": cls.QUADRATIC, "hopfield": cls.FULL_HOPFIELD,
                   "fullhopfield": cls.FULL_HOPFIELD, "full_hopfield": cls.FULL_HOPFIELD}
        if key not in aliases:
            raise ValidationError(f"unknown model '{value}' (expected quadratic or hopfield)")
        return aliases[key]


class Branch(str, Enum):
    LP = "lp"
    UP = "up"


@dataclass(frozen=True)
class CouplingParams:
    """Exciton energy and Rabi splitting, both in eV"""
    e_x: float
    rabi: float

    def __post_init__(self):
        if not np.isfinite(self.e_x) or self.e_x <= 0:
            raise ValidationError(f"e_x must be > 0 eV, got {self.e_x}")
        if not np.isfinite(self.rabi) or self.rabi < 0:
            raise ValidationError(f"rabi must be >= 0 eV, got {self.rabi}")
        if self.rabi >= 2 * self.e_x:
            raise ValidationError(
                f"rabi={self.rabi} eV reaches 2*e_x={2 * self.e_x} eV (normalized coupling >= 1)")

    @property
    def g(self) -> float:
        return self.rabi / 2

    @property
    def diamagnetic(self) -> float:
        return self.g ** 2 / self.e_x


@dataclass(frozen=True)
class BranchEnergies:
    """Lower and upper polariton energies (scalars or equal-shape arrays)"""
    lp: ArrayLike
    up: ArrayLike

    def __post_init__(self):
        lp = np.asarray(self.lp, dtype=float)
        up = np.asarray(self.up, dtype=float)
        if not (np.all(np.isfinite(lp)) and np.all(np.isfinite(up))):
            raise DispersionError("branch energies are not finite")
        if np.any(lp <= 0) or np.any(up < lp):
            raise DispersionError(f"branch energies violate 0 < lp <= up (lp={self.lp}, up={self.up})")

    @property
    def splitting(self) -> ArrayLike:
        return self.up - self.lp


@dataclass(frozen=True)
class BranchVector:
    """Bogoliubov amplitudes of one branch: photon x, exciton z, and their anti-resonant y, w"""
    x: complex
    z: complex
    y: complex
    w: complex

    @property
    def bogoliubov_norm(self) -> float:
        return abs(self.x) ** 2 + abs(self.z) ** 2 - abs(self.y) ** 2 - abs(self.w) ** 2

    @property
    def total_weight(self) -> float:
        return abs(self.x) ** 2 + abs(self.z) ** 2 + abs(self.y) ** 2 + abs(self.w) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.z, self.y, self.w], dtype=complex)


@dataclass(frozen=True)
class HopfieldCoefficients:
    lp: BranchVector
    up: BranchVector

    def __post_init__(self):
        for name, vec in (("lp", self.lp), ("up", self.up)):
            if abs(vec.bogoliubov_norm - 1.0) > NORM_TOL:
                raise HopfieldError(f"{name} vector has Bogoliubov norm {vec.bogoliubov_norm}, expected 1")

    def branch(self, branch: Union[Branch, str]) -> BranchVector:
        return self.lp if Branch(branch) is Branch.LP else self.up


@dataclass(frozen=True)
class BranchFractions:
    photon_fraction: float
    exciton_fraction: float

    def __post_init__(self):
        for name, value in (("photon_fraction", self.photon_fraction),
                            ("exciton_fraction", self.exciton_fraction)):
            if not -NORM_TOL <= value <= 1 + NORM_TOL:
                raise ValidationError(f"{name} must lie in [0, 1], got {value}")
        if abs(self.photon_fraction + self.exciton_fraction - 1.0) > NORM_TOL:
            raise ValidationError("photon and exciton fractions must sum to 1")


@dataclass(frozen=True)
class GroundStateContent:
    """Mean virtual photon and exciton numbers of the squeezed vacuum"""
    n_photon: float
    n_exciton: float

    def __post_init__(self):
        if self.n_photon < 0 or self.n_exciton < 0:
            raise ValidationError("ground-state occupations must be >= 0")


def normalized_coupling(p: CouplingParams) -> float:
    """eta = rabi / (2 e_x)"""
    return p.rabi / (2 * p.e_x)


def relative_splitting(p: CouplingParams) -> float:
    return p.rabi / p.e_x


def coupling_regime(p: CouplingParams) -> str:
    """USC from eta >= 0.1, otherwise SC (CouplingParams keeps eta below 1)"""
    eta = normalized_coupling(p)
    if eta >= 0.1:
        return "USC"
    return "SC"


def _check_cavity_energy(e_cav: ArrayLike) -> np.ndarray:
    e = np.asarray(e_cav, dtype=float)
    if not np.all(np.isfinite(e)) or np.any(e <= 0):
        raise ValidationError(f"cavity energy must be > 0 eV, got {e_cav}")
    return e


def _positive_roots(total: np.ndarray, product: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Roots s1 <= s2 of s^2 - total*s + product = 0, both required > 0"""
    disc = total ** 2 - 4 * product
    # Exact zero at uncoupled resonance; allow rounding noise only
    if np.any(disc < -1e-12 * total ** 2):
        raise DispersionError("negative discriminant in branch-energy quadratic")
    root = np.sqrt(np.clip(disc, 0.0, None))
    s_up = (total + root) / 2
    # Vieta form keeps the small root accurate when product << total^2
    s_lp = product / s_up
    if np.any(s_lp <= 0):
        raise DispersionError("non-positive squared lower-polariton energy (coupling too large)")
    return s_lp, s_up


def _pack(lp: np.ndarray, up: np.ndarray, scalar: bool) -> BranchEnergies:
    if scalar:
        return BranchEnergies(lp=float(lp), up=float(up))
    return BranchEnergies(lp=lp, up=up)


def solve_quadratic_dispersion(e_cav: ArrayLike, p: CouplingParams) -> BranchEnergies:
    """Roots of E^4 - E^2(E_cav^2 + E_x^2) + E_cav^2 E_x^2 - rabi^2 E_cav^2 = 0"""
    scalar = np.ndim(e_cav) == 0
    ec2 = _check_cavity_energy(e_cav) ** 2
    ex2 = p.e_x ** 2
    s_lp, s_up = _positive_roots(ec2 + ex2, ec2 * ex2 - p.rabi ** 2 * ec2)
    return _pack(np.sqrt(s_lp), np.sqrt(s_up), scalar)


def solve_hopfield_dispersion(e_cav: ArrayLike, p: CouplingParams) -> BranchEnergies:
    """
    Closed-form positive eigenvalues of build_hopfield_matrix.
    Characteristic polynomial: (E^2 - w_c^2 - 4 D w_c)(E^2 - w_x^2) = 4 g^2 w_c w_x
    """
    scalar = np.ndim(e_cav) == 0
    ec = _check_cavity_energy(e_cav)
    ex = p.e_x
    shifted = ec ** 2 + 4 * p.diamagnetic * ec
    total = shifted + ex ** 2
    product = shifted * ex ** 2 - 4 * p.g ** 2 * ec * ex
    s_lp, s_up = _positive_roots(total, product)
    return _pack(np.sqrt(s_lp), np.sqrt(s_up), scalar)


def branch_energies(e_cav: ArrayLike, p: CouplingParams, kind: Union[ModelKind, str]) -> BranchEnergies:
    if ModelKind.parse(kind) is ModelKind.QUADRATIC:
        return solve_quadratic_dispersion(e_cav, p)
    return solve_hopfield_dispersion(e_cav, p)


def resonance_energies(p: CouplingParams) -> BranchEnergies:
    """E_UP/LP = sqrt(E_x^2 + (rabi/2)^2) +- rabi/2"""
    center = np.hypot(p.e_x, p.rabi / 2)
    return BranchEnergies(lp=float(center - p.rabi / 2), up=float(center + p.rabi / 2))


def polariton_gap_formula(p: CouplingParams) -> float:
    """rabi^2 / (2 e_x)"""
    return p.rabi ** 2 / (2 * p.e_x)


def lp_asymptote(p: CouplingParams) -> float:
    """E_cav -> infinity limit of the quadratic lower branch"""
    if p.rabi >= p.e_x:
        raise DispersionError(f"LP asymptote undefined for rabi={p.rabi} >= e_x={p.e_x}")
    return float(np.sqrt(p.e_x ** 2 - p.rabi ** 2))


def polariton_gap_asymptotic(p: CouplingParams) -> float:
    """Gap between the UP asymptote (e_x) and the LP asymptote sqrt(e_x^2 - rabi^2)"""
    return p.e_x - lp_asymptote(p)


def build_hopfield_matrix(e_cav: float, p: CouplingParams) -> np.ndarray:
    """
    Bogoliubov dynamical matrix [[A, B], [-B*, -A*]] in the basis (a, b, a+, b+)

    H = w_c a+a + w_x b+b + g (a + a+)(b + b+) + D (a + a+)^2
    """
    w_c = float(_check_cavity_energy(e_cav))
    g = p.g
    d = p.diamagnetic
    a = np.array([[w_c + 2 * d, g],
                  [g, p.e_x]], dtype=complex)
    b = np.array([[2 * d, g],
                  [g, 0.0]], dtype=complex)
    return np.block([[a, b],
                     [-b.conj(), -a.conj()]])


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # x real and >= 0; z when the photon amplitude vanishes
    pivot = v[0] if abs(v[0]) > 1e-14 else v[1]
    if abs(pivot) == 0:
        return v
    return v * (abs(pivot) / pivot)


def diagonalize_hopfield(m: np.ndarray) -> Tuple[BranchEnergies, HopfieldCoefficients]:
    """Positive-frequency eigenpairs, normalised to Bogoliubov norm +1"""
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise ValidationError(f"expected a 4x4 Hopfield matrix, got shape {m.shape}")
    try:
        values, vectors = np.linalg.eig(m)
    except np.linalg.LinAlgError as e:
        raise HopfieldError(f"eigensolver did not converge: {e}") from e

    if np.max(np.abs(values.imag)) > 1e-9 * max(1.0, np.max(np.abs(values.real))):
        raise HopfieldError(f"complex eigenvalues {values}; Hamiltonian is unstable")

    energies = values.real
    order = np.argsort(energies)
    positive = [i for i in order if energies[i] > 0]
    if len(positive) != 2:
        raise HopfieldError(f"expected two positive eigenvalues, got {energies}")
    i_lp, i_up = positive
    if energies[i_up] - energies[i_lp] < DEGENERACY_TOL_EV:
        raise HopfieldError("LP and UP are degenerate; zero coupling cannot be labelled")

    branch_vectors = []
    for idx in (i_lp, i_up):
        v = vectors[:, idx]
        norm = abs(v[0]) ** 2 + abs(v[1]) ** 2 - abs(v[2]) ** 2 - abs(v[3]) ** 2
        if norm <= 0:
            raise HopfieldError(f"positive eigenvalue {energies[idx]} has non-positive Bogoliubov norm")
        v = _fix_phase(v / np.sqrt(norm))
        branch_vectors.append(BranchVector(x=complex(v[0]), z=complex(v[1]),
                                           y=complex(v[2]), w=complex(v[3])))

    energies_out = BranchEnergies(lp=float(energies[i_lp]), up=float(energies[i_up]))
    return energies_out, HopfieldCoefficients(lp=branch_vectors[0], up=branch_vectors[1])


def hopfield_state(e_cav: float, p: CouplingParams) -> Tuple[BranchEnergies, HopfieldCoefficients]:
    return diagonalize_hopfield(build_hopfield_matrix(e_cav, p))


def branch_fractions(c: Union[HopfieldCoefficients, BranchVector], branch: Union[Branch, str] = Branch.LP,
                     normalization: str = "probability") -> BranchFractions:
    """
    Photon/exciton content of a branch.
    probability: exciton = (|z|^2 + |w|^2) / (|x|^2 + |z|^2 + |y|^2 + |w|^2)
    bogoliubov: exciton = |z|^2 / (|x|^2 + |z|^2), the resonant amplitudes only.
    This is not the symplectic |z|^2 - |w|^2 (which sums with |x|^2 - |y|^2 to 1);
    dropping the anti-resonant parts keeps both fractions in [0, 1].
    """
    vec = c.branch(branch) if isinstance(c, HopfieldCoefficients) else c
    if normalization == "probability":
        exciton = (abs(vec.z) ** 2 + abs(vec.w) ** 2) / vec.total_weight
    elif normalization == "bogoliubov":
        exciton = abs(vec.z) ** 2 / (abs(vec.x) ** 2 + abs(vec.z) ** 2)
    else:
        raise ValidationError(f"unknown fraction normalization '{normalization}'")
    exciton = float(min(max(exciton, 0.0), 1.0))
    return BranchFractions(photon_fraction=1.0 - exciton, exciton_fraction=exciton)


def ground_state_content(c_lp: BranchVector, c_up: BranchVector) -> GroundStateContent:
    """Virtual occupations: anti-resonant weights summed over both branches"""
    return GroundStateContent(n_photon=float(abs(c_lp.y) ** 2 + abs(c_up.y) ** 2),
                              n_exciton=float(abs(c_lp.w) ** 2 + abs(c_up.w) ** 2))


def cavity_energy_for_lp(target_lp: float, p: CouplingParams,
                         kind: Union[ModelKind, str] = ModelKind.FULL_HOPFIELD) -> float:
    """Cavity energy at which the lower branch sits at target_lp"""
    kind = ModelKind.parse(kind)
    if target_lp <= 0:
        raise ValidationError(f"target LP energy must be > 0, got {target_lp}")

    def mismatch(e_cav: float) -> float:
        return branch_energies(e_cav, p, kind).lp - target_lp

    lo, hi = 1e-4 * p.e_x, 1e3 * p.e_x
    try:
        f_lo, f_hi = mismatch(lo), mismatch(hi)
    except DispersionError as e:
        raise DispersionError(f"cannot bracket LP target {target_lp} eV: {e}") from e
    if f_lo * f_hi > 0:
        raise DispersionError(
            f"LP target {target_lp} eV is not reachable (LP spans {f_lo + target_lp:.4f}..{f_hi + target_lp:.4f} eV)")
    e_cav = brentq(mismatch, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)
    logger.debug("Solved E_cav=%.6f eV for LP=%.6f eV (%s)", e_cav, target_lp, kind.value)
    return float(e_cav)
