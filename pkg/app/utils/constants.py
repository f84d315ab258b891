"""
Physical constants in the units used across the app (eV, nm, cm, m0)
"""

from scipy import constants as sc

# hbar*c in eV*nm, eV*um and eV*cm
HBARC_EV_NM = sc.hbar * sc.c / sc.e * 1e9
HBARC_EV_UM = HBARC_EV_NM * 1e-3
HBARC_EV_CM = HBARC_EV_NM * 1e-7

# h*c in eV*nm (wavelength <-> photon energy)
HC_EV_NM = sc.h * sc.c / sc.e * 1e9

# Electron rest energy m0*c^2 in eV
ELECTRON_REST_ENERGY_EV = sc.physical_constants["electron mass energy equivalent in MeV"][0] * 1e6

AVOGADRO = sc.N_A
