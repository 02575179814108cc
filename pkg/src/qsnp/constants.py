"""Physical constants in Gaussian CGS units."""

HBAR = 1.054571817e-27          # erg s
C_LIGHT = 2.99792458e10         # cm / s
ELECTRON_MASS = 9.1093837015e-28  # g
ELECTRON_CHARGE = 4.80320471e-10  # statC

# SI -> CGS conversion factors used by the JSON loader
SI_TO_CGS = {
    "length": 1.0e2,                      # m -> cm
    "area": 1.0e4,                        # m^2 -> cm^2
    "density": 1.0e-6,                    # m^-3 -> cm^-3
    "dipole": 2.99792458e9 * 1.0e2,       # C m -> statC cm
}
