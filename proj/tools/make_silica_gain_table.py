#!/usr/bin/env python3
"""Writes a representative silica Raman gain table (frequency in THz, dimensionless alpha_R).

The delayed response is a sum of damped, Gaussian-broadened vibrational modes of fused
silica; absolute scale comes from a peak gain g_R = 1e-13 m/W at 1 um and n2 = 2.6e-20 m^2/W.
The result is representative input data, not a measurement.
"""
import sys

import numpy as np

C_CM = 2.99792458e10  # cm/s

# center (cm^-1), relative amplitude, Gaussian FWHM (cm^-1), Lorentzian FWHM (cm^-1)
MODES = np.array([
    [56.25, 1.00, 52.10, 17.37], [100.00, 11.40, 110.42, 38.81], [231.25, 36.67, 175.00, 58.33],
    [362.50, 67.67, 162.50, 54.17], [463.00, 74.00, 135.33, 45.11], [497.00, 4.50, 24.50, 8.17],
    [611.50, 6.80, 41.50, 13.83], [691.67, 4.60, 155.00, 51.67], [793.67, 4.20, 59.50, 19.83],
    [835.50, 4.50, 64.30, 21.43], [930.00, 2.70, 150.00, 50.00], [1080.00, 3.10, 91.00, 30.33],
    [1215.00, 3.00, 160.00, 53.33],
])


def main(path):
    dt = 0.5e-15
    t = np.arange(0.0, 4e-12, dt)
    h = np.zeros_like(t)
    for nu, amp, gauss, lorentz in MODES:
        h += amp * np.exp(-np.pi * C_CM * lorentz * t) * np.exp(-(np.pi * C_CM * gauss * t) ** 2 / 4) \
            * np.sin(2 * np.pi * C_CM * nu * t)
    h /= np.trapezoid(h, t)

    nu_thz = np.linspace(0.1, 75.0, 750)
    im_h = np.array([np.trapezoid(h * np.sin(2 * np.pi * f * 1e12 * t), t) for f in nu_thz])

    g_r, wavelength, n2 = 1e-13, 1e-6, 2.6e-20
    alpha_peak = g_r / (2 * np.pi / wavelength * n2)
    raman_fraction = alpha_peak / (2 * im_h.max())
    alpha = 2 * raman_fraction * im_h

    with open(path, "w") as out:
        out.write("# Representative (non-canonical) fused-silica Raman gain curve\n")
        out.write("# generated by tools/make_silica_gain_table.py\n")
        out.write("# frequency_THz  alpha_R\n")
        for f, a in zip(nu_thz, alpha):
            out.write(f"{f:.6f} {a:.8e}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "silica_raman_gain.tsv")
