#!/usr/bin/env python3
"""Regenerate the bundled 1 nm spectral data files under crates/fluor-core/data/.

Sources:
  * CMF: CIE 1931 2-degree standard observer, 5 nm tabulation, interpolated to
    1 nm with a monotone cubic (PCHIP) so the non-negative tails stay
    non-negative.
  * D65: CIE standard 5 nm tabulation (300-780), linear interpolation to 1 nm
    (CIE practice for D illuminants), zero above 780.
  * D60: CIE daylight model S0 + M1*S1 + M2*S2 at T = 6000 * 1.4388/1.4380 K.
    The same model is used to reconstruct D65 as a consistency check against
    the tabulated D65.
  * A: exact CIE formula, 100 * (560/l)^5 * (exp(1.435e7/(2848*560)) - 1) /
    (exp(1.435e7/(2848*l)) - 1).
  * E: flat 100.
  * FL1 / FL2: CIE F-series 5 nm tabulations (380-780), linear to 1 nm.
  * HP5: NOT a CIE tabulation. Stand-in metal-halide style lamp (4200 K
    continuum plus a discharge line set), normalized to 100 at 560 nm. See
    data/sources.md.

The script asserts chromaticity cross-checks before writing anything.
"""

import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "crates", "fluor-core", "data")

# ---------------------------------------------------------------------------
# CIE 1931 2-degree observer, 5 nm steps, 360-780 nm.
CMF_START, CMF_STEP = 360, 5
CMF = [
    # x_bar,   y_bar,    z_bar
    (0.000130, 0.000004, 0.000606),  # 360
    (0.000232, 0.000007, 0.001086),
    (0.000415, 0.000012, 0.001946),
    (0.000742, 0.000022, 0.003486),
    (0.001368, 0.000039, 0.006450),  # 380
    (0.002236, 0.000064, 0.010550),
    (0.004243, 0.000120, 0.020050),
    (0.007650, 0.000217, 0.036210),
    (0.014310, 0.000396, 0.067850),  # 400
    (0.023190, 0.000640, 0.110200),
    (0.043510, 0.001210, 0.207400),
    (0.077630, 0.002180, 0.371300),
    (0.134380, 0.004000, 0.645600),  # 420
    (0.214770, 0.007300, 1.039050),
    (0.283900, 0.011600, 1.385600),
    (0.328500, 0.016840, 1.622960),
    (0.348280, 0.023000, 1.747060),  # 440
    (0.348060, 0.029800, 1.782600),
    (0.336200, 0.038000, 1.772110),
    (0.318700, 0.048000, 1.744100),
    (0.290800, 0.060000, 1.669200),  # 460
    (0.251100, 0.073900, 1.528100),
    (0.195360, 0.090980, 1.287640),
    (0.142100, 0.112600, 1.041900),
    (0.095640, 0.139020, 0.812950),  # 480
    (0.057950, 0.169300, 0.616200),
    (0.032010, 0.208020, 0.465180),
    (0.014700, 0.258600, 0.353300),
    (0.004900, 0.323000, 0.272000),  # 500
    (0.002400, 0.407300, 0.212300),
    (0.009300, 0.503000, 0.158200),
    (0.029100, 0.608200, 0.111700),
    (0.063270, 0.710000, 0.078250),  # 520
    (0.109600, 0.793200, 0.057250),
    (0.165500, 0.862000, 0.042160),
    (0.225750, 0.914850, 0.029840),
    (0.290400, 0.954000, 0.020300),  # 540
    (0.359700, 0.980300, 0.013400),
    (0.433450, 0.994950, 0.008750),
    (0.512050, 1.000000, 0.005750),
    (0.594500, 0.995000, 0.003900),  # 560
    (0.678400, 0.978600, 0.002750),
    (0.762100, 0.952000, 0.002100),
    (0.842500, 0.915400, 0.001800),
    (0.916300, 0.870000, 0.001650),  # 580
    (0.978600, 0.816300, 0.001400),
    (1.026300, 0.757000, 0.001100),
    (1.056700, 0.694900, 0.001000),
    (1.062200, 0.631000, 0.000800),  # 600
    (1.045600, 0.566800, 0.000600),
    (1.002600, 0.503000, 0.000340),
    (0.938400, 0.441200, 0.000240),
    (0.854450, 0.381000, 0.000190),  # 620
    (0.751400, 0.321000, 0.000100),
    (0.642400, 0.265000, 0.000050),
    (0.541900, 0.217000, 0.000030),
    (0.447900, 0.175000, 0.000020),  # 640
    (0.360800, 0.138200, 0.000010),
    (0.283500, 0.107000, 0.000000),
    (0.218700, 0.081600, 0.000000),
    (0.164900, 0.061000, 0.000000),  # 660
    (0.121200, 0.044580, 0.000000),
    (0.087400, 0.032000, 0.000000),
    (0.063600, 0.023200, 0.000000),
    (0.046770, 0.017000, 0.000000),  # 680
    (0.032900, 0.011920, 0.000000),
    (0.022700, 0.008210, 0.000000),
    (0.015840, 0.005723, 0.000000),
    (0.011359, 0.004102, 0.000000),  # 700
    (0.008111, 0.002929, 0.000000),
    (0.005790, 0.002091, 0.000000),
    (0.004109, 0.001484, 0.000000),
    (0.002899, 0.001047, 0.000000),  # 720
    (0.002049, 0.000740, 0.000000),
    (0.001440, 0.000520, 0.000000),
    (0.001000, 0.000361, 0.000000),
    (0.000690, 0.000249, 0.000000),  # 740
    (0.000476, 0.000172, 0.000000),
    (0.000332, 0.000120, 0.000000),
    (0.000235, 0.000085, 0.000000),
    (0.000166, 0.000060, 0.000000),  # 760
    (0.000117, 0.000042, 0.000000),
    (0.000083, 0.000030, 0.000000),
    (0.000059, 0.000021, 0.000000),
    (0.000042, 0.000015, 0.000000),  # 780
]

# CIE D65, 5 nm, 300-780 nm, normalized 100 at 560 nm.
D65_START, D65_STEP = 300, 5
D65 = [
    0.0341, 1.6643, 3.2945, 11.7652, 20.236, 28.6447, 37.0535, 38.5011,
    39.9488, 42.4302, 44.9117, 45.775, 46.6383, 49.3637, 52.0891, 51.0323,
    49.9755, 52.3118, 54.6482, 68.7015, 82.7549, 87.1204, 91.486, 92.4589,
    93.4318, 90.057, 86.6823, 95.7736, 104.865, 110.936, 117.008, 117.41,
    117.812, 116.336, 114.861, 115.392, 115.923, 112.367, 108.811, 109.082,
    109.354, 108.578, 107.802, 106.296, 104.79, 106.239, 107.689, 106.047,
    104.405, 104.225, 104.046, 102.023, 100.0, 98.1671, 96.3342, 96.0611,
    95.788, 92.2368, 88.6856, 89.3459, 90.0062, 89.8026, 89.5991, 88.6489,
    87.6987, 85.4936, 83.2886, 83.4939, 83.6992, 81.863, 80.0268, 80.1207,
    80.2146, 81.2462, 82.2778, 80.281, 78.2842, 74.0027, 69.7213, 70.6652,
    71.6091, 72.979, 74.349, 67.9765, 61.604, 65.7448, 69.8856, 72.4863,
    75.087, 69.3398, 63.5927, 55.0054, 46.4182, 56.6118, 66.8054, 65.0941,
    63.3828,
]

# CIE daylight components S0, S1, S2 at 10 nm, 300-830 nm.
S_START, S_STEP = 300, 10
S0 = [
    0.04, 6.0, 29.6, 55.3, 57.3, 61.8, 61.5, 68.8, 63.4, 65.8,
    94.8, 104.8, 105.9, 96.8, 113.9, 125.6, 125.5, 121.3, 121.3, 113.5,
    113.1, 110.8, 106.5, 108.8, 105.3, 104.4, 100.0, 96.0, 95.1, 89.1,
    90.5, 90.3, 88.4, 84.0, 85.1, 81.9, 82.6, 84.9, 81.3, 71.9,
    74.3, 76.4, 63.3, 71.7, 77.0, 65.2, 47.7, 68.6, 65.0, 66.0,
    61.0, 53.3, 58.9, 61.9,
]
S1 = [
    0.02, 4.5, 22.4, 42.0, 40.6, 41.6, 38.0, 42.4, 38.5, 35.0,
    43.4, 46.3, 43.9, 37.1, 36.7, 35.9, 32.6, 27.9, 24.3, 20.1,
    16.2, 13.2, 8.6, 6.1, 4.2, 1.9, 0.0, -1.6, -3.5, -3.5,
    -5.8, -7.2, -8.6, -9.5, -10.9, -10.7, -12.0, -14.0, -13.6, -12.0,
    -13.3, -12.9, -10.6, -11.6, -12.2, -10.2, -7.8, -11.2, -10.4, -10.6,
    -9.7, -8.3, -9.3, -9.8,
]
S2 = [
    0.0, 2.0, 4.0, 8.5, 7.8, 6.7, 5.3, 6.1, 3.0, 1.2,
    -1.1, -0.5, -0.7, -1.2, -2.6, -2.9, -2.8, -2.6, -2.6, -1.8,
    -1.5, -1.3, -1.2, -1.0, -0.5, -0.3, 0.0, 0.2, 0.5, 2.1,
    3.2, 4.1, 4.7, 5.1, 6.7, 7.3, 8.6, 9.8, 10.2, 8.3,
    9.6, 8.5, 7.0, 7.6, 8.0, 6.7, 5.2, 7.4, 6.8, 7.0,
    6.4, 5.5, 6.1, 6.5,
]

# CIE FL1 / FL2, 5 nm, 380-780 nm.
FL_START, FL_STEP = 380, 5
FL1 = [
    1.87, 2.36, 2.94, 3.47, 5.17, 19.49, 6.13, 6.24, 7.01, 7.79,
    8.56, 43.67, 16.94, 10.72, 11.35, 11.89, 12.37, 12.75, 13.00, 13.15,
    13.23, 13.17, 13.13, 12.85, 12.52, 12.20, 11.83, 11.50, 11.22, 11.05,
    11.03, 11.18, 11.53, 27.74, 17.05, 13.55, 14.33, 15.01, 15.52, 18.29,
    19.55, 15.48, 14.91, 14.15, 13.22, 12.19, 11.12, 10.03, 8.95, 7.96,
    7.02, 6.20, 5.42, 4.73, 4.15, 3.64, 3.20, 2.81, 2.47, 2.18,
    1.93, 1.72, 1.67, 1.43, 1.29, 1.19, 1.08, 0.96, 0.88, 0.81,
    0.77, 0.75, 0.73, 0.68, 0.69, 0.64, 0.68, 0.69, 0.61, 0.52,
    0.43,
]
FL2 = [
    1.18, 1.48, 1.84, 2.15, 3.44, 15.69, 3.85, 3.74, 4.19, 4.62,
    5.06, 34.98, 11.81, 6.27, 6.63, 6.93, 7.19, 7.40, 7.54, 7.62,
    7.65, 7.62, 7.62, 7.45, 7.28, 7.15, 7.05, 7.04, 7.16, 7.47,
    8.04, 8.88, 10.01, 24.88, 16.64, 14.59, 16.16, 17.56, 18.62, 21.47,
    22.79, 19.29, 18.66, 17.73, 16.54, 15.21, 13.80, 12.36, 10.95, 9.65,
    8.40, 7.32, 6.31, 5.43, 4.68, 4.02, 3.45, 2.96, 2.55, 2.19,
    1.89, 1.64, 1.53, 1.27, 1.10, 0.99, 0.88, 0.76, 0.68, 0.61,
    0.56, 0.54, 0.51, 0.47, 0.47, 0.43, 0.46, 0.47, 0.40, 0.33,
    0.27,
]

GRID = list(range(300, 801))  # canonical 1 nm grid


def pchip(xs, ys, x):
    """Monotone cubic (Fritsch-Carlson) interpolation; clamps outside."""
    n = len(xs)
    if x <= xs[0]:
        return ys[0]
    if x >= xs[-1]:
        return ys[-1]
    h = [xs[i + 1] - xs[i] for i in range(n - 1)]
    delta = [(ys[i + 1] - ys[i]) / h[i] for i in range(n - 1)]
    d = [0.0] * n
    d[0] = delta[0]
    d[-1] = delta[-1]
    for i in range(1, n - 1):
        if delta[i - 1] * delta[i] <= 0.0:
            d[i] = 0.0
        else:
            w1 = 2 * h[i] + h[i - 1]
            w2 = h[i] + 2 * h[i - 1]
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i])
    # locate interval
    lo = 0
    for i in range(n - 1):
        if xs[i] <= x <= xs[i + 1]:
            lo = i
            break
    t = (x - xs[lo]) / h[lo]
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    return (h00 * ys[lo] + h10 * h[lo] * d[lo]
            + h01 * ys[lo + 1] + h11 * h[lo] * d[lo + 1])


def linear(xs, ys, x):
    if x <= xs[0] or x >= xs[-1]:
        # outside the tabulated support -> zero extension
        if x == xs[0]:
            return ys[0]
        if x == xs[-1]:
            return ys[-1]
        return 0.0
    for i in range(len(xs) - 1):
        if xs[i] <= x <= xs[i + 1]:
            t = (x - xs[i]) / (xs[i + 1] - xs[i])
            return ys[i] * (1 - t) + ys[i + 1] * t
    return 0.0


def cmf_1nm():
    xs = [CMF_START + CMF_STEP * i for i in range(len(CMF))]
    rows = []
    for lam in range(CMF_START, 781):
        vals = []
        for c in range(3):
            ys = [row[c] for row in CMF]
            v = pchip(xs, ys, lam)
            vals.append(max(v, 0.0))
        rows.append((lam, vals))
    return rows


def xy_chromaticity(spd, cmf_rows):
    cmf_map = {lam: vals for lam, vals in cmf_rows}
    X = Y = Z = 0.0
    for lam, v in spd:
        c = cmf_map.get(lam)
        if c is None:
            continue
        X += v * c[0]
        Y += v * c[1]
        Z += v * c[2]
    s = X + Y + Z
    return X / s, Y / s


def daylight(t_kelvin):
    if t_kelvin <= 7000:
        xd = (-4.6070e9 / t_kelvin**3 + 2.9678e6 / t_kelvin**2
              + 0.09911e3 / t_kelvin + 0.244063)
    else:
        xd = (-2.0064e9 / t_kelvin**3 + 1.9018e6 / t_kelvin**2
              + 0.24748e3 / t_kelvin + 0.237040)
    yd = -3.000 * xd * xd + 2.870 * xd - 0.275
    m = 0.0241 + 0.2562 * xd - 0.7341 * yd
    m1 = (-1.3515 - 1.7703 * xd + 5.9114 * yd) / m
    m2 = (0.0300 - 31.4424 * xd + 30.0717 * yd) / m
    xs = [S_START + S_STEP * i for i in range(len(S0))]
    spd = []
    for lam in GRID:
        s0 = linear(xs, S0, lam)
        s1 = linear(xs, S1, lam)
        s2 = linear(xs, S2, lam)
        spd.append((lam, max(s0 + m1 * s1 + m2 * s2, 0.0)))
    # renormalize to 100 at 560
    ref = dict(spd)[560]
    return [(lam, v * 100.0 / ref) for lam, v in spd], (xd, yd)


def illuminant_a():
    def sa(lam):
        num = math.exp(1.435e7 / (2848.0 * 560.0)) - 1.0
        den = math.exp(1.435e7 / (2848.0 * lam)) - 1.0
        return 100.0 * (560.0 / lam) ** 5 * num / den
    return [(lam, sa(lam)) for lam in GRID]


def from_table(start, step, table):
    xs = [start + step * i for i in range(len(table))]
    return [(lam, max(linear(xs, table, lam), 0.0)) for lam in GRID]


def hp5_standin():
    """Metal-halide style stand-in: 4200 K continuum plus a discharge line set."""
    def planck(lam_nm, t):
        lam = lam_nm * 1e-9
        c1, c2 = 3.741771e-16, 1.4388e-2
        return c1 / (lam**5 * (math.exp(c2 / (lam * t)) - 1.0))

    lines = [  # (center nm, sigma nm, relative amplitude)
        (404.7, 1.8, 30.0), (435.8, 1.8, 48.0), (461.9, 2.5, 38.0),
        (480.0, 3.0, 28.0), (546.1, 2.0, 58.0), (589.3, 3.0, 80.0),
        (610.0, 4.0, 42.0), (660.0, 5.0, 22.0),
    ]
    base560 = planck(560.0, 4200.0)
    spd = []
    for lam in GRID:
        v = 62.0 * planck(float(lam), 4200.0) / base560
        for mu, sg, amp in lines:
            v += amp * math.exp(-((lam - mu) ** 2) / (2.0 * sg * sg))
        spd.append((lam, v))
    ref = dict(spd)[560]
    return [(lam, v * 100.0 / ref) for lam, v in spd]


def write_spectrum(path, spd, header):
    with open(path, "w") as f:
        f.write("# %s\n" % header)
        f.write("wavelength_nm,value\n")
        for lam, v in spd:
            f.write("%d,%.6f\n" % (lam, v))


def write_cmf(path, rows):
    with open(path, "w") as f:
        f.write("# CIE 1931 2-degree standard observer, 1 nm "
                "(monotone-cubic interpolation of the 5 nm tabulation)\n")
        f.write("wavelength,x,y,z\n")
        for lam, vals in rows:
            f.write("%d,%.8f,%.8f,%.8f\n" % (lam, vals[0], vals[1], vals[2]))


def main():
    os.makedirs(DATA, exist_ok=True)
    cmf_rows = cmf_1nm()

    sums = [sum(vals[c] for _, vals in cmf_rows) for c in range(3)]
    print("CMF integrals (1nm sums):", ["%.3f" % s for s in sums])
    for s in sums:
        assert abs(s - 106.86) < 0.6, "CMF integral off: %f" % s

    e_spd = [(lam, 100.0) for lam in GRID]
    x, y = xy_chromaticity(e_spd, cmf_rows)
    print("E  chromaticity: %.4f %.4f" % (x, y))
    assert abs(x - 1 / 3) < 2e-3 and abs(y - 1 / 3) < 2e-3

    d65_tab = from_table(D65_START, D65_STEP, D65)
    x, y = xy_chromaticity(d65_tab, cmf_rows)
    print("D65 chromaticity: %.4f %.4f" % (x, y))
    assert abs(x - 0.3127) < 5e-3 and abs(y - 0.3290) < 5e-3

    # model cross-check on the daylight components
    d65_model, (xd, yd) = daylight(6500.0 * 1.4388 / 1.4380)
    tab = dict(d65_tab)
    mod = dict(d65_model)
    devs = [abs(mod[l] - tab[l]) / tab[l] for l in range(380, 731) if tab[l] > 1]
    print("D65 model vs table, max rel dev on 380-730: %.4f" % max(devs))
    assert max(devs) < 0.01, "daylight components inconsistent with D65 table"

    d60, (xd, yd) = daylight(6000.0 * 1.4388 / 1.4380)
    x, y = xy_chromaticity(d60, cmf_rows)
    print("D60 chromaticity: %.4f %.4f (model xd=%.4f yd=%.4f)" % (x, y, xd, yd))
    assert abs(x - 0.3217) < 5e-3 and abs(y - 0.3378) < 5e-3

    a = illuminant_a()
    x, y = xy_chromaticity(a, cmf_rows)
    print("A   chromaticity: %.4f %.4f" % (x, y))
    assert abs(x - 0.4476) < 3e-3 and abs(y - 0.4074) < 3e-3

    fl1 = from_table(FL_START, FL_STEP, FL1)
    x, y = xy_chromaticity(fl1, cmf_rows)
    print("FL1 chromaticity: %.4f %.4f" % (x, y))
    assert abs(x - 0.3131) < 8e-3 and abs(y - 0.3371) < 8e-3

    fl2 = from_table(FL_START, FL_STEP, FL2)
    x, y = xy_chromaticity(fl2, cmf_rows)
    print("FL2 chromaticity: %.4f %.4f" % (x, y))
    assert abs(x - 0.3721) < 8e-3 and abs(y - 0.3751) < 8e-3

    hp5 = hp5_standin()
    x, y = xy_chromaticity(hp5, cmf_rows)
    print("HP5 (stand-in) chromaticity: %.4f %.4f" % (x, y))
    assert 0.30 < x < 0.45 and 0.30 < y < 0.45

    write_cmf(os.path.join(DATA, "cmf_xyz_2deg_1nm.csv"), cmf_rows)
    write_spectrum(os.path.join(DATA, "illum_a.csv"), a,
                   "CIE illuminant A (Planckian formula, 100 at 560 nm)")
    write_spectrum(os.path.join(DATA, "illum_e.csv"), e_spd,
                   "Equal-energy illuminant E")
    write_spectrum(os.path.join(DATA, "illum_d65.csv"), d65_tab,
                   "CIE D65 (5 nm tabulation, linear to 1 nm, zero above 780)")
    write_spectrum(os.path.join(DATA, "illum_d60.csv"), d60,
                   "CIE daylight model at ~6003 K, 100 at 560 nm")
    write_spectrum(os.path.join(DATA, "illum_fl1.csv"), fl1,
                   "CIE FL1 (5 nm tabulation, linear to 1 nm)")
    write_spectrum(os.path.join(DATA, "illum_fl2.csv"), fl2,
                   "CIE FL2 (5 nm tabulation, linear to 1 nm)")
    write_spectrum(os.path.join(DATA, "illum_hp5.csv"), hp5,
                   "HP5 stand-in (metal-halide style model, see sources.md)")
    print("wrote tables to", os.path.normpath(DATA))


if __name__ == "__main__":
    main()
