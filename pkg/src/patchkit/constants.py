import math

C0 = 299_792_458.0  # m/s, exact
MU0 = 1.25663706212e-6  # H/m
EPS0 = 1.0 / (MU0 * C0**2)  # F/m
ETA0 = MU0 * C0  # ohm

MM = 1e-3
GHZ = 1e9

TWO_PI = 2.0 * math.pi
