"""Single-harmonic invisible design: exact transparency below alpha, scattering above.

Run:  python3 demos/invisibility_onset.py
"""

import numpy as np

from tmscatter.invisibility import (born_exactness_check, certify_invisibility, make_design,
                                    make_invisible)

design = make_invisible(alpha=1.0, margin=0.05)
print("k      worst |M - I|   max |f|")
for k in (0.5, 0.9, 1.0, 1.1, 1.3, 1.6, 1.9):
    rep = certify_invisibility(design, k)
    print(f"{k:4.2f}   {rep['worst_deviation']:.3e}       {rep['max_abs_f']:.3e}")

# a lower shift beta in (alpha, 2 alpha) no longer cancels, but first Born is exact
born = make_design(1.0, 1.5, 1.575)
rep = born_exactness_check(born, 0.8, np.deg2rad([-80.0, -78.0, 0.0, 40.0]))
print(f"\nbeta = 1.5: max |f| = {rep['max_abs_f']:.3f}, full vs first Born {rep['max_rel_deviation']:.1e}")
