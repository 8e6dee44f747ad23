# %% [markdown]
# # The Hopf flow on S^3
# Forms are expanded in Wigner matrix coefficients up to spin J_max.  Every
# operator acts inside a single (j, m) block, so identities hold to round-off.

# %%
import numpy as np

from folcoh import forms
from folcoh.cohomology import CohomologyEngine

S = forms.build_su2(2)
print("modes:", S.nmodes, " dims:", [S.dim(k) for k in range(4)])

# %%
F = forms.Foliated(S)
pkg = F.package
print("sup |kappa| =", np.max(np.abs(pkg.kappa)), "(the flow is taut)")
print("sup |phi0|  =", np.max(np.abs(pkg.phi0)), "(the normal bundle is not involutive)")

# %%
E = CohomologyEngine(S)
b = E.betti()
for key in ("h", "h_b", "h_a_rank", "h_a_harmonic"):
    print(f"{key:13s}", b[key])

# %%
# Spectrum of the antibasic Laplacian in degree 1: one zero mode, chi itself.
print(np.round(E.spectrum(1, 6), 6))

# %%
# Berger metrics change the spectrum but not the Betti numbers.
Eb = CohomologyEngine(forms.build_su2(2, (1.0, 1.0, 0.5)))
print("Berger h_a:", Eb.betti_antibasic(), " spectrum:", np.round(Eb.spectrum(1, 4), 6))
