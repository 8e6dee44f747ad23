# %% [markdown]
# # Foliation data, basic forms and projectors
# For a flow with unit field xi the package holds chi, kappa = i_xi d chi and
# the remainder phi0 = d chi + kappa ^ chi.

# %%
import numpy as np

from folcoh import catalog, forms

F = forms.Foliated(catalog.CASES["carriere"].build({"n": 6, "nt": 8}))
lam = catalog.LAMBDA
print("kappa_t on the grid:", np.unique(np.round(F.package.kappa.reshape(-1, 3)[:, 2], 12)))
print("(1 - lambda^-h)/h  :", (1 - lam ** (-1 / 8)) * 8, "  log(lambda):", np.log(lam))
print("sup |phi0| =", np.max(np.abs(F.package.phi0)))

# %%
# Basic subspaces come from thresholded SVD of the constraint i_X w = i_X dw = 0,
# audited by the gap between kept and dropped singular values.
print("basic dims:", [F.structure.dim(k) for k in range(4)])
print("gap ratios:", {k: f"{g:.1e}" for k, g in F.structure.gap.items()})

# %%
# On the flat torus with a bump flow the projection of sin(pi x) is its mean
# 2/pi on the dense-leaf band and sin(pi x) itself on the closed-leaf band.
G = forms.Foliated(catalog.CASES["flat-torus-flow"].build({"nx": 64, "ny": 32}))
f = forms.sample(G.C, 0, lambda x, y: np.sin(np.pi * x))
pb = G.project_basic(f).coeffs
x = G.C.coordinates()["x"]
for xv in (0.25, 0.5, 0.75, 1.25, 1.5):
    print(f"x={xv:5.2f}  P_b f = {pb[np.isclose(x, xv)][0]: .5f}   sin(pi x) = {np.sin(np.pi * xv): .5f}")

# %%
# Named operators compose the projectors with d and delta.
Da = forms.named_operator(G.calc, "D_a", 1)
print(Da.name, Da.k_dom, "->", Da.k_cod)
