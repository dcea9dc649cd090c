# %% [markdown]
# Polarization conventions, Bell states and the PPT test.
#
# |H> = (1, 0), |R> = (1, i)/sqrt(2). sigma_z sorts H/V, sigma_y sorts R/L.

# %%
import numpy as np

from dualbasis import polarization as pol

Z, Y = pol.pauli("Z"), pol.pauli("Y")
print("sigma_y |R> == |R>:", np.allclose(Y @ pol.jones_vector("R"), pol.jones_vector("R")))

# %% [markdown]
# Single-photon Z and Y do not commute, but the two-photon parities do.
# That is what makes a joint parity readout possible at all.

# %%
print(pol.commutator_checks())

# %%
for kind in pol.BELL_KINDS:
    rho = pol.bell_state(kind)
    print(f"{kind:9s} <ZZ> = {pol.correlator(rho, Z, Z):+.0f}  <YY> = {pol.correlator(rho, Y, Y):+.0f}")

# %% [markdown]
# Werner states mix a Bell state with white noise. Partial transpose
# turns negative at p = 1/3.

# %%
for p in (0.2, 0.33, 0.34, 0.6, 1.0):
    res = pol.ppt_is_entangled(pol.werner_state(p, "PsiMinus"))
    print(f"p = {p:.2f}  min eig(rho^TB) = {res['min_eigenvalue']:+.4f}  entangled = {res['entangled']}")
