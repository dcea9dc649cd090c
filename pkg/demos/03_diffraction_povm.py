# %% [markdown]
# Diffraction orders as Kraus operators.
#
# Order (m, n) of the periodic field is K_mn, the (m, n) Fourier
# coefficient of J. Orders (+-1, +-1) are the four signal ports; the
# others are loss.

# %%
import numpy as np

from dualbasis import povm
from dualbasis.metasurface import PhaseProfile, sample_field
from dualbasis.polarization import projector

full = povm.kraus_decompose(sample_field(PhaseProfile(depth_z=1, depth_y=1), 64, 64))
print("completeness residual at full depth:", povm.completeness_check(full))
print("K(+1,+1) == P_H P_R:", np.allclose(full[1, 1], projector("H") @ projector("R")))

# %% [markdown]
# At full depth every port projects onto R or L *after* the H/V
# projection, so the circular label is sharp and the linear one carries
# nothing: eta_z = 0, eta_y = 1.

# %%
ports = povm.PortAssignment()
for lab in "HVRL":
    p = povm.port_probabilities(full, ports, lab)
    print(lab, np.round(p["probs"], 4), "loss", round(p["loss"], 6))
print(povm.calibrate_visibilities(full, ports))

# %% [markdown]
# Partial depths trade the two visibilities against each other and lose
# light into higher orders. The closed form c_m(beta) = e^{i pi (beta - m)}
# sinc(beta - m) avoids grid error.

# %%
print(" bz   by   eta_z  eta_y  capture")
for bz in (0.25, 0.5, 0.75, 1.0):
    for by in (0.25, 0.5, 0.75):
        v = povm.calibrate_visibilities(povm.sawtooth_kraus(PhaseProfile(depth_z=bz, depth_y=by)), ports)
        print(f"{bz:4.2f} {by:4.2f}  {v.eta_z:.3f}  {v.eta_y:.3f}  {v.capture:.3f}")

# %% [markdown]
# Truncating the order sum leaves a Parseval tail, so completeness at
# order bound 8 is only good to about 1e-2 unless the depths are integers.

# %%
k = povm.kraus_decompose(sample_field(PhaseProfile(depth_z=0.5, depth_y=0.5), 64, 64))
for b in (2, 4, 8):
    print(b, povm.completeness_check(k.truncate(b, b)))

# %% [markdown]
# Same-axis variant: both ramps along x. Orders then mix H/V with R/L and
# no port labelling reads both bases cleanly.

# %%
rep = povm.same_axis_mixing_demo(1.0, 1.0)
print({m: kind for m, kind in rep["order_kinds"].items() if kind != "negligible"})
print("clean dual-basis assignment exists:", rep["clean_assignment_exists"])
