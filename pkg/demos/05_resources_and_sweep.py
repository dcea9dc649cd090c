# %% [markdown]
# How many pairs does each scheme need for SE(W) <= epsilon, and how does
# the metasurface trade-off look across depths?

# %%

from dualbasis import witness as wt
from dualbasis.config import ExperimentConfig
from dualbasis.harness import SWEEP_HEADER, sweep
from dualbasis.metasurface import PhaseProfile
from dualbasis.polarization import werner_state
from dualbasis.povm import sawtooth_kraus

rho = werner_state(0.9, "PsiMinus")
schemes = [
    wt.Scheme("sequential", "sequential"),
    wt.Scheme("bell-basis", "bell_parity"),
    wt.Scheme("meta 0.5/0.75", "metasurface", kraus=sawtooth_kraus(PhaseProfile(depth_z=0.5, depth_y=0.75))),
    wt.Scheme("meta full depth", "metasurface", kraus=sawtooth_kraus(PhaseProfile(depth_z=1, depth_y=1))),
]
for row in wt.resource_compare(rho, 0.01, schemes, seed=0, replicates=400):
    print(f"{row['scheme']:16s} N = {row['n_required']!s:>8}  ratio {row['ratio_to_best']:.2f}  {row['flag']}")

# %% [markdown]
# Sequential over Bell-basis comes out near 1.36 for this state, not 2:
# a Bell-basis pair yields both parities, but they are correlated, and the
# per-pair variance is 2 + 2p - 4p^2 against 4(1 - p^2) for the split run.

# %%
p = 0.9
print("closed-form ratio:", 4 * (1 - p ** 2) / (2 + 2 * p - 4 * p ** 2))

# %% [markdown]
# Depth sweep. Each row carries the capture-conditioned visibilities and
# eta_z^2 + eta_y^2 as a diagnostic. eta_z also vanishes at beta_y = 1/4
# and 3/4, not only at full circular depth.

# %%
cfg = ExperimentConfig(state="werner", bell="PsiMinus", p=0.9, replicates=40, epsilon=0.02,
                       sweep_depth_z=[0.25, 0.5, 0.75, 1.0],
                       sweep_depth_y=[0.25, 0.5, 0.75, 1.0])
print(SWEEP_HEADER)
for row in sweep(cfg, workers=4):
    print([round(v, 3) if isinstance(v, float) else v for v in row])
