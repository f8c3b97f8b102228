"""Finite constellation ladder versus the continuous-rate ceiling.

Solves the discrete scheme at one operating point, prints the resulting
irradiance regions with their occupation probabilities, then sweeps SNR
to show how little the ladder gives up against the continuous limit.
"""

import math

from fso_adapt import (
    BerPolicy,
    ConstellationSet,
    SnrSpec,
    ase_limit,
    composite_cdf,
    discrete_ase,
    discrete_regions,
    solve_cutoff_discrete,
)
from fso_adapt.cli import RunConfig

policy = BerPolicy(1e-3)
config = RunConfig.load(None, ["turbulence.sigma_r2=0.4"])
model = config.channel_model()
cset = ConstellationSet()

snr = SnrSpec.from_db(20.0)
sol = solve_cutoff_discrete(snr, policy, model, cset)
print(f"operating point: 20 dB, cutoff* = {sol.cutoff:.4f}")
print()
print("  region              M     P(region)   rate bits")
prev_cdf = 0.0
for lo, hi, msize in discrete_regions(cset, sol.cutoff):
    cdf_hi = composite_cdf(hi, model) if math.isfinite(hi) else 1.0
    prob = cdf_hi - prev_cdf
    prev_cdf = cdf_hi
    rate = math.log2(msize) if msize else 0.0
    hi_txt = f"{hi:7.3f}" if math.isfinite(hi) else "    inf"
    print(f"  [{lo:7.3f}, {hi_txt})  {msize:5d}  {prob:10.4f}  {rate:9.1f}")
print()

print("gap to the continuous-rate ceiling")
print("  snr_db   continuous   ladder   gap")
for db in (0, 5, 10, 15, 20, 25, 30):
    s = SnrSpec.from_db(float(db))
    cont = ase_limit(s, policy, model).ase_bits
    disc = discrete_ase(s, policy, model, cset).ase_bits
    print(f"  {db:6d}  {cont:10.3f}  {disc:7.3f}  {cont - disc:5.3f}")
