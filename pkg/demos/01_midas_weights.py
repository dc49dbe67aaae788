"""Fit a restricted MIDAS regression to simulated monthly data and compare the
recovered lag weights with the ones that generated the target."""

import numpy as np

from mflstm import LagSpec, MixedFrequencyDataset, Series, almon_weights, frequency_align, midas_fit

rs = np.random.default_rng(0)
T, J, theta = 160, 12, (0.7, -0.1)
x = rs.standard_normal(3 * T)
w = almon_weights(theta, J)

y = np.empty(T)
for t in range(1, T + 1):
    idx = 3 * t - np.arange(J)  # 1-based monthly index of lag j
    keep = idx >= 1
    y[t - 1] = 0.5 + 1.5 * w[keep] @ x[idx[keep] - 1]
y += 0.3 * rs.standard_normal(T)

ds = MixedFrequencyDataset(Series("gdp", y), (Series("ip", x, 3),))
fit = midas_fit(frequency_align(ds, LagSpec(0, J - 1), 0))

print(f"theta  true {theta}  fitted ({fit.theta[0][0]:.3f}, {fit.theta[0][1]:.3f})")
print(f"alpha {fit.alpha:.3f}  beta {fit.beta[0]:.3f}")
print("lag  true    fitted")
for j, (a, b) in enumerate(zip(w, almon_weights(fit.theta[0], J))):
    print(f"{j:3d}  {a:.4f}  {b:.4f}")
