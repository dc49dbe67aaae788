"""One simulated dataset, four estimators, a rolling out-of-sample window and a
Diebold-Mariano comparison against MIDAS."""

from mflstm import DgpConfig, LagSpec, TrainConfig, dm_test, gen_dgp, rmsfe, rolling_forecast
from mflstm.simulation import Ar1Estimator, FaLstmEstimator, MidasEstimator, UMidasEstimator

ds = gen_dgp(DgpConfig(T=80, seed=3))
lstm_cfg = TrainConfig(epochs=50, dropout=0.2, batch_size=16, cells=(8,))
estimators = [
    MidasEstimator(ids=("x1", "x2"), n_lags=6),
    UMidasEstimator(ids=("x1", "x2"), n_lags=6),
    Ar1Estimator(),
    FaLstmEstimator(timesteps=2, lags=LagSpec(0, 5), config=lstm_cfg, name="FA-LSTM[2,0:5]"),
]

h_m = 1
results = {e.name: rolling_forecast(e, ds, h_m, seed=0) for e in estimators}
bench = [r.error for r in results["MIDAS"]]
print(f"{'model':16s} {'RMSFE':>7s} {'DM vs MIDAS':>12s} {'p':>6s}")
for name, recs in results.items():
    line = f"{name:16s} {rmsfe(recs):7.3f}"
    if name != "MIDAS":
        stat, p = dm_test([r.error for r in recs], bench, h=1)
        line += f" {stat:12.3f} {p:6.3f}"
    print(line)
