"""LASSO over an aligned design of the bundled pseudo-data: the regularization
path, and the penalty picked by rolling-origin cross-validation."""

import numpy as np

from mflstm import LagSpec, frequency_align, lasso_path, lasso_select
from mflstm.empirical import load_pseudo_thai

ds, meta = load_pseudo_thai()
ad = frequency_align(ds, LagSpec(0, 2), 3)
_, X, y = ad.rows()

path = lasso_path(X, y)
for i in range(0, len(path.lambdas), 20):
    active = int(np.count_nonzero(path.coefs[i]))
    print(f"lambda {path.lambdas[i]:9.5f}  active {active:2d}/{X.shape[1]}")

sel = lasso_select(ad, folds=4)
print(f"CV lambda {sel.lam:.5f} over {sel.folds} folds keeps {len(sel.selected)} of {len(ad.blocks)} series:")
print("  " + ", ".join(sel.selected))
