import numpy as np

from securevector.params import ParamSet, optimal_K


def unit_rows(n, d, seed=0):
    g = np.random.default_rng(seed)
    X = g.standard_normal((n, d))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def small_params(S=256, d=64, **kw):
    base = optimal_K(S, d)
    kw.setdefault("K", base.K)
    kw.setdefault("L", base.L)
    return ParamSet(S=S, d=d, **kw)
