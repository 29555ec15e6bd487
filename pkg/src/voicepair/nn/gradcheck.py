"""Central finite-difference gradient checking for the manual kernels."""

import numpy as np

EPS_DEFAULT = 1e-5


def gradient_check(loss_fn, params, grads, rng=None, n_samples=20, eps=EPS_DEFAULT):
    """Max relative error between analytic and numeric gradients.

    loss_fn() must recompute the scalar loss from the live param arrays;
    entries are perturbed in place and restored.  Relative error uses
    max(|numeric|, |analytic|, 1) as denominator so near-zero gradients are
    compared absolutely.
    """
    max_rel = 0.0
    for name in sorted(params):
        flat = params[name].reshape(-1)
        gflat = np.asarray(grads[name]).reshape(-1)
        if flat.size == 0:
            continue
        k = min(n_samples, flat.size)
        if rng is None:
            idx = np.arange(k)
        else:
            idx = rng.choice(flat.size, size=k, replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            loss_plus = loss_fn()
            flat[i] = orig - eps
            loss_minus = loss_fn()
            flat[i] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * eps)
            rel = abs(numeric - gflat[i]) / max(abs(numeric), abs(gflat[i]), 1.0)
            max_rel = max(max_rel, rel)
    return max_rel
