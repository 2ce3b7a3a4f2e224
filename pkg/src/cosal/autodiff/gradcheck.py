"""Central-difference gradient verification.

This is the independent oracle for the whole differentiation engine: it
never inspects the tape, only forward values under coordinate
perturbations.
"""

import numpy as np

from cosal.autodiff import tensor as T
from cosal.errors import ContractError


def finite_diff_check(f, inputs, eps=1e-6):
    """Max relative error between backward gradients and central differences.

    ``f`` must be a deterministic scalar-valued function of the given
    tensors. Every coordinate of every input is perturbed by ``+/- eps``;
    the relative error at one coordinate is
    ``|g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|)``.
    """
    if not 0 < eps <= 1e-2:
        raise ContractError(f"eps must lie in (0, 1e-2], got {eps}")
    inputs = list(inputs)
    for t in inputs:
        t.requires_grad = True
        t.zero_grad()

    loss = f(*inputs)
    T.backward(loss)
    grads = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]

    worst = 0.0
    with T.no_grad():
        for t, g_ad in zip(inputs, grads):
            flat = t.data.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                hi = f(*inputs).item()
                flat[i] = orig - eps
                lo = f(*inputs).item()
                flat[i] = orig
                g_fd = (hi - lo) / (2.0 * eps)
                a = float(g_ad.reshape(-1)[i])
                err = abs(a - g_fd) / max(1e-8, abs(a) + abs(g_fd))
                if err > worst:
                    worst = err
    return worst
