"""Central finite-difference gradient oracle shared by the gradient tests.

Independent of the autodiff engine: the forward function is re-evaluated as
plain math with perturbed inputs, so agreement is evidence and not
circularity. All checks run at 64-bit.
"""

import numpy as np

from csg import autodiff as ad


def numeric_grad(fn, arrays, h=1e-6):
    """d fn / d arrays by central differences; fn() returns a float.

    ``arrays`` are the raw numpy buffers the closure reads; they are perturbed
    in place and restored.
    """
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = fn()
            flat[i] = orig - h
            down = fn()
            flat[i] = orig
            gf[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def numeric_grad_at(fn, arr, flat_indices, h=1e-6):
    """Central differences at selected flat indices only (for big tensors)."""
    flat = arr.reshape(-1)
    out = np.zeros(len(flat_indices))
    for j, i in enumerate(flat_indices):
        orig = flat[i]
        flat[i] = orig + h
        up = fn()
        flat[i] = orig - h
        down = fn()
        flat[i] = orig
        out[j] = (up - down) / (2.0 * h)
    return out


def rel_error(analytic, numeric):
    """Scale-free gradient discrepancy: ||a - n|| / max(||a||, ||n||, tiny)."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    denom = max(np.linalg.norm(a), np.linalg.norm(n), 1e-12)
    return float(np.linalg.norm(a - n) / denom)


def check_grads(build_loss, params, tol, h=1e-6):
    """Assert analytic gradients of a scalar loss against finite differences.

    ``build_loss`` runs the forward pass with current parameter data and
    returns the loss Tensor; ``params`` are the leaf tensors to check.
    """
    ad.zero_grads(params)
    with ad.Tape() as tape:
        loss = build_loss()
    tape.backward(loss)
    analytic = []
    for p in params:
        assert p.grad is not None, "missing gradient on checked parameter"
        analytic.append(p.grad.copy())

    numeric = numeric_grad(lambda: build_loss().item(), [p.data for p in params], h=h)
    worst = max(rel_error(a, n) for a, n in zip(analytic, numeric))
    assert worst < tol, f"gradient mismatch: rel error {worst:.3e} >= {tol:g}"
    return worst
