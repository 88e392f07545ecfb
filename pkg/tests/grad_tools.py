"""Finite-difference gradient oracle for the network and the topology losses.

Central differences with step 1e-6 against the analytic backward pass;
errors are reported relative to max(1, |analytic|, |numeric|) per entry.
"""

import numpy as np

from torsionscope.nn import forward

FD_STEP = 1e-6


def total_loss(model, batch, terms):
    latent, output = forward(model, batch, training=True)
    return sum(t.weight * t.fn(batch, latent, output)[0] for t in terms)


def analytic_gradients(model, batch, terms):
    """Per-parameter gradients of the weighted loss sum, no optimizer step."""
    latent, output = forward(model, batch, training=True)
    d_latent = np.zeros_like(latent)
    d_output = np.zeros_like(output)
    for t in terms:
        _, gl, go = t.fn(batch, latent, output)
        if gl is not None:
            d_latent = d_latent + t.weight * gl
        if go is not None:
            d_output = d_output + t.weight * go
    grad = d_output
    for layer in reversed(model.decoder):
        grad = layer.backward(grad)
    grad = grad + d_latent
    for layer in reversed(model.encoder):
        grad = layer.backward(grad)
    return [g.copy() for layer in model.layers for g in layer.gradients()]


def max_relative_error(model, batch, terms, step=FD_STEP):
    analytic = analytic_gradients(model, batch, terms)
    worst = 0.0
    params = model.parameters()
    assert len(params) == len(analytic)
    for p, g in zip(params, analytic):
        flat_p = p.ravel()
        flat_g = g.ravel()
        for idx in range(flat_p.size):
            orig = flat_p[idx]
            flat_p[idx] = orig + step
            hi = total_loss(model, batch, terms)
            flat_p[idx] = orig - step
            lo = total_loss(model, batch, terms)
            flat_p[idx] = orig
            numeric = (hi - lo) / (2.0 * step)
            denom = max(1.0, abs(flat_g[idx]), abs(numeric))
            worst = max(worst, abs(flat_g[idx] - numeric) / denom)
    return worst
