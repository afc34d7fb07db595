"""Training objectives: the REINFORCE free-energy gradient (unlimited
queries) and the partial-distribution KL loss (limited queries)."""

import numpy as np
from scipy.special import logsumexp as np_logsumexp

from .. import autodiff as ad


def local_free_energy(f_vals, log_q, beta):
    """F_loc(x, beta) = f(x) + log q(x, beta) / beta, elementwise."""
    return np.asarray(f_vals, dtype=np.float64) + np.asarray(log_q) / float(beta)


def free_energy_gradient(model, instance, beta, batch, f_vals=None):
    """Gradient of the free energy at `beta` from a weighted sample batch.

    REINFORCE with the weighted batch mean of F_loc as the baseline:
    grad = < (F_loc - <F_loc>) * grad log q >, both expectations under the
    batch weights. Gradients are left on the parameter tensors and also
    returned by name. Raises if the objective produced non-finite values.
    """
    if f_vals is None:
        f_vals = instance.evaluate_batch(batch.configs)
    f_vals = np.asarray(f_vals, dtype=np.float64)
    if not np.all(np.isfinite(f_vals)):
        bad = np.where(~np.isfinite(f_vals))[0][:5]
        raise RuntimeError(f"non-finite objective values at batch rows {bad.tolist()}")
    for p in model.parameters().values():
        p.grad = None
    w = batch.weights.astype(np.float64)
    w = w / w.sum()
    tape = ad.Tape()
    with tape:
        log_q = model.log_prob_tensor(batch.configs, beta)
        f_loc = f_vals + log_q.data / float(beta)
        baseline = float(np.dot(w, f_loc))
        coef = w * (f_loc - baseline)
        loss = ad.sum_(ad.mul(log_q, ad.Tensor(coef)))
    tape.backward(loss)
    return {
        k: (p.grad if p.grad is not None else np.zeros_like(p.data))
        for k, p in model.parameters().items()
    }


def partial_kl_loss(model, buffer, beta, split):
    """D_KL(p-tilde || q-tilde) over one buffer split, in log space.

    Both distributions are renormalized over the (deduplicated) observed
    configurations; only the q path is differentiable. Returns a scalar
    Tensor (records on the active tape if one is open).
    """
    X, f_vals = buffer.split_arrays(split, dedup=True)
    if X.shape[0] < 2:
        raise ValueError(f"split {split!r} needs >= 2 distinct entries")
    log_p = -float(beta) * f_vals
    log_p_t = log_p - np_logsumexp(log_p)
    log_q = model.log_prob_tensor(X, beta)
    log_q_t = ad.sub(log_q, ad.logsumexp(log_q, axis=0))
    p_t = np.exp(log_p_t)
    return ad.sum_(ad.mul(ad.Tensor(p_t), ad.sub(ad.Tensor(log_p_t), log_q_t)))
