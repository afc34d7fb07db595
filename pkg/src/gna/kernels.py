"""Hot numeric kernels: numba-jitted loops with pure-numpy fallbacks.

Set GNA_DISABLE_NUMBA=1 to force the numpy path. Both paths share
signatures and agree to float summation order. Matrix products stay on
np.matmul in either case: single-core BLAS beats a hand-rolled jit GEMM
several times over at the shapes used here, so only the row-wise ops
(layernorm, gelu, causal softmax) are jitted.
"""

import math
import os

import numpy as np
from scipy.special import erf as _sp_erf

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)

_DISABLED = os.environ.get("GNA_DISABLE_NUMBA", "").strip() not in ("", "0")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        # no-op decorator so the jitted defs below stay importable
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


BACKEND = "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------- numba path


@njit(cache=True)
def _nb_layernorm_fwd(x, gamma, beta, eps):
    """(N,h),(h,),(h,) -> out (N,h), mean (N,), rstd (N,)."""
    n, h = x.shape
    out = np.empty((n, h))
    mean = np.empty(n)
    rstd = np.empty(n)
    for i in range(n):
        s = 0.0
        for j in range(h):
            s += x[i, j]
        m = s / h
        v = 0.0
        for j in range(h):
            d = x[i, j] - m
            v += d * d
        r = 1.0 / math.sqrt(v / h + eps)
        mean[i] = m
        rstd[i] = r
        for j in range(h):
            out[i, j] = (x[i, j] - m) * r * gamma[j] + beta[j]
    return out, mean, rstd


@njit(cache=True)
def _nb_layernorm_bwd(dout, x, gamma, mean, rstd):
    """(N,h) grads -> dx (N,h), dgamma (h,), dbeta (h,)."""
    n, h = x.shape
    dx = np.empty((n, h))
    dgamma = np.zeros(h)
    dbeta = np.zeros(h)
    for i in range(n):
        m = mean[i]
        r = rstd[i]
        s1 = 0.0
        s2 = 0.0
        for j in range(h):
            xh = (x[i, j] - m) * r
            dxh = dout[i, j] * gamma[j]
            s1 += dxh
            s2 += dxh * xh
            dgamma[j] += dout[i, j] * xh
            dbeta[j] += dout[i, j]
        s1 /= h
        s2 /= h
        for j in range(h):
            xh = (x[i, j] - m) * r
            dx[i, j] = r * (dout[i, j] * gamma[j] - s1 - xh * s2)
    return dx, dgamma, dbeta


@njit(cache=True)
def _nb_gelu_fwd(x):
    """(N,) -> 0.5*x*(1+erf(x/sqrt(2))), exact erf form."""
    n = x.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = 0.5 * x[i] * (1.0 + math.erf(x[i] * _INV_SQRT2))
    return out


@njit(cache=True)
def _nb_gelu_bwd(dout, x):
    """(N,),(N,) -> dx (N,)."""
    n = x.shape[0]
    dx = np.empty(n)
    for i in range(n):
        cdf = 0.5 * (1.0 + math.erf(x[i] * _INV_SQRT2))
        pdf = math.exp(-0.5 * x[i] * x[i]) * _INV_SQRT2PI
        dx[i] = dout[i] * (cdf + x[i] * pdf)
    return dx


@njit(cache=True)
def _nb_causal_softmax_fwd(scores):
    """(B,L,L) -> row-wise softmax over j<=i, zeros above the diagonal."""
    nb, nl, _ = scores.shape
    probs = np.zeros((nb, nl, nl))
    for b in range(nb):
        for i in range(nl):
            mx = scores[b, i, 0]
            for j in range(1, i + 1):
                if scores[b, i, j] > mx:
                    mx = scores[b, i, j]
            s = 0.0
            for j in range(i + 1):
                e = math.exp(scores[b, i, j] - mx)
                probs[b, i, j] = e
                s += e
            inv = 1.0 / s
            for j in range(i + 1):
                probs[b, i, j] *= inv
    return probs


@njit(cache=True)
def _nb_causal_softmax_bwd(dprobs, probs):
    """(B,L,L),(B,L,L) -> dscores (B,L,L), zero above the diagonal."""
    nb, nl, _ = probs.shape
    dscores = np.zeros((nb, nl, nl))
    for b in range(nb):
        for i in range(nl):
            dot = 0.0
            for j in range(i + 1):
                dot += probs[b, i, j] * dprobs[b, i, j]
            for j in range(i + 1):
                dscores[b, i, j] = probs[b, i, j] * (dprobs[b, i, j] - dot)
    return dscores


@njit(cache=True)
def _nb_metropolis_table_chain(f_table, beta, flips, us, start):
    """Single-flip Metropolis over a precomputed objective table.

    State s indexes f_table (bit t of s = variable t). Returns per-state
    visit counts, counted after each proposal is resolved.
    """
    visits = np.zeros(f_table.shape[0], dtype=np.int64)
    s = start
    fs = f_table[s]
    for i in range(flips.shape[0]):
        c = s ^ (1 << flips[i])
        fc = f_table[c]
        if fc <= fs or us[i] < math.exp(-beta * (fc - fs)):
            s = c
            fs = fc
        visits[s] += 1
    return visits


# ---------------------------------------------------------------- numpy path


def _np_layernorm_fwd(x, gamma, beta, eps):
    mean = x.mean(axis=1)
    xc = x - mean[:, None]
    var = (xc * xc).mean(axis=1)
    rstd = 1.0 / np.sqrt(var + eps)
    out = xc * rstd[:, None] * gamma + beta
    return out, mean, rstd


def _np_layernorm_bwd(dout, x, gamma, mean, rstd):
    xh = (x - mean[:, None]) * rstd[:, None]
    dxh = dout * gamma
    s1 = dxh.mean(axis=1, keepdims=True)
    s2 = (dxh * xh).mean(axis=1, keepdims=True)
    dx = rstd[:, None] * (dxh - s1 - xh * s2)
    dgamma = (dout * xh).sum(axis=0)
    dbeta = dout.sum(axis=0)
    return dx, dgamma, dbeta


def _np_gelu_fwd(x):
    return 0.5 * x * (1.0 + _sp_erf(x * _INV_SQRT2))


def _np_gelu_bwd(dout, x):
    cdf = 0.5 * (1.0 + _sp_erf(x * _INV_SQRT2))
    pdf = np.exp(-0.5 * x * x) * _INV_SQRT2PI
    return dout * (cdf + x * pdf)


def _np_causal_softmax_fwd(scores):
    nl = scores.shape[1]
    mask = np.triu(np.ones((nl, nl), dtype=bool), k=1)
    s = np.where(mask, -np.inf, scores)
    s = s - s.max(axis=2, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=2, keepdims=True)


def _np_causal_softmax_bwd(dprobs, probs):
    dot = (probs * dprobs).sum(axis=2, keepdims=True)
    return probs * (dprobs - dot)


def _np_metropolis_table_chain(f_table, beta, flips, us, start):
    # sequential chain; the python loop is the fallback of last resort
    visits = np.zeros(f_table.shape[0], dtype=np.int64)
    s = int(start)
    fs = f_table[s]
    for i in range(flips.shape[0]):
        c = s ^ (1 << int(flips[i]))
        fc = f_table[c]
        if fc <= fs or us[i] < math.exp(-beta * (fc - fs)):
            s = c
            fs = fc
        visits[s] += 1
    return visits


# ---------------------------------------------------------------- dispatch


def layernorm_fwd(x, gamma, beta, eps=1e-5):
    """(...,h) -> normalized (...,h), plus flat (N,) mean and rstd."""
    h = x.shape[-1]
    x2 = np.ascontiguousarray(x).reshape(-1, h)
    if NUMBA_ENABLED:
        out, mean, rstd = _nb_layernorm_fwd(x2, gamma, beta, eps)
    else:
        out, mean, rstd = _np_layernorm_fwd(x2, gamma, beta, eps)
    return out.reshape(x.shape), mean, rstd


def layernorm_bwd(dout, x, gamma, mean, rstd):
    h = x.shape[-1]
    d2 = np.ascontiguousarray(dout).reshape(-1, h)
    x2 = np.ascontiguousarray(x).reshape(-1, h)
    if NUMBA_ENABLED:
        dx, dgamma, dbeta = _nb_layernorm_bwd(d2, x2, gamma, mean, rstd)
    else:
        dx, dgamma, dbeta = _np_layernorm_bwd(d2, x2, gamma, mean, rstd)
    return dx.reshape(x.shape), dgamma, dbeta


def gelu_fwd(x):
    if NUMBA_ENABLED:
        return _nb_gelu_fwd(np.ascontiguousarray(x).ravel()).reshape(x.shape)
    return _np_gelu_fwd(x)


def gelu_bwd(dout, x):
    if NUMBA_ENABLED:
        d = np.ascontiguousarray(dout).ravel()
        xf = np.ascontiguousarray(x).ravel()
        return _nb_gelu_bwd(d, xf).reshape(x.shape)
    return _np_gelu_bwd(dout, x)


def causal_softmax_fwd(scores):
    if NUMBA_ENABLED:
        return _nb_causal_softmax_fwd(np.ascontiguousarray(scores))
    return _np_causal_softmax_fwd(scores)


def causal_softmax_bwd(dprobs, probs):
    if NUMBA_ENABLED:
        return _nb_causal_softmax_bwd(
            np.ascontiguousarray(dprobs), np.ascontiguousarray(probs)
        )
    return _np_causal_softmax_bwd(dprobs, probs)


def metropolis_table_chain(f_table, beta, n_steps, rng, start=None):
    """Run a fixed-beta single-flip Metropolis chain over an enumerated
    objective and return per-state visit counts (length 2**n).

    The proposal and acceptance randomness is pre-drawn with numpy so both
    backends walk the identical chain.
    """
    f_table = np.ascontiguousarray(f_table, dtype=np.float64)
    size = f_table.shape[0]
    n_bits = size.bit_length() - 1
    if size != (1 << n_bits):
        raise ValueError("f_table length must be a power of two")
    if beta < 0.0:
        raise ValueError("beta must be nonnegative")
    flips = rng.integers(0, n_bits, size=n_steps)
    us = rng.random(n_steps)
    if start is None:
        start = int(rng.integers(0, size))
    impl = _nb_metropolis_table_chain if NUMBA_ENABLED else _np_metropolis_table_chain
    return impl(f_table, float(beta), flips, us, int(start))
