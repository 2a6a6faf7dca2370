# Transformer building blocks with hand-written gradients
#
# Copyright (C) 2024 retromix contributors
#
# This file is part of retromix, an experimental toolkit for diverse
# retrosynthesis prediction with mixture sequence models
#
# This is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This software is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this software. If not, see <http://www.gnu.org/licenses/gpl.html>.

# All functions work on single sequences held as (T, d) arrays. Each
# forward function returns its output and a cache; the matching
# backward function takes the output gradient and the cache and returns
# the input gradient and a dict of parameter gradients.

import numpy
from typing import Dict, Tuple, Optional, Any

# Parameter blocks are dicts from short names (wq, b1, gamma, ...) to arrays
Block = Dict[str, numpy.ndarray]

# LayerNorm variance floor
LN_EPS = 1e-5


# ---------- Positional encodings ----------

def positionalEncoding(maxLen: int, d: int) -> numpy.ndarray:
    '''Return the sinusoidal positional encodings for positions
    0 to maxLen - 1.

    :param maxLen: the number of positions
    :param d: the model dimension
    :returns: a (maxLen, d) array'''
    pos = numpy.arange(maxLen, dtype=numpy.float64)[:, None]
    div = numpy.exp(numpy.arange(0, d, 2, dtype=numpy.float64) * (-numpy.log(10000.0) / d))
    pe = numpy.zeros((maxLen, d), dtype=numpy.float64)
    pe[:, 0::2] = numpy.sin(pos * div)
    pe[:, 1::2] = numpy.cos(pos * div)[:, :d // 2]
    return pe


# ---------- Dropout ----------

def dropoutMask(rng: Optional[numpy.random.Generator], p: float,
                shape: Tuple[int, ...]) -> Optional[numpy.ndarray]:
    '''Draw an inverted-dropout mask, already scaled by 1 / (1 - p).
    Returns None (no dropout) when there is no generator or p is 0.

    :param rng: the generator, or None for dropout off
    :param p: the dropout probability
    :param shape: the mask shape
    :returns: the mask or None'''
    if rng is None or p == 0.0:
        return None
    return (rng.random(shape) >= p).astype(numpy.float64) / (1.0 - p)


def applyMask(x: numpy.ndarray, m: Optional[numpy.ndarray]) -> numpy.ndarray:
    return x if m is None else x * m


# ---------- Layer normalisation ----------

def layerNormForward(x: numpy.ndarray, ps: Block) -> Tuple[numpy.ndarray, Any]:
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / numpy.sqrt(var + LN_EPS)
    xh = (x - mu) * inv
    return (xh * ps['gamma'] + ps['beta'], (xh, inv))


def layerNormBackward(dy: numpy.ndarray, cache: Any, ps: Block) -> Tuple[numpy.ndarray, Block]:
    (xh, inv) = cache
    n = xh.shape[-1]
    grads = dict(gamma=(dy * xh).sum(axis=0), beta=dy.sum(axis=0))
    dxh = dy * ps['gamma']
    dx = (inv / n) * (n * dxh - dxh.sum(axis=-1, keepdims=True)
                      - xh * (dxh * xh).sum(axis=-1, keepdims=True))
    return (dx, grads)


# ---------- Attention ----------

def _splitHeads(x: numpy.ndarray, h: int) -> numpy.ndarray:
    (t, d) = x.shape
    return x.reshape(t, h, d // h).transpose(1, 0, 2)


def _mergeHeads(x: numpy.ndarray) -> numpy.ndarray:
    (h, t, dk) = x.shape
    return x.transpose(1, 0, 2).reshape(t, h * dk)


def softmax(s: numpy.ndarray) -> numpy.ndarray:
    '''Softmax over the last axis, stable under masking with -inf
    provided every row has at least one finite entry.'''
    e = numpy.exp(s - s.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def attentionForward(xq: numpy.ndarray, xkv: numpy.ndarray, ps: Block, h: int,
                     mask: Optional[numpy.ndarray] = None,
                     drop: Optional[numpy.ndarray] = None) -> Tuple[numpy.ndarray, Any]:
    '''Multi-head scaled dot-product attention.

    :param xq: the queries' inputs, (Tq, d)
    :param xkv: the keys' and values' inputs, (Tk, d)
    :param ps: the block with wq, bq, wk, bk, wv, bv, wo, bo
    :param h: the number of heads
    :param mask: (optional) boolean (Tq, Tk) array, False where attention is forbidden
    :param drop: (optional) dropout mask on the attention weights, (h, Tq, Tk)
    :returns: the output and the cache'''
    dk = xq.shape[1] // h
    Q = _splitHeads(xq @ ps['wq'] + ps['bq'], h)
    K = _splitHeads(xkv @ ps['wk'] + ps['bk'], h)
    V = _splitHeads(xkv @ ps['wv'] + ps['bv'], h)
    S = Q @ K.transpose(0, 2, 1) / numpy.sqrt(dk)
    if mask is not None:
        S = numpy.where(mask[None, :, :], S, -numpy.inf)
    P = softmax(S)
    Pd = applyMask(P, drop)
    O = _mergeHeads(Pd @ V)
    y = O @ ps['wo'] + ps['bo']
    return (y, (xq, xkv, Q, K, V, P, Pd, drop, O))


def attentionBackward(dy: numpy.ndarray, cache: Any, ps: Block,
                      h: int) -> Tuple[numpy.ndarray, numpy.ndarray, Block]:
    '''Gradients of multi-head attention.

    :returns: the gradients for the queries' inputs, the keys' and values'
              inputs, and the parameters'''
    (xq, xkv, Q, K, V, P, Pd, drop, O) = cache
    dk = Q.shape[2]
    grads: Block = dict()
    grads['wo'] = O.T @ dy
    grads['bo'] = dy.sum(axis=0)
    dO = _splitHeads(dy @ ps['wo'].T, h)

    dPd = dO @ V.transpose(0, 2, 1)
    dV = Pd.transpose(0, 2, 1) @ dO
    dP = applyMask(dPd, drop)
    dS = P * (dP - (dP * P).sum(axis=-1, keepdims=True)) / numpy.sqrt(dk)
    dQ = _mergeHeads(dS @ K)
    dK = _mergeHeads(dS.transpose(0, 2, 1) @ Q)
    dV = _mergeHeads(dV)

    grads['wq'] = xq.T @ dQ
    grads['bq'] = dQ.sum(axis=0)
    grads['wk'] = xkv.T @ dK
    grads['bk'] = dK.sum(axis=0)
    grads['wv'] = xkv.T @ dV
    grads['bv'] = dV.sum(axis=0)
    dxq = dQ @ ps['wq'].T
    dxkv = dK @ ps['wk'].T + dV @ ps['wv'].T
    return (dxq, dxkv, grads)


def causalMask(t: int) -> numpy.ndarray:
    '''Return the mask letting position i attend to positions up to i.

    :param t: the sequence length
    :returns: a boolean (t, t) array'''
    return numpy.tril(numpy.ones((t, t), dtype=bool))


# ---------- Feed-forward ----------

def feedForwardForward(x: numpy.ndarray, ps: Block,
                       drop: Optional[numpy.ndarray] = None) -> Tuple[numpy.ndarray, Any]:
    a = x @ ps['w1'] + ps['b1']
    r = numpy.maximum(a, 0.0)
    rd = applyMask(r, drop)
    return (rd @ ps['w2'] + ps['b2'], (x, a, rd, drop))


def feedForwardBackward(dy: numpy.ndarray, cache: Any, ps: Block) -> Tuple[numpy.ndarray, Block]:
    (x, a, rd, drop) = cache
    grads: Block = dict(w2=rd.T @ dy, b2=dy.sum(axis=0))
    da = applyMask(dy @ ps['w2'].T, drop) * (a > 0)
    grads['w1'] = x.T @ da
    grads['b1'] = da.sum(axis=0)
    return (da @ ps['w1'].T, grads)


# ---------- Output ----------

def logSoftmax(s: numpy.ndarray) -> numpy.ndarray:
    '''Log-softmax over the last axis.'''
    m = s.max(axis=-1, keepdims=True)
    return s - m - numpy.log(numpy.exp(s - m).sum(axis=-1, keepdims=True))
