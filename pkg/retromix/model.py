# Mixture Transformer models
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

import dataclasses
from dataclasses import dataclass
from typing import Dict, List, Tuple, Optional, Iterator, Any
import numpy
from retromix.types import Seed, TokenIds
from retromix.utils import generatorFor, logSumExp
from retromix.errors import SequenceTooLong, TokenOutOfRange
from retromix.layers import (Block, positionalEncoding, dropoutMask, applyMask,
                             layerNormForward, layerNormBackward,
                             attentionForward, attentionBackward, causalMask,
                             feedForwardForward, feedForwardBackward, logSoftmax)


# ---------- Configuration ----------

@dataclass(frozen=True)
class ModelConfig:
    '''The shape of a mixture Transformer.

    :param vocabSize: the number of token ids, reserved ids included
    :param dModel: (optional) the model dimension (defaults to 128)
    :param nHeads: (optional) the number of attention heads (defaults to 4)
    :param nEncoderLayers: (optional) the encoder depth (defaults to 3)
    :param nDecoderLayers: (optional) the decoder depth (defaults to 3)
    :param dFF: (optional) the feed-forward hidden size (defaults to 256)
    :param dropout: (optional) the dropout probability (defaults to 0.1)
    :param maxLen: (optional) the longest sequence, sentinels included (defaults to 256)
    :param K: (optional) the number of latent classes (defaults to 5)'''

    vocabSize: int
    dModel: int = 128
    nHeads: int = 4
    nEncoderLayers: int = 3
    nDecoderLayers: int = 3
    dFF: int = 256
    dropout: float = 0.1
    maxLen: int = 256
    K: int = 5

    def __post_init__(self):
        if self.vocabSize < 4:
            raise ValueError(f'Vocabulary of size {self.vocabSize} has no real tokens')
        if self.dModel < 1 or self.nHeads < 1 or self.dModel % self.nHeads != 0:
            raise ValueError(f'Model dimension {self.dModel} not divisible into {self.nHeads} heads')
        if self.nEncoderLayers < 1 or self.nDecoderLayers < 1 or self.dFF < 1 or self.maxLen < 2:
            raise ValueError('Layer counts, feed-forward size and maximum length must be positive')
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError(f'Dropout {self.dropout} outside [0, 1)')
        if self.K < 1:
            raise ValueError(f'Need at least one latent class, not {self.K}')


    def withChanges(self, **kwargs) -> 'ModelConfig':
        return dataclasses.replace(self, **kwargs)


    def toDict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


    @staticmethod
    def fromDict(d: Dict[str, Any]) -> 'ModelConfig':
        return ModelConfig(**d)


# ---------- Dropout modes ----------

class DropoutMode:
    '''Whether dropout is applied in a forward pass and, if so, the
    seed its masks are drawn from. The same seed always gives the same
    masks.

    :param on: (optional) True to apply dropout (defaults to False)
    :param seed: (optional) the mask seed'''

    def __init__(self, on: bool = False, seed: Seed = None):
        self._on = on
        self._seed = seed


    @staticmethod
    def off() -> 'DropoutMode':
        return DropoutMode(False)


    @staticmethod
    def withSeed(seed: Seed) -> 'DropoutMode':
        '''Return a mode applying dropout with masks drawn from the seed.

        :param seed: the seed
        :returns: the mode'''
        return DropoutMode(True, seed)


    def isOn(self) -> bool:
        return self._on


    def generator(self) -> Optional[numpy.random.Generator]:
        '''Return a fresh mask generator, or None if dropout is off.

        :returns: the generator or None'''
        return generatorFor(self._seed) if self._on else None


    def __repr__(self) -> str:
        return f'DropoutMode(on, {self._seed})' if self._on else 'DropoutMode(off)'


OFF = DropoutMode.off()


# ---------- Parameters ----------

def parameterShapes(cfg: ModelConfig) -> List[Tuple[str, Tuple[int, ...]]]:
    '''Return the names and shapes of a model's parameters, in
    declaration order.

    :param cfg: the model configuration
    :returns: a list of (name, shape) pairs'''
    d, f, V = cfg.dModel, cfg.dFF, cfg.vocabSize
    shapes: List[Tuple[str, Tuple[int, ...]]] = [('embedding', (V, d))]

    def ln(p):
        shapes.extend([(f'{p}.gamma', (d,)), (f'{p}.beta', (d,))])

    def attn(p):
        for w in 'qkvo':
            shapes.extend([(f'{p}.w{w}', (d, d)), (f'{p}.b{w}', (d,))])

    def ff(p):
        shapes.extend([(f'{p}.w1', (d, f)), (f'{p}.b1', (f,)),
                       (f'{p}.w2', (f, d)), (f'{p}.b2', (d,))])

    for l in range(cfg.nEncoderLayers):
        ln(f'encoder.{l}.ln1')
        attn(f'encoder.{l}.attn')
        ln(f'encoder.{l}.ln2')
        ff(f'encoder.{l}.ff')
    ln('encoder.ln')
    for l in range(cfg.nDecoderLayers):
        ln(f'decoder.{l}.ln1')
        attn(f'decoder.{l}.selfattn')
        ln(f'decoder.{l}.ln2')
        attn(f'decoder.{l}.crossattn')
        ln(f'decoder.{l}.ln3')
        ff(f'decoder.{l}.ff')
    ln('decoder.ln')
    shapes.extend([('output.w', (d, V)), ('output.b', (V,)), ('latent', (cfg.K, d))])
    return shapes


def parameterCount(cfg: ModelConfig) -> int:
    '''Return the number of scalar parameters of a model, in closed form:

        V d + Le (4d + 4(d^2 + d) + 2 d f + f + d)
            + Ld (6d + 8(d^2 + d) + 2 d f + f + d)
            + 4d + d V + V + K d

    for vocabulary size V, model dimension d, feed-forward size f,
    Le encoder and Ld decoder layers, and K latent classes. The latent
    classes add only K d parameters.

    :param cfg: the model configuration
    :returns: the parameter count'''
    d, f, V = cfg.dModel, cfg.dFF, cfg.vocabSize
    enc = 4 * d + 4 * (d * d + d) + 2 * d * f + f + d
    dec = 6 * d + 8 * (d * d + d) + 2 * d * f + f + d
    return (V * d + cfg.nEncoderLayers * enc + cfg.nDecoderLayers * dec
            + 4 * d + d * V + V + cfg.K * d)


class ModelParams:
    '''A named collection of model tensors.

    This holds a model's parameters, and also its gradients (which
    have exactly the same structure). Tensors are float64 arrays kept in
    declaration order. The positional encodings are derived from the
    configuration and are not parameters.

    :param cfg: the model configuration
    :param tensors: map from names to arrays, in declaration order'''

    def __init__(self, cfg: ModelConfig, tensors: Dict[str, numpy.ndarray]):
        self._config = cfg
        self._tensors: Dict[str, numpy.ndarray] = dict()
        for (n, s) in parameterShapes(cfg):
            if n not in tensors:
                raise ValueError(f'Missing tensor {n}')
            t = numpy.asarray(tensors[n], dtype=numpy.float64)
            if t.shape != s:
                raise ValueError(f'Tensor {n} has shape {t.shape}, expected {s}')
            self._tensors[n] = t
        self._pe: Optional[numpy.ndarray] = None


    @staticmethod
    def zeros(cfg: ModelConfig) -> 'ModelParams':
        '''Return all-zero tensors for a configuration.

        :param cfg: the configuration
        :returns: the tensors'''
        return ModelParams(cfg, {n: numpy.zeros(s) for (n, s) in parameterShapes(cfg)})


    # ---------- Access ----------

    def config(self) -> ModelConfig:
        return self._config


    def names(self) -> List[str]:
        '''Return the tensor names in declaration order.

        :returns: the names'''
        return list(self._tensors.keys())


    def __getitem__(self, n: str) -> numpy.ndarray:
        return self._tensors[n]


    def __setitem__(self, n: str, v: numpy.ndarray):
        '''Overwrite a tensor's values in place, keeping its shape.

        :param n: the name
        :param v: the new values'''
        if n not in self._tensors:
            raise KeyError(n)
        self._tensors[n][...] = v


    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)


    def items(self) -> Iterator[Tuple[str, numpy.ndarray]]:
        return iter(self._tensors.items())


    def block(self, prefix: str) -> Block:
        '''Return the tensors under a prefix, keyed by the rest of their
        names. The arrays are shared, not copied.

        :param prefix: the prefix, such as "encoder.0.attn"
        :returns: the block'''
        p = prefix + '.'
        return {n[len(p):]: t for (n, t) in self._tensors.items() if n.startswith(p)}


    def addBlock(self, prefix: str, b: Block):
        '''Add a block of values into the tensors under a prefix.

        :param prefix: the prefix
        :param b: the block'''
        for (k, v) in b.items():
            self._tensors[f'{prefix}.{k}'] += v


    def latentEmbeddings(self) -> numpy.ndarray:
        '''Return the latent class embeddings, one row per class.

        :returns: a (K, d) array'''
        return self._tensors['latent']


    def positionalEncoding(self) -> numpy.ndarray:
        if self._pe is None:
            self._pe = positionalEncoding(self._config.maxLen, self._config.dModel)
        return self._pe


    def numberOfParameters(self) -> int:
        return sum(t.size for t in self._tensors.values())


    # ---------- Arithmetic ----------

    def copy(self) -> 'ModelParams':
        return ModelParams(self._config, {n: t.copy() for (n, t) in self._tensors.items()})


    def zerosLike(self) -> 'ModelParams':
        return ModelParams.zeros(self._config)


    def scale(self, c: float):
        '''Multiply every tensor by a constant, in place.

        :param c: the constant'''
        for t in self._tensors.values():
            t *= c


    def add(self, other: 'ModelParams'):
        '''Add another set of tensors into this one, in place.

        :param other: the tensors to add'''
        for (n, t) in other.items():
            self._tensors[n] += t


    def globalNorm(self) -> float:
        '''Return the Euclidean norm of all the tensors taken together.

        :returns: the norm'''
        return float(numpy.sqrt(sum(float(numpy.sum(t * t)) for t in self._tensors.values())))


    def isFinite(self) -> bool:
        return all(numpy.all(numpy.isfinite(t)) for t in self._tensors.values())


    def __repr__(self) -> str:
        return f'ModelParams({self.numberOfParameters()} parameters, K={self._config.K})'


def initParams(cfg: ModelConfig, seed: Seed = None) -> ModelParams:
    '''Initialise a model's parameters.

    Matrices (the embeddings included) are drawn Glorot-uniform, biases
    and LayerNorm offsets are zero, and LayerNorm gains one. Tensors
    are drawn in declaration order, so the same seed always gives the
    same parameters.

    :param cfg: the model configuration
    :param seed: (optional) the random seed
    :returns: the parameters'''
    rng = generatorFor(seed)
    ts = dict()
    for (n, s) in parameterShapes(cfg):
        if len(s) == 2:
            lim = numpy.sqrt(6.0 / (s[0] + s[1]))
            ts[n] = rng.uniform(-lim, lim, size=s)
        elif n.endswith('.gamma'):
            ts[n] = numpy.ones(s)
        else:
            ts[n] = numpy.zeros(s)
    return ModelParams(cfg, ts)


# ---------- Input checks ----------

def _checkIds(cfg: ModelConfig, ids: TokenIds):
    if len(ids) > cfg.maxLen:
        raise SequenceTooLong(len(ids), cfg.maxLen)
    for i in ids:
        if not (0 <= i < cfg.vocabSize):
            raise TokenOutOfRange(i, cfg.vocabSize)


def _checkLatent(cfg: ModelConfig, z: int):
    if not (1 <= z <= cfg.K):
        raise ValueError(f'Latent class {z} outside 1..{cfg.K}')


# ---------- Encoder ----------

def _encode(params: ModelParams, x: TokenIds,
            rng: Optional[numpy.random.Generator]) -> Tuple[numpy.ndarray, Any]:
    cfg = params.config()
    (d, H, p) = (cfg.dModel, cfg.nHeads, cfg.dropout)
    T = len(x)
    ids = numpy.asarray(x, dtype=numpy.int64)
    e = params['embedding'][ids] * numpy.sqrt(d) + params.positionalEncoding()[:T]
    m0 = dropoutMask(rng, p, e.shape)
    h = applyMask(e, m0)

    caches = []
    for l in range(cfg.nEncoderLayers):
        pre = f'encoder.{l}'
        (a, c1) = layerNormForward(h, params.block(f'{pre}.ln1'))
        (s, c2) = attentionForward(a, a, params.block(f'{pre}.attn'), H,
                                   drop=dropoutMask(rng, p, (H, T, T)))
        h1 = h + s
        (b, c3) = layerNormForward(h1, params.block(f'{pre}.ln2'))
        (f, c4) = feedForwardForward(b, params.block(f'{pre}.ff'),
                                     drop=dropoutMask(rng, p, (T, cfg.dFF)))
        h = h1 + f
        caches.append((c1, c2, c3, c4))
    (mem, cf) = layerNormForward(h, params.block('encoder.ln'))
    return (mem, (ids, m0, caches, cf))


def _encodeBackward(params: ModelParams, grads: ModelParams,
                    dmem: numpy.ndarray, cache: Any):
    cfg = params.config()
    (ids, m0, caches, cf) = cache
    (dh, g) = layerNormBackward(dmem, cf, params.block('encoder.ln'))
    grads.addBlock('encoder.ln', g)
    for l in reversed(range(cfg.nEncoderLayers)):
        pre = f'encoder.{l}'
        (c1, c2, c3, c4) = caches[l]
        (db, g) = feedForwardBackward(dh, c4, params.block(f'{pre}.ff'))
        grads.addBlock(f'{pre}.ff', g)
        (dln, g) = layerNormBackward(db, c3, params.block(f'{pre}.ln2'))
        grads.addBlock(f'{pre}.ln2', g)
        dh1 = dh + dln
        (dq, dkv, g) = attentionBackward(dh1, c2, params.block(f'{pre}.attn'), cfg.nHeads)
        grads.addBlock(f'{pre}.attn', g)
        (dln, g) = layerNormBackward(dq + dkv, c1, params.block(f'{pre}.ln1'))
        grads.addBlock(f'{pre}.ln1', g)
        dh = dh1 + dln
    de = applyMask(dh, m0)
    numpy.add.at(grads['embedding'], ids, de * numpy.sqrt(cfg.dModel))


# ---------- Decoder ----------

def _decode(params: ModelParams, mem: numpy.ndarray, y: TokenIds, z: int,
            rng: Optional[numpy.random.Generator]) -> Tuple[numpy.ndarray, Any]:
    cfg = params.config()
    (d, H, p) = (cfg.dModel, cfg.nHeads, cfg.dropout)
    T = len(y)
    S = mem.shape[0]
    ids = numpy.asarray(y, dtype=numpy.int64)
    e = (params['embedding'][ids] * numpy.sqrt(d) + params.positionalEncoding()[:T]
         + params['latent'][z - 1])
    m0 = dropoutMask(rng, p, e.shape)
    h = applyMask(e, m0)
    mask = causalMask(T)

    caches = []
    for l in range(cfg.nDecoderLayers):
        pre = f'decoder.{l}'
        (a, c1) = layerNormForward(h, params.block(f'{pre}.ln1'))
        (s, c2) = attentionForward(a, a, params.block(f'{pre}.selfattn'), H, mask,
                                   drop=dropoutMask(rng, p, (H, T, T)))
        h1 = h + s
        (b, c3) = layerNormForward(h1, params.block(f'{pre}.ln2'))
        (c, c4) = attentionForward(b, mem, params.block(f'{pre}.crossattn'), H,
                                   drop=dropoutMask(rng, p, (H, T, S)))
        h2 = h1 + c
        (fi, c5) = layerNormForward(h2, params.block(f'{pre}.ln3'))
        (f, c6) = feedForwardForward(fi, params.block(f'{pre}.ff'),
                                     drop=dropoutMask(rng, p, (T, cfg.dFF)))
        h = h2 + f
        caches.append((c1, c2, c3, c4, c5, c6))
    (o, cf) = layerNormForward(h, params.block('decoder.ln'))
    logp = logSoftmax(o @ params['output.w'] + params['output.b'])
    return (logp, (ids, z, m0, caches, cf, o, S))


def _decodeBackward(params: ModelParams, grads: ModelParams,
                    dlogits: numpy.ndarray, cache: Any) -> numpy.ndarray:
    cfg = params.config()
    (ids, z, m0, caches, cf, o, S) = cache
    grads['output.w'] += o.T @ dlogits
    grads['output.b'] += dlogits.sum(axis=0)
    (dh, g) = layerNormBackward(dlogits @ params['output.w'].T, cf, params.block('decoder.ln'))
    grads.addBlock('decoder.ln', g)

    dmem = numpy.zeros((S, cfg.dModel))
    for l in reversed(range(cfg.nDecoderLayers)):
        pre = f'decoder.{l}'
        (c1, c2, c3, c4, c5, c6) = caches[l]
        (dfi, g) = feedForwardBackward(dh, c6, params.block(f'{pre}.ff'))
        grads.addBlock(f'{pre}.ff', g)
        (dln, g) = layerNormBackward(dfi, c5, params.block(f'{pre}.ln3'))
        grads.addBlock(f'{pre}.ln3', g)
        dh2 = dh + dln
        (dq, dkv, g) = attentionBackward(dh2, c4, params.block(f'{pre}.crossattn'), cfg.nHeads)
        grads.addBlock(f'{pre}.crossattn', g)
        dmem += dkv
        (dln, g) = layerNormBackward(dq, c3, params.block(f'{pre}.ln2'))
        grads.addBlock(f'{pre}.ln2', g)
        dh1 = dh2 + dln
        (dq, dkv, g) = attentionBackward(dh1, c2, params.block(f'{pre}.selfattn'), cfg.nHeads)
        grads.addBlock(f'{pre}.selfattn', g)
        (dln, g) = layerNormBackward(dq + dkv, c1, params.block(f'{pre}.ln1'))
        grads.addBlock(f'{pre}.ln1', g)
        dh = dh1 + dln
    de = applyMask(dh, m0)
    numpy.add.at(grads['embedding'], ids, de * numpy.sqrt(cfg.dModel))
    grads['latent'][z - 1] += de.sum(axis=0)
    return dmem


# ---------- Public interface ----------

def encode(params: ModelParams, x: TokenIds, dm: DropoutMode = OFF) -> numpy.ndarray:
    '''Encode a source sequence, for decoding several targets
    against it.

    :param params: the parameters
    :param x: the source ids
    :param dm: (optional) the dropout mode (defaults to off)
    :returns: the encoder output, (len(x), d)'''
    _checkIds(params.config(), x)
    return _encode(params, x, dm.generator())[0]


def decodeLogProbs(params: ModelParams, memory: numpy.ndarray, yPrefix: TokenIds,
                   z: int) -> numpy.ndarray:
    '''Compute next-token log-probabilities for a target prefix against
    an encoded source, with dropout off.

    :param params: the parameters
    :param memory: the encoder output
    :param yPrefix: the target prefix ids, starting with the begin sentinel
    :param z: the latent class 1..K
    :returns: a (len(yPrefix), V) array of log-probabilities'''
    cfg = params.config()
    _checkIds(cfg, yPrefix)
    _checkLatent(cfg, z)
    return _decode(params, memory, yPrefix, z, None)[0]


def forward(params: ModelParams, x: TokenIds, yPrefix: TokenIds, z: int,
            dm: DropoutMode = OFF) -> numpy.ndarray:
    '''Compute the model's next-token log-probabilities.

    Row t is the distribution of the token following yPrefix[0..t]:
    the decoder is causally masked, so it sees nothing later. The
    embedding of latent class z is added to every decoder input.

    :param params: the parameters
    :param x: the source ids
    :param yPrefix: the target prefix ids
    :param z: the latent class 1..K
    :param dm: (optional) the dropout mode (defaults to off)
    :returns: a (len(yPrefix), V) array of log-probabilities'''
    cfg = params.config()
    _checkIds(cfg, x)
    _checkIds(cfg, yPrefix)
    _checkLatent(cfg, z)
    rng = dm.generator()
    (mem, _) = _encode(params, x, rng)
    return _decode(params, mem, yPrefix, z, rng)[0]


def _targetLogProb(logp: numpy.ndarray, y: TokenIds) -> float:
    return float(numpy.sum(logp[numpy.arange(len(y) - 1), numpy.asarray(y[1:], dtype=numpy.int64)]))


def sequenceLogProb(params: ModelParams, x: TokenIds, y: TokenIds, z: int,
                    dm: DropoutMode = OFF) -> float:
    '''Compute log p(y | z, x), summed over the target's predicted
    positions (every position after the begin sentinel).

    :param params: the parameters
    :param x: the source ids
    :param y: the target ids, with sentinels
    :param z: the latent class 1..K
    :param dm: (optional) the dropout mode (defaults to off)
    :returns: the log-probability'''
    if len(y) <= 1:
        return 0.0
    return _targetLogProb(forward(params, x, y[:-1], z, dm), y)


def latentLogProbs(params: ModelParams, x: TokenIds, y: TokenIds,
                   dm: DropoutMode = OFF) -> numpy.ndarray:
    '''Compute log p(y | z, x) for every latent class, encoding the
    source once.

    :param params: the parameters
    :param x: the source ids
    :param y: the target ids, with sentinels
    :param dm: (optional) the dropout mode (defaults to off)
    :returns: an array of K log-probabilities, class 1 first'''
    cfg = params.config()
    _checkIds(cfg, x)
    _checkIds(cfg, y)
    if len(y) <= 1:
        return numpy.zeros(cfg.K)
    rng = dm.generator()
    (mem, _) = _encode(params, x, rng)
    return numpy.array([_targetLogProb(_decode(params, mem, y[:-1], z, rng)[0], y)
                        for z in range(1, cfg.K + 1)])


def mixtureLogLikelihood(params: ModelParams, x: TokenIds, y: TokenIds,
                         dm: DropoutMode = OFF) -> float:
    '''Compute the mixture log-likelihood log (1/K) sum_z p(y | z, x)
    under a uniform prior on the latent classes, stably in log space.

    :param params: the parameters
    :param x: the source ids
    :param y: the target ids, with sentinels
    :param dm: (optional) the dropout mode (defaults to off)
    :returns: the log-likelihood'''
    lps = latentLogProbs(params, x, y, dm)
    return logSumExp(lps) - numpy.log(params.config().K)


def lossAndGradients(params: ModelParams, x: TokenIds, y: TokenIds, z: int,
                     dm: DropoutMode = OFF) -> Tuple[float, ModelParams]:
    '''Compute the loss -log p(y | z, x) and its gradient with respect
    to every parameter. Latent rows other than z get zero gradient.

    :param params: the parameters
    :param x: the source ids
    :param y: the target ids, with sentinels
    :param z: the latent class 1..K
    :param dm: (optional) the dropout mode (defaults to off)
    :returns: the loss and the gradients'''
    cfg = params.config()
    _checkIds(cfg, x)
    _checkIds(cfg, y)
    _checkLatent(cfg, z)
    grads = params.zerosLike()
    if len(y) <= 1:
        return (0.0, grads)

    rng = dm.generator()
    (mem, ecache) = _encode(params, x, rng)
    (logp, dcache) = _decode(params, mem, y[:-1], z, rng)
    loss = -_targetLogProb(logp, y)

    dlogits = numpy.exp(logp)
    dlogits[numpy.arange(len(y) - 1), numpy.asarray(y[1:], dtype=numpy.int64)] -= 1.0
    dmem = _decodeBackward(params, grads, dlogits, dcache)
    _encodeBackward(params, grads, dmem, ecache)
    return (loss, grads)


def backward(params: ModelParams, x: TokenIds, y: TokenIds, z: int,
             dm: DropoutMode = OFF) -> ModelParams:
    '''Compute the gradient of -log p(y | z, x) with respect to every
    parameter.

    :param params: the parameters
    :param x: the source ids
    :param y: the target ids, with sentinels
    :param z: the latent class 1..K
    :param dm: (optional) the dropout mode (defaults to off)
    :returns: the gradients, structured like the parameters'''
    return lossAndGradients(params, x, y, z, dm)[1]
