# Hard-EM training of mixture models
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

import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Iterable, Callable, Any
import numpy
from tqdm import tqdm
from retromix.types import Seed, TokenIds, TokenSequence
from retromix.utils import generatorFor, spawnSeeds
from retromix.errors import NonFiniteLoss
from retromix.vocabulary import Vocabulary
from retromix.model import (ModelParams, DropoutMode, OFF, latentLogProbs,
                            lossAndGradients, mixtureLogLikelihood)
from retromix.optimiser import Adam, inverseSqrtSchedule, clipGradients
from retromix.checkpoint import saveCheckpoint


logger = logging.getLogger(__name__)


# Training phases
PRETRAIN = 'pretrain'
FINETUNE = 'finetune'
PHASES = [PRETRAIN, FINETUNE]


# ---------- Configuration ----------

@dataclass(frozen=True)
class TrainConfig:
    '''The settings of one training phase.

    :param batchSize: (optional) examples per step (defaults to 32)
    :param peakRate: (optional) the peak learning rate (defaults to 1e-3)
    :param warmup: (optional) warm-up steps (defaults to 400)
    :param clipNorm: (optional) the gradient clipping norm (defaults to 1.0)
    :param maxSteps: (optional) the number of steps (defaults to 4000)
    :param interval: (optional) steps between metrics records (defaults to 100)
    :param checkpointInterval: (optional) steps between checkpoints, 0 for
                               the final checkpoint only (defaults to 0)
    :param seed: (optional) the shuffling and dropout seed (defaults to 0)
    :param phase: (optional) the phase label (defaults to finetune)'''

    batchSize: int = 32
    peakRate: float = 1e-3
    warmup: int = 400
    clipNorm: float = 1.0
    maxSteps: int = 4000
    interval: int = 100
    checkpointInterval: int = 0
    seed: int = 0
    phase: str = FINETUNE

    def __post_init__(self):
        if min(self.batchSize, self.warmup, self.maxSteps, self.interval) < 1:
            raise ValueError('Batch size, warm-up, steps and interval must be positive')
        if self.peakRate <= 0 or self.clipNorm <= 0:
            raise ValueError('Learning rate and clipping norm must be positive')
        if self.warmup > self.maxSteps:
            raise ValueError(f'Warm-up of {self.warmup} steps longer than the {self.maxSteps} training steps')
        if self.checkpointInterval < 0:
            raise ValueError('Negative checkpoint interval')
        if self.phase not in PHASES:
            raise ValueError(f'Unknown phase {self.phase}')


# ---------- Training data ----------

@dataclass(frozen=True)
class SequencePair:
    '''An encoded training example.'''

    id: str
    source: Tuple[int, ...]
    target: Tuple[int, ...]


class TokenPair:
    '''A tokenised source and target, with an optional mode label.
    Token pairs offer the same token accessors as reactions, so either
    can be encoded for training.

    :param id: the identifier
    :param source: the source tokens
    :param target: the target tokens
    :param mode: (optional) the generating mode'''

    def __init__(self, id: str, source: TokenSequence, target: TokenSequence,
                 mode: Optional[int] = None):
        self._id = id
        self._source = list(source)
        self._target = list(target)
        self._mode = mode


    def id(self) -> str:
        return self._id


    def sourceTokens(self) -> TokenSequence:
        return self._source


    def targetTokens(self) -> TokenSequence:
        return self._target


    def mode(self) -> Optional[int]:
        return self._mode


    def __repr__(self) -> str:
        return f'TokenPair({self._id}, {"".join(self._source)} -> {"".join(self._target)})'


def vocabularyFor(examples: Iterable[Any]) -> Vocabulary:
    '''Build the vocabulary covering examples' sources and targets.

    :param examples: reactions or token pairs
    :returns: the vocabulary'''
    seqs = []
    for e in examples:
        seqs.append(e.sourceTokens())
        seqs.append(e.targetTokens())
    return Vocabulary.fromSequences(seqs)


def encodePairs(vocab: Vocabulary, examples: Iterable[Any]) -> List[SequencePair]:
    '''Encode examples against a vocabulary, which must cover all
    their tokens.

    :param vocab: the vocabulary
    :param examples: reactions or token pairs
    :returns: the encoded pairs'''
    es = list(examples)
    vocab.requireCovers([e.sourceTokens() for e in es] + [e.targetTokens() for e in es])
    return [SequencePair(e.id(),
                         tuple(vocab.encodeSource(e.sourceTokens())),
                         tuple(vocab.encodeTarget(e.targetTokens())))
            for e in es]


# ---------- Hard-EM ----------

@dataclass(frozen=True)
class TraceRecord:
    exampleId: str
    z: int
    losses: Tuple[float, ...]


class HardEMTrace:
    '''The latent class selected for each example of a step, and the
    per-class losses the selection was made from.'''

    def __init__(self):
        self._records: List[TraceRecord] = []


    def append(self, exampleId: str, z: int, losses: Sequence[float]):
        self._records.append(TraceRecord(exampleId, z, tuple(float(l) for l in losses)))


    def records(self) -> List[TraceRecord]:
        return self._records


    def __len__(self) -> int:
        return len(self._records)


    def chosen(self) -> List[int]:
        '''Return the selected latent classes in example order.'''
        return [r.z for r in self._records]


    def usage(self, K: int) -> List[int]:
        '''Return how often each latent class was selected.

        :param K: the number of classes
        :returns: a list of K counts, class 1 first'''
        h = [0] * K
        for r in self._records:
            h[r.z - 1] += 1
        return h


    def isConsistent(self) -> bool:
        '''Test that every selection is the first minimum of its losses.

        :returns: True if all selections are consistent'''
        return all(r.z == int(numpy.argmin(r.losses)) + 1 for r in self._records)


def selectLatent(params: ModelParams, x: TokenIds, y: TokenIds) -> Tuple[int, numpy.ndarray]:
    '''Select the latent class that best explains a target, with
    dropout off. Ties go to the lowest class.

    :param params: the parameters
    :param x: the source ids
    :param y: the target ids
    :returns: the class 1..K and the per-class losses'''
    losses = -latentLogProbs(params, x, y, OFF)
    return (int(numpy.argmin(losses)) + 1, losses)


def dropoutSeed(seed: int, step: int, i: int) -> numpy.random.SeedSequence:
    '''Return the dropout seed for the i'th example of a step.'''
    return numpy.random.SeedSequence([seed, step, i])


def hardEMStep(params: ModelParams, batch: Sequence[SequencePair], cfg: TrainConfig,
               stepIndex: int, optimiser: Adam) -> Tuple[ModelParams, HardEMTrace, float]:
    '''Perform one online hard-EM step.

    Each example's latent class is chosen as the one with least loss
    under dropout-off forward passes. The loss of the chosen class is
    then recomputed with dropout on, and its gradient accumulated.
    The mean gradient is clipped and applied as one optimiser update.

    :param params: the parameters, updated in place
    :param batch: the examples
    :param cfg: the training configuration
    :param stepIndex: the step number, used to seed dropout
    :param optimiser: the optimiser
    :returns: the parameters, the trace, and the mean selected loss per target token'''
    if len(batch) == 0:
        raise ValueError('Empty batch')

    trace = HardEMTrace()
    grads = params.zerosLike()
    total, tokens = 0.0, 0
    for (i, e) in enumerate(batch):
        (z, losses) = selectLatent(params, e.source, e.target)
        if not numpy.all(numpy.isfinite(losses)):
            raise NonFiniteLoss(e.id, float(losses[numpy.argmax(~numpy.isfinite(losses))]))
        trace.append(e.id, z, losses)

        (l, g) = lossAndGradients(params, e.source, e.target, z,
                                  DropoutMode.withSeed(dropoutSeed(cfg.seed, stepIndex, i)))
        if not numpy.isfinite(l):
            raise NonFiniteLoss(e.id, l)
        grads.add(g)
        total += losses[z - 1]
        tokens += max(len(e.target) - 1, 0)

    grads.scale(1.0 / len(batch))
    clipGradients(grads, cfg.clipNorm)
    optimiser.update(params, grads)
    return (params, trace, total / max(tokens, 1))


def validationNLL(params: ModelParams, pairs: Sequence[SequencePair]) -> float:
    '''Return the mean negative mixture log-likelihood per target token,
    with dropout off.

    :param params: the parameters
    :param pairs: the validation examples
    :returns: the NLL, or NaN for no examples'''
    if len(pairs) == 0:
        return float('nan')
    total = sum(-mixtureLogLikelihood(params, e.source, e.target) for e in pairs)
    tokens = sum(max(len(e.target) - 1, 0) for e in pairs)
    return total / max(tokens, 1)


# ---------- Metrics ----------

@dataclass(frozen=True)
class MetricsRecord:
    '''One interval's training metrics.'''

    step: int
    phase: str
    trainLoss: float
    validationNLL: float
    usage: Tuple[int, ...]

    def format(self) -> str:
        '''Return the record as a tab-separated line.'''
        return '\t'.join([str(self.step), self.phase, f'{self.trainLoss:.6f}',
                          f'{self.validationNLL:.6f}', ','.join(map(str, self.usage))])


    @staticmethod
    def parse(line: str) -> 'MetricsRecord':
        fs = line.rstrip('\n').split('\t')
        if len(fs) != 5:
            raise ValueError(f'Metrics record has {len(fs)} fields, not 5')
        return MetricsRecord(int(fs[0]), fs[1], float(fs[2]), float(fs[3]),
                             tuple(int(c) for c in fs[4].split(',')))


def readMetrics(path: str) -> List[MetricsRecord]:
    with open(path) as fh:
        return [MetricsRecord.parse(l) for l in fh if len(l.strip()) > 0]


def stepsToReach(metrics: Iterable[MetricsRecord], nll: float) -> Optional[int]:
    '''Return the first step at which validation NLL fell to a target.

    :param metrics: the metrics records
    :param nll: the target NLL
    :returns: the step, or None if the target was never reached'''
    for m in metrics:
        if m.validationNLL <= nll:
            return m.step
    return None


# ---------- Training loop ----------

class Trainer:
    '''A training phase.

    The trainer owns the mutable parameters and a fresh optimiser.
    Examples are visited in a seeded random permutation per epoch.
    Every interval it records the mean training loss, validation NLL
    and latent-class usage, appending them to the metrics log if there
    is an output directory, and it writes checkpoints named for the
    phase and step.

    :param params: the initial parameters (copied)
    :param cfg: the training configuration
    :param vocab: (optional) the vocabulary, needed for checkpoints
    :param outputDir: (optional) the directory for metrics and checkpoints'''

    def __init__(self, params: ModelParams, cfg: TrainConfig,
                 vocab: Optional[Vocabulary] = None, outputDir: Optional[str] = None):
        self._params = params.copy()
        self._config = cfg
        self._vocab = vocab
        self._outputDir = outputDir
        self._optimiser = Adam(inverseSqrtSchedule(cfg.peakRate, cfg.warmup))
        self._metrics: List[MetricsRecord] = []


    def params(self) -> ModelParams:
        return self._params


    def config(self) -> TrainConfig:
        return self._config


    def optimiser(self) -> Adam:
        return self._optimiser


    def metrics(self) -> List[MetricsRecord]:
        return self._metrics


    def metricsPath(self) -> Optional[str]:
        if self._outputDir is None:
            return None
        return os.path.join(self._outputDir, 'metrics.tsv')


    def checkpointPath(self, step: int) -> Optional[str]:
        if self._outputDir is None:
            return None
        return os.path.join(self._outputDir, f'{self._config.phase}-step{step}.ckpt')


    def _record(self, m: MetricsRecord):
        self._metrics.append(m)
        logger.info(f'{m.phase} step {m.step}: loss {m.trainLoss:.4f}, validation NLL {m.validationNLL:.4f}, usage {list(m.usage)}')
        p = self.metricsPath()
        if p is not None:
            with open(p, 'a') as fh:
                fh.write(m.format() + '\n')


    def _checkpoint(self, step: int):
        p = self.checkpointPath(step)
        if p is not None and self._vocab is not None:
            saveCheckpoint(p, self._params, self._vocab,
                           meta=dict(phase=self._config.phase, step=step))


    def batches(self, n: int) -> Iterable[List[int]]:
        '''Generate batches of example indices, epoch after epoch,
        each epoch a seeded permutation.

        :param n: the number of examples
        :returns: a generator of index lists'''
        cfg = self._config
        epoch = 0
        while True:
            perm = generatorFor(numpy.random.SeedSequence([cfg.seed, epoch])).permutation(n)
            for s in range(0, n, cfg.batchSize):
                yield [int(i) for i in perm[s:s + cfg.batchSize]]
            epoch += 1


    def train(self, data: Sequence[SequencePair],
              validation: Sequence[SequencePair] = (),
              progress: bool = False) -> ModelParams:
        '''Run the phase to completion.

        :param data: the training examples
        :param validation: (optional) the validation examples
        :param progress: (optional) show a progress bar (defaults to False)
        :returns: the final parameters'''
        if len(data) == 0:
            raise ValueError('No training data')
        cfg = self._config
        K = self._params.config().K
        losses: List[float] = []
        usage = [0] * K

        bs = self.batches(len(data))
        for step in tqdm(range(1, cfg.maxSteps + 1), desc=cfg.phase, disable=not progress):
            batch = [data[i] for i in next(bs)]
            (_, trace, l) = hardEMStep(self._params, batch, cfg, step, self._optimiser)
            losses.append(l)
            for (z, c) in enumerate(trace.usage(K)):
                usage[z] += c

            if step % cfg.interval == 0 or step == cfg.maxSteps:
                self._record(MetricsRecord(step, cfg.phase, float(numpy.mean(losses)),
                                           validationNLL(self._params, validation),
                                           tuple(usage)))
                losses = []
                usage = [0] * K
            if cfg.checkpointInterval > 0 and step % cfg.checkpointInterval == 0 and step < cfg.maxSteps:
                self._checkpoint(step)

        self._checkpoint(cfg.maxSteps)
        return self._params


def train(params: ModelParams, data: Sequence[SequencePair], cfg: TrainConfig,
          validation: Sequence[SequencePair] = (), vocab: Optional[Vocabulary] = None,
          outputDir: Optional[str] = None) -> Tuple[ModelParams, List[MetricsRecord]]:
    '''Train a model for one phase. The given parameters are left
    unchanged.

    :param params: the initial parameters
    :param data: the training examples
    :param cfg: the training configuration
    :param validation: (optional) the validation examples
    :param vocab: (optional) the vocabulary, needed for checkpoints
    :param outputDir: (optional) the directory for metrics and checkpoints
    :returns: the trained parameters and the metrics'''
    t = Trainer(params, cfg, vocab, outputDir)
    t.train(data, validation)
    return (t.params(), t.metrics())


# ---------- Synthetic multi-modal tasks ----------

#: The tokens of synthetic sequences.
SYNTHETIC_ALPHABET = list('abcdefgh')


def _shift(ts: TokenSequence) -> TokenSequence:
    n = len(SYNTHETIC_ALPHABET)
    return [SYNTHETIC_ALPHABET[(SYNTHETIC_ALPHABET.index(t) + 1) % n] for t in ts]


def _swapPairs(ts: TokenSequence) -> TokenSequence:
    us = list(ts)
    for i in range(0, len(us) - 1, 2):
        (us[i], us[i + 1]) = (us[i + 1], us[i])
    return us


#: The transformations generating the modes, mode 1 first.
SYNTHETIC_MODES: List[Callable[[TokenSequence], TokenSequence]] = [
    lambda ts: list(ts),
    lambda ts: list(reversed(ts)),
    lambda ts: list(ts[1:]) + list(ts[:1]),
    _swapPairs,
    _shift,
]


def syntheticTargets(source: TokenSequence, nModes: int) -> List[TokenSequence]:
    '''Return the targets a source maps to under the first nModes modes.'''
    return [m(source) for m in SYNTHETIC_MODES[:nModes]]


def _unambiguous(ts: TokenSequence) -> bool:
    return len(set(tuple(t) for t in syntheticTargets(ts, len(SYNTHETIC_MODES)))) == len(SYNTHETIC_MODES)


def syntheticSources(n: int, seed: Seed = None, minLength: int = 4,
                     maxLength: int = 7) -> List[TokenSequence]:
    '''Generate distinct random sources whose targets under all modes
    are distinct.

    :param n: the number of sources
    :param seed: (optional) the random seed
    :param minLength: (optional) the shortest source (defaults to 4)
    :param maxLength: (optional) the longest source (defaults to 7)
    :returns: the sources'''
    rng = generatorFor(seed)
    seen = set()
    ss = []
    while len(ss) < n:
        l = int(rng.integers(minLength, maxLength + 1))
        ts = [SYNTHETIC_ALPHABET[i] for i in rng.integers(0, len(SYNTHETIC_ALPHABET), size=l)]
        if tuple(ts) not in seen and _unambiguous(ts):
            seen.add(tuple(ts))
            ss.append(ts)
    return ss


def makeSyntheticMultimodal(nModes: int, nExamples: int, seed: Seed = None) -> List[TokenPair]:
    '''Generate a one-to-many string task. Each source is paired with
    its target under every mode in turn, so every source appears with
    all its targets when nExamples is a multiple of nModes.

    :param nModes: the number of modes, 2 to 5
    :param nExamples: the number of examples
    :param seed: (optional) the random seed
    :returns: the examples in a shuffled order'''
    if not (2 <= nModes <= len(SYNTHETIC_MODES)):
        raise ValueError(f'Need between 2 and {len(SYNTHETIC_MODES)} modes, not {nModes}')
    (sourceSeed, orderSeed) = spawnSeeds(seed, 2)
    sources = syntheticSources((nExamples + nModes - 1) // nModes, sourceSeed)
    rng = generatorFor(orderSeed)
    es = []
    for i in range(nExamples):
        (s, m) = divmod(i, nModes)
        es.append(TokenPair(f'syn-{i}', sources[s], SYNTHETIC_MODES[m](sources[s]), m + 1))
    return [es[i] for i in rng.permutation(nExamples)]


def syntheticModeOf(source: TokenSequence, target: TokenSequence) -> int:
    '''Return the mode that produced a target from a source.

    :param source: the source tokens
    :param target: the target tokens
    :returns: the mode 1..5, or 0 if no mode produces the target'''
    for (i, m) in enumerate(SYNTHETIC_MODES):
        if m(list(source)) == list(target):
            return i + 1
    return 0
