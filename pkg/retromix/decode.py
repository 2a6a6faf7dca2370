# Beam search and prediction merging
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
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Callable, Optional, Sequence, Dict, Iterable, Union, TextIO
import numpy
from retromix.types import TokenIds
from retromix.errors import DataFileError, ReactionFormatError
from retromix.molecule import MolGraph
from retromix.moleculeset import MoleculeSet
from retromix.smiles import detokenize
from retromix.vocabulary import Vocabulary, PAD, BOS, EOS
from retromix.model import ModelParams, encode, decodeLogProbs
from retromix.template import Template, EMBEDDING_CAP, applyTemplateSets


logger = logging.getLogger(__name__)


# A step function maps a prefix (starting with the begin sentinel) to
# the log-probabilities of the next token
StepFunction = Callable[[Tuple[int, ...]], numpy.ndarray]


# ---------- Configuration ----------

@dataclass(frozen=True)
class BeamConfig:
    '''Beam search settings.

    :param beamWidth: (optional) the beam width (defaults to 10)
    :param maxLength: (optional) the most tokens decoded, end sentinel
                      included (defaults to 200)
    :param alpha: (optional) the length-normalisation exponent, 0 for
                  raw log-probabilities (defaults to 0)'''

    beamWidth: int = 10
    maxLength: int = 200
    alpha: float = 0.0

    def __post_init__(self):
        if self.beamWidth < 1 or self.maxLength < 1:
            raise ValueError('Beam width and maximum length must be positive')
        if self.alpha < 0:
            raise ValueError(f'Negative length normalisation {self.alpha}')


@dataclass(frozen=True)
class Hypothesis:
    '''A finished decoding: its token ids without sentinels, its
    log-probability (end sentinel included), the latent class that
    produced it, and its length-normalised score.'''

    ids: Tuple[int, ...]
    logProb: float
    z: int
    score: float


def normalisedScore(logProb: float, n: int, alpha: float) -> float:
    '''Return logProb / n ** alpha, where n counts the end sentinel.'''
    return logProb if alpha == 0 else logProb / (n ** alpha)


# ---------- Beam search ----------

def beamSearchSteps(step: StepFunction, beamWidth: int, maxLength: int,
                    alpha: float = 0.0, z: int = 1) -> List[Hypothesis]:
    '''Beam search over an arbitrary next-token model.

    At each step every live beam is expanded by every token with finite
    log-probability, and the best beamWidth expansions are kept. Ties are
    broken by beam then token, lowest first. Expansions that emit the end
    sentinel are set aside as finished and leave the beam. Search stops
    when beamWidth hypotheses have finished, no beams remain, or
    maxLength tokens have been decoded.

    :param step: the step function
    :param beamWidth: the beam width
    :param maxLength: the most tokens to decode
    :param alpha: (optional) the length-normalisation exponent (defaults to 0)
    :param z: (optional) the latent class to record (defaults to 1)
    :returns: at most beamWidth finished hypotheses, best score first'''
    beams: List[Tuple[Tuple[int, ...], float]] = [((BOS,), 0.0)]
    finished: List[Hypothesis] = []
    for _ in range(maxLength):
        candidates = []
        for (b, (prefix, lp)) in enumerate(beams):
            logp = step(prefix)
            for t in numpy.flatnonzero(numpy.isfinite(logp)):
                candidates.append((lp + float(logp[t]), b, int(t)))
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

        live = []
        for (lp, b, t) in candidates[:beamWidth]:
            prefix = beams[b][0]
            if t == EOS:
                ids = prefix[1:]
                finished.append(Hypothesis(ids, lp, z, normalisedScore(lp, len(ids) + 1, alpha)))
            else:
                live.append((prefix + (t,), lp))
        beams = live
        if len(finished) >= beamWidth or len(beams) == 0:
            break

    # stable sort keeps finishing order among equal scores
    finished.sort(key=lambda h: -h.score)
    return finished[:beamWidth]


def _modelStep(params: ModelParams, memory: numpy.ndarray, z: int) -> StepFunction:
    def step(prefix: Tuple[int, ...]) -> numpy.ndarray:
        logp = decodeLogProbs(params, memory, list(prefix), z)[-1].copy()
        logp[PAD] = -numpy.inf
        logp[BOS] = -numpy.inf
        return logp
    return step


def beamSearch(params: ModelParams, x: TokenIds, z: int,
               bc: BeamConfig = BeamConfig()) -> List[Hypothesis]:
    '''Decode a source with one latent class by beam search. Empty
    hypotheses are dropped.

    :param params: the parameters
    :param x: the source ids
    :param z: the latent class 1..K
    :param bc: (optional) the beam settings
    :returns: at most beamWidth hypotheses, best score first'''
    memory = encode(params, x)
    maxLength = min(bc.maxLength, params.config().maxLen - 1)
    hs = beamSearchSteps(_modelStep(params, memory, z), bc.beamWidth, maxLength, bc.alpha, z)
    return [h for h in hs if len(h.ids) > 0]


def greedyDecode(params: ModelParams, x: TokenIds, z: int,
                 maxLength: int = 200) -> Optional[Hypothesis]:
    '''Decode a source with one latent class by always taking the most
    likely next token (the lowest id among equals).

    :param params: the parameters
    :param x: the source ids
    :param z: the latent class 1..K
    :param maxLength: (optional) the most tokens to decode (defaults to 200)
    :returns: the hypothesis, or None if the end was not reached'''
    step = _modelStep(params, encode(params, x), z)
    prefix: Tuple[int, ...] = (BOS,)
    lp = 0.0
    for _ in range(min(maxLength, params.config().maxLen - 1)):
        logp = step(prefix)
        t = int(numpy.argmax(logp))
        lp += float(logp[t])
        if t == EOS:
            return Hypothesis(prefix[1:], lp, z, lp)
        prefix = prefix + (t,)
    return None


# ---------- Predictions ----------

@dataclass(frozen=True)
class Prediction:
    '''A predicted reactant set: its canonical string, score, and the
    latent class that produced it (0 for non-model predictors).'''

    smiles: str
    score: float
    z: int

    def reactants(self) -> MoleculeSet:
        return MoleculeSet.fromSmiles(self.smiles)


def canonicalText(text: str) -> Optional[str]:
    '''Return the canonical form of a hypothesis' text, or None if it
    doesn't describe a valid non-empty molecule set.

    :param text: the SMILES text
    :returns: the canonical string or None'''
    try:
        ms = MoleculeSet.fromSmiles(text)
        if len(ms) == 0:
            return None
        return ms.canonicalSmiles()
    except ValueError:
        return None


def mergePredictions(pool: Iterable[Tuple[str, float, int]],
                     k: int) -> Tuple[List[Prediction], int]:
    '''Merge scored texts from several latent classes into a ranked
    list of distinct predictions.

    Invalid texts are dropped and counted. Valid ones are ranked by
    score, ties going to the lower latent class and then to the
    canonical string, and only the first of each canonical set is kept.

    :param pool: (text, score, z) triples
    :param k: the number of predictions wanted
    :returns: the top k predictions and the number of invalid texts'''
    valid = []
    invalid = 0
    for (text, score, z) in pool:
        c = canonicalText(text)
        if c is None:
            invalid += 1
        else:
            valid.append(Prediction(c, score, z))
    valid.sort(key=lambda p: (-p.score, p.z, p.smiles))

    ps = []
    seen = set()
    for p in valid:
        if p.smiles not in seen:
            seen.add(p.smiles)
            ps.append(p)
            if len(ps) == k:
                break
    return (ps, invalid)


@dataclass
class TopK:
    '''The result of predicting one source: the merged predictions,
    the per-class hypothesis texts they came from, and the number of
    texts that were invalid.'''

    predictions: List[Prediction]
    pools: Dict[int, List[Tuple[str, float]]]
    invalid: int

    def hypotheses(self) -> int:
        return sum(len(p) for p in self.pools.values())


def perLatentWidth(k: int) -> int:
    '''Return the beam width used per latent class for top-k prediction.'''
    return max(k, 10)


def predictTopK(params: ModelParams, vocab: Vocabulary, x: TokenIds, k: int,
                bc: BeamConfig = BeamConfig()) -> TopK:
    '''Predict the top k reactant sets for a source, beam searching
    every latent class and merging the results by score.

    :param params: the parameters
    :param vocab: the vocabulary
    :param x: the source ids
    :param k: the number of predictions
    :param bc: (optional) the beam settings, whose width is raised to max(k, 10)
    :returns: the predictions'''
    if k < 1:
        raise ValueError(f'Asked for {k} predictions')
    width = BeamConfig(max(bc.beamWidth, perLatentWidth(k)), bc.maxLength, bc.alpha)
    pools = dict()
    for z in range(1, params.config().K + 1):
        pools[z] = [(detokenize(vocab.decode(list(h.ids))), h.score)
                    for h in beamSearch(params, x, z, width)]
    (ps, invalid) = mergePredictions([(t, s, z) for (z, p) in pools.items() for (t, s) in p], k)
    return TopK(ps, pools, invalid)


def pairwiseDistinctness(texts: Sequence[str]) -> float:
    '''Return the fraction of pairs in a hypothesis list that describe
    different molecule sets. Invalid texts are compared as written.

    :param texts: the hypothesis texts
    :returns: the fraction, 1 for fewer than two hypotheses'''
    keys = [canonicalText(t) or t for t in texts]
    n = len(keys)
    if n < 2:
        return 1.0
    distinct = sum(1 for i in range(n) for j in range(i + 1, n) if keys[i] != keys[j])
    return distinct / (n * (n - 1) / 2)


def templateTopK(templates: Sequence[Template], product: MolGraph, k: int,
                 cap: int = EMBEDDING_CAP) -> List[Prediction]:
    '''Predict reactants by applying templates, most frequent first.
    Each prediction is scored by the log relative frequency of the
    first template producing it.

    :param templates: the templates
    :param product: the product
    :param k: the number of predictions
    :param cap: (optional) the embedding cap per template
    :returns: up to k predictions'''
    total = sum(t.count() for t in templates)
    ps = []
    seen = set()
    for t in sorted(templates, key=lambda t: (-t.count(), t.id())):
        for s in applyTemplateSets(t, product, cap):
            try:
                c = s.canonicalSmiles()
            except ValueError:
                continue
            if c not in seen:
                seen.add(c)
                ps.append(Prediction(c, float(numpy.log(t.count() / total)), 0))
                if len(ps) == k:
                    return ps
    return ps


# ---------- Prediction files ----------

def formatPredictions(id: str, ps: Sequence[Prediction]) -> List[str]:
    '''Format one source's predictions as id, rank, latent class,
    score and canonical reactants, tab-separated, ranks from 1.'''
    return [f'{id}\t{r}\t{p.z}\t{p.score:.6f}\t{p.smiles}' for (r, p) in enumerate(ps, start=1)]


def writePredictions(fh: TextIO, id: str, ps: Sequence[Prediction]):
    for l in formatPredictions(id, ps):
        fh.write(l + '\n')


def readPredictions(path: Union[str, Path]) -> Dict[str, List[Prediction]]:
    '''Read a prediction file.

    :param path: the file
    :returns: a map from ids to their predictions in rank order'''
    ranked: Dict[str, List[Tuple[int, Prediction]]] = dict()
    with open(path, 'r', encoding='utf-8') as fh:
        for (n, line) in enumerate(fh, start=1):
            line = line.rstrip('\n')
            if len(line.strip()) == 0 or line.startswith('#'):
                continue
            fs = line.split('\t')
            try:
                if len(fs) != 5:
                    raise ReactionFormatError(f'Expected 5 fields, got {len(fs)}')
                ranked.setdefault(fs[0], []).append((int(fs[1]), Prediction(fs[4], float(fs[3]), int(fs[2]))))
            except ValueError as e:
                raise DataFileError(path, n, e)
    return {id: [p for (_, p) in sorted(rs, key=lambda rp: rp[0])] for (id, rs) in ranked.items()}


def writePools(fh: TextIO, id: str, r: TopK):
    '''Write the per-class hypotheses behind one source's predictions
    as id, latent class, rank within the class, score and text,
    tab-separated. Invalid texts are kept, so the file records the
    invalid rate.'''
    for (z, pool) in sorted(r.pools.items()):
        for (rank, (text, score)) in enumerate(pool, start=1):
            fh.write(f'{id}\t{z}\t{rank}\t{score:.6f}\t{text}\n')


def readPools(path: Union[str, Path]) -> Dict[str, Dict[int, List[str]]]:
    '''Read a hypothesis pool file.

    :param path: the file
    :returns: a map from ids to maps from latent classes to texts in rank order'''
    ranked: Dict[str, Dict[int, List[Tuple[int, str]]]] = dict()
    with open(path, 'r', encoding='utf-8') as fh:
        for (n, line) in enumerate(fh, start=1):
            line = line.rstrip('\n')
            if len(line.strip()) == 0 or line.startswith('#'):
                continue
            fs = line.split('\t')
            try:
                if len(fs) != 5:
                    raise ReactionFormatError(f'Expected 5 fields, got {len(fs)}')
                ranked.setdefault(fs[0], dict()).setdefault(int(fs[1]), []).append((int(fs[2]), fs[4]))
            except ValueError as e:
                raise DataFileError(path, n, e)
    return {id: {z: [t for (_, t) in sorted(ts)] for (z, ts) in zs.items()}
            for (id, zs) in ranked.items()}
