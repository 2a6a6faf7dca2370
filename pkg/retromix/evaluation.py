# Evaluating predictions
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
from typing import Sequence, List, Dict, Optional, Union
import numpy
from retromix.utils import zipboth
from retromix.moleculeset import MoleculeSet
from retromix.decode import Prediction, canonicalText
from retromix.classifier import ReactionClassifier, UNKNOWN


logger = logging.getLogger(__name__)


#: The ranks at which accuracy is reported.
ACCURACY_KS = (1, 2, 3, 4, 5, 10)


# Predictions may be given as prediction records or as plain texts
Predicted = Union[Prediction, str]


def _text(p: Predicted) -> str:
    return p.smiles if isinstance(p, Prediction) else p


# ---------- Accuracy ----------

def topKAccuracy(predictions: Sequence[Sequence[Predicted]], gold: Sequence[MoleculeSet],
                 ks: Sequence[int] = ACCURACY_KS) -> List[float]:
    '''Compute top-k accuracies. An example is correct at k if any of
    its first k predictions is the same molecule set as its gold
    reactants, whatever the order of the molecules.

    :param predictions: the ranked predictions of each example
    :param gold: the gold reactants of each example
    :param ks: (optional) the ranks (defaults to 1 to 5 and 10)
    :returns: the accuracy at each rank'''
    if len(predictions) != len(gold):
        raise ValueError(f'{len(predictions)} prediction lists for {len(gold)} examples')
    if len(gold) == 0:
        return [0.0 for _ in ks]

    # rank of the first correct prediction, or None
    firsts = []
    for (ps, g) in zipboth(predictions, gold):
        key = g.canonicalSmiles()
        firsts.append(next((r for (r, p) in enumerate(ps, start=1) if canonicalText(_text(p)) == key), None))
    return [sum(1 for f in firsts if f is not None and f <= k) / len(gold) for k in ks]


# ---------- Diversity ----------

def uniqueReactionCount(predictions: Sequence[Sequence[Predicted]], sources: Sequence[str],
                        clf: ReactionClassifier, k: int = 5) -> float:
    '''Compute the mean number of distinct reaction classes among each
    example's top k valid predictions. Predictions the classifier
    doesn't accept are skipped, and examples left with none are left
    out of the mean. Unclassifiable predictions add no class, but an
    example with any valid prediction counts at least one.

    :param predictions: the ranked predictions of each example
    :param sources: the product (source) of each example
    :param clf: the classifier
    :param k: (optional) the number of predictions considered (defaults to 5)
    :returns: the mean count, 0 if no example has valid predictions'''
    counts = []
    for (ps, s) in zipboth(predictions, sources):
        valid = [_text(p) for p in ps if clf.accepts(_text(p))][:k]
        if len(valid) > 0:
            cs = set(clf.classify(s, t) for t in valid) - set([UNKNOWN])
            counts.append(max(len(cs), 1))
    return float(numpy.mean(counts)) if len(counts) > 0 else 0.0


class LatentClassMatrix:
    '''How often each latent class generates each reaction class.

    Rows are latent classes and columns reaction classes 1 to C;
    unclassifiable predictions aren't counted. Rows are normalised to
    sum to 1, except for degenerate rows with no counted predictions,
    which are left as zeros and flagged.

    :param counts: the (K, C) array of counts'''

    def __init__(self, counts: numpy.ndarray):
        self._counts = numpy.asarray(counts, dtype=numpy.int64)
        totals = self._counts.sum(axis=1)
        self._degenerate = [bool(t == 0) for t in totals]
        self._frequencies = numpy.zeros(self._counts.shape)
        for (z, t) in enumerate(totals):
            if t > 0:
                self._frequencies[z] = self._counts[z] / t
            else:
                logger.warning(f'Latent class {z + 1} produced no classifiable predictions')


    def counts(self) -> numpy.ndarray:
        return self._counts


    def frequencies(self) -> numpy.ndarray:
        '''Return the row-normalised frequencies.

        :returns: a (K, C) array'''
        return self._frequencies


    def degenerateRows(self) -> List[bool]:
        '''Return a flag for each row, True where it has no counts.'''
        return self._degenerate


    def numberOfLatentClasses(self) -> int:
        return self._counts.shape[0]


    def numberOfReactionClasses(self) -> int:
        return self._counts.shape[1]


    def csv(self) -> str:
        '''Return the frequencies as comma-separated values, one row per
        latent class, with a header and a degeneracy flag column.

        :returns: the CSV text'''
        C = self.numberOfReactionClasses()
        lines = ['z,' + ','.join(f'class{c}' for c in range(1, C + 1)) + ',degenerate']
        for z in range(self.numberOfLatentClasses()):
            vs = ','.join(f'{v:.6f}' for v in self._frequencies[z])
            lines.append(f'{z + 1},{vs},{int(self._degenerate[z])}')
        return '\n'.join(lines) + '\n'


def latentClassMatrix(pools: Sequence[Dict[int, Sequence[Predicted]]], sources: Sequence[str],
                      clf: ReactionClassifier, K: int, top: int = 10) -> LatentClassMatrix:
    '''Count the reaction classes of each latent class's top
    predictions across a test set.

    :param pools: for each example, each latent class's ranked predictions
    :param sources: the product (source) of each example
    :param clf: the classifier
    :param K: the number of latent classes
    :param top: (optional) the predictions per latent class considered (defaults to 10)
    :returns: the matrix'''
    C = clf.numberOfClasses()
    counts = numpy.zeros((K, C), dtype=numpy.int64)
    for (zs, s) in zipboth(pools, sources):
        for (z, ps) in zs.items():
            for p in ps[:top]:
                c = clf.classify(s, _text(p))
                if c != UNKNOWN and c <= C:
                    counts[z - 1, c - 1] += 1
    return LatentClassMatrix(counts)


# ---------- Reports ----------

@dataclass
class EvalReport:
    '''The evaluation of a set of predictions.'''

    examples: int
    accuracies: Dict[int, float]
    invalidRate: float
    uniqueClasses: Optional[float] = None
    classifier: Optional[str] = None
    matrix: Optional[LatentClassMatrix] = None

    def text(self) -> str:
        '''Return the report for people to read.'''
        lines = [f'Examples: {self.examples}']
        for (k, a) in sorted(self.accuracies.items()):
            lines.append(f'Top-{k} accuracy: {100 * a:.1f}%')
        lines.append(f'Invalid predictions: {100 * self.invalidRate:.1f}%')
        if self.uniqueClasses is not None:
            lines.append(f'Unique reaction classes in top 5: {self.uniqueClasses:.2f} ({self.classifier})')
        if self.matrix is not None:
            lines.append('Latent class by reaction class:')
            for (z, row) in enumerate(self.matrix.frequencies(), start=1):
                flag = ' (degenerate)' if self.matrix.degenerateRows()[z - 1] else ''
                lines.append(f'  z={z}: ' + ' '.join(f'{v:.2f}' for v in row) + flag)
        return '\n'.join(lines) + '\n'


    def tsv(self) -> str:
        '''Return the report as tab-separated metric and value lines.'''
        lines = ['metric\tvalue', f'examples\t{self.examples}']
        for (k, a) in sorted(self.accuracies.items()):
            lines.append(f'top{k}\t{a:.6f}')
        lines.append(f'invalid\t{self.invalidRate:.6f}')
        if self.uniqueClasses is not None:
            lines.append(f'unique\t{self.uniqueClasses:.6f}')
        return '\n'.join(lines) + '\n'


def invalidRate(pools: Sequence[Dict[int, Sequence[str]]]) -> float:
    '''Return the fraction of hypotheses that aren't valid molecule sets.

    :param pools: for each example, each latent class's hypothesis texts
    :returns: the rate, 0 for no hypotheses'''
    total, invalid = 0, 0
    for zs in pools:
        for ts in zs.values():
            total += len(ts)
            invalid += sum(1 for t in ts if canonicalText(t) is None)
    return invalid / total if total > 0 else 0.0


def evaluate(predictions: Sequence[Sequence[Predicted]], gold: Sequence[MoleculeSet],
             sources: Sequence[str], pools: Optional[Sequence[Dict[int, Sequence[str]]]] = None,
             clf: Optional[ReactionClassifier] = None, K: Optional[int] = None,
             ks: Sequence[int] = ACCURACY_KS) -> EvalReport:
    '''Build the full evaluation report for a test set.

    :param predictions: the merged, ranked predictions of each example
    :param gold: the gold reactants of each example
    :param sources: the product of each example
    :param pools: (optional) each example's per-latent-class hypotheses
    :param clf: (optional) the classifier for diversity statistics
    :param K: (optional) the number of latent classes, for the matrix
    :param ks: (optional) the accuracy ranks
    :returns: the report'''
    accs = topKAccuracy(predictions, gold, ks)
    report = EvalReport(len(gold), dict(zip(ks, accs)),
                        invalidRate(pools) if pools is not None else 0.0)
    if clf is not None:
        report.uniqueClasses = uniqueReactionCount(predictions, sources, clf)
        report.classifier = clf.label()
        if pools is not None and K is not None:
            report.matrix = latentClassMatrix(pools, sources, clf, K)
    return report
