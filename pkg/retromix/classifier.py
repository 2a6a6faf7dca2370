# Reaction classifiers
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
from collections import Counter
from typing import Callable, Dict, Iterable, List, Optional, Tuple
from retromix.reaction import ReactionExample
from retromix.smiles import parseSmiles
from retromix.template import Template, EMBEDDING_CAP, extractEach, applyTemplateSets, pairSignature
from retromix.decode import canonicalText
from retromix.training import syntheticModeOf, SYNTHETIC_MODES, SYNTHETIC_ALPHABET


logger = logging.getLogger(__name__)


#: The class given to reactions a classifier can't place.
UNKNOWN = 0


# ---------- Abstract classifier ----------

class ReactionClassifier:
    '''A classifier assigning reaction classes to (source, target) pairs:
    a product and its reactants, or a synthetic source and target.

    Classes run from 1 to :meth:`numberOfClasses`, with 0 for
    reactions that can't be classified.'''

    def label(self) -> str:
        '''Return a description of where the classifier's answers
        come from.

        This method must be overridden by sub-classes.

        :returns: the label'''
        raise NotImplementedError('label')


    def numberOfClasses(self) -> int:
        '''Return the number of (known) classes.

        This method must be overridden by sub-classes.

        :returns: the number of classes'''
        raise NotImplementedError('numberOfClasses')


    def accepts(self, target: str) -> bool:
        '''Test whether a target is a valid prediction for this classifier.
        By default targets must be valid molecule sets.

        :param target: the reactants or target string
        :returns: True if the target is valid'''
        return canonicalText(target) is not None


    def classify(self, source: str, target: str) -> int:
        '''Classify a reaction.

        This method must be overridden by sub-classes.

        :param source: the product or source string
        :param target: the reactants or target string
        :returns: the class, or 0 if unknown'''
        raise NotImplementedError('classify')


# ---------- Standard classifiers ----------

class FunctionClassifier(ReactionClassifier):
    '''A classifier wrapping a function.

    :param f: the function from source and target to class
    :param label: the label
    :param classes: the number of classes
    :param accepts: (optional) the validity test for targets (defaults to
                    valid molecule sets)'''

    def __init__(self, f: Callable[[str, str], int], label: str, classes: int,
                 accepts: Optional[Callable[[str], bool]] = None):
        self._f = f
        self._label = label
        self._classes = classes
        self._accepts = accepts


    def label(self) -> str:
        return self._label


    def numberOfClasses(self) -> int:
        return self._classes


    def accepts(self, target: str) -> bool:
        if self._accepts is None:
            return super().accepts(target)
        return self._accepts(target)


    def classify(self, source: str, target: str) -> int:
        return self._f(source, target)


def syntheticClassifier() -> ReactionClassifier:
    '''Return the classifier that labels synthetic examples with the
    mode that generated them. Synthetic tokens are single characters,
    so strings are split character by character.

    :returns: the classifier'''
    return FunctionClassifier(lambda s, t: syntheticModeOf(list(s), list(t)),
                              'synthetic mode oracle', len(SYNTHETIC_MODES),
                              lambda t: len(t) > 0 and all(c in SYNTHETIC_ALPHABET for c in t))


def _majority(c: Counter) -> int:
    # most frequent class, lowest class on ties
    return max(c.items(), key=lambda kv: (kv[1], -kv[0]))[0]


class TemplateProxyClassifier(ReactionClassifier):
    '''A classifier using the templates of labelled training reactions.

    A reaction identical to a training reaction gets that reaction's
    (majority) class. Otherwise the stored templates are applied to the
    product, most frequent first, and the first whose rewrite gives the
    reactants decides with the majority class of training reactions
    with that template. Failing that, a reaction whose reactants hold
    all the product's atoms is given the majority class of training
    reactions with the same changed bonds, as read off the unmapped
    pair by :func:`pairSignature`. Anything else is class 0.

    :param data: labelled, atom-mapped training reactions
    :param cap: (optional) the embedding cap when applying templates'''

    def __init__(self, data: Iterable[ReactionExample], cap: int = EMBEDDING_CAP):
        self._cap = cap
        self._exact: Dict[Tuple[str, str], Counter] = dict()
        self._byId: Dict[str, Counter] = dict()
        self._bySignature: Dict[Tuple[str, ...], Counter] = dict()
        templates: Dict[str, Template] = dict()
        counts: Counter = Counter()
        classes = set()

        rs = [r for r in data if r.reactionClass() is not None]
        for (r, t) in zip(rs, extractEach(rs)):
            c = r.reactionClass()
            classes.add(c)
            key = (r.product().withoutAtomMaps().canonicalSmiles(), r.gold().canonicalSmiles())
            self._exact.setdefault(key, Counter())[c] += 1
            if t is not None:
                templates[t.id()] = t
                counts[t.id()] += 1
                self._byId.setdefault(t.id(), Counter())[c] += 1
                self._bySignature.setdefault(t.changedBondSignature(), Counter())[c] += 1

        self._templates: List[Template] = sorted((templates[i].withCount(n) for (i, n) in counts.items()),
                                                 key=lambda t: (-t.count(), t.id()))
        self._classes = max(classes, default=0)
        self._rewrites: Dict[str, Dict[str, int]] = dict()
        logger.info(f'Template classifier holds {len(self._templates)} templates over {len(classes)} classes')


    def label(self) -> str:
        return 'template proxy'


    def numberOfClasses(self) -> int:
        return self._classes


    def templates(self) -> List[Template]:
        return self._templates


    def classOfTemplate(self, t: Template) -> int:
        '''Return the majority class of the training reactions with a
        template, or failing that with its changed bonds.

        :param t: the template
        :returns: the class, or 0'''
        if t.id() in self._byId:
            return _majority(self._byId[t.id()])
        return self.classOfSignature(t.changedBondSignature())


    def classOfSignature(self, sig: Tuple[str, ...]) -> int:
        '''Return the majority class of the training reactions with
        a changed-bond signature.

        :param sig: the signature
        :returns: the class, or 0'''
        c = self._bySignature.get(sig)
        return UNKNOWN if (c is None or len(sig) == 0) else _majority(c)


    def _signatureClass(self, product: str, reactants: str) -> int:
        P = parseSmiles(product)
        R = parseSmiles(reactants)
        have = Counter(a.element for a in R.atoms())
        need = Counter(a.element for a in P.atoms())
        if len(need - have) > 0:
            return UNKNOWN
        return self.classOfSignature(pairSignature(P, R))


    def _rewritesOf(self, product: str) -> Dict[str, int]:
        # all reactant sets the templates produce from a product, with
        # the class of the first (most frequent) template giving each
        if product not in self._rewrites:
            rs: Dict[str, int] = dict()
            g = parseSmiles(product)
            for t in self._templates:
                for s in applyTemplateSets(t, g, self._cap):
                    try:
                        rs.setdefault(s.canonicalSmiles(), self.classOfTemplate(t))
                    except ValueError:
                        continue
            self._rewrites[product] = rs
        return self._rewrites[product]


    def classify(self, source: str, target: str) -> int:
        p = canonicalText(source)
        r = canonicalText(target)
        if p is None or r is None:
            return UNKNOWN
        if (p, r) in self._exact:
            return _majority(self._exact[(p, r)])
        c = self._rewritesOf(p).get(r, UNKNOWN)
        return c if c != UNKNOWN else self._signatureClass(p, r)


def templateProxyClassifier(data: Iterable[ReactionExample],
                            cap: int = EMBEDDING_CAP) -> ReactionClassifier:
    '''Build a template proxy classifier from labelled training data.

    :param data: the training reactions
    :param cap: (optional) the embedding cap
    :returns: the classifier'''
    return TemplateProxyClassifier(data, cap)
