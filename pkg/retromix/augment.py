# Pre-training corpora, augmentation, and dataset splits
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
import multiprocessing
from collections import Counter
from typing import List, Dict, Tuple, Optional, Set, Sequence
from retromix.types import Seed
from retromix.utils import generatorFor, spawnSeeds
from retromix.errors import NoBreakableBond, InsufficientGroups
from retromix.molecule import MolGraph, SINGLE, stripAtomMaps
from retromix.moleculeset import MoleculeSet, moleculeSetEqual
from retromix.smiles import canonicalize, writeSmiles
from retromix.reaction import ReactionExample, RANDOM_PRETRAIN, TEMPLATE_PRETRAIN, SMILES_AUG
from retromix.template import Template, applyTemplateSets, extractEach

logger = logging.getLogger(__name__)


# Pre-training methods
RANDOM = 'random'
TEMPLATE = 'template'

# Split modes
RANDOM_SPLIT = 'random'
TEMPLATE_DISJOINT = 'template_disjoint'


# ---------- Random bond breaking ----------

def breakableBonds(g: MolGraph) -> List[Tuple[int, int]]:
    '''Return the acyclic single bonds of a molecule, in bond order.

    :param g: the molecule
    :returns: the bond keys'''
    rs = g.ringBondKeys()
    return [k for k in g.bondKeys() if g.bondOrder(*k) == SINGLE and k not in rs]


def randomBondBreak(g: MolGraph, seed: Seed = None, cap: int = 10) -> List[ReactionExample]:
    '''Generate examples by breaking randomly-chosen acyclic single
    bonds of a molecule, each example breaking a different bond and
    splitting the molecule into two reactants.

    :param g: the molecule
    :param seed: (optional) the random seed
    :param cap: (optional) the maximum number of examples (defaults to 10)
    :returns: the examples'''
    g = stripAtomMaps(g)
    bs = breakableBonds(g)
    if len(bs) == 0:
        raise NoBreakableBond(canonicalize(g))
    rng = generatorFor(seed)
    chosen = rng.choice(len(bs), size=min(cap, len(bs)), replace=False)

    product = canonicalize(g)
    rs = []
    for c in chosen:
        (i, j) = bs[int(c)]
        reactants = MoleculeSet([g.withoutBond(i, j)])
        rs.append(ReactionExample(f'break-{i}-{j}', product, reactants.canonicalSmiles(),
                                  source=RANDOM_PRETRAIN))
    return rs


# ---------- Pre-training corpora ----------

def templateRewrites(templates: Sequence[Template], g: MolGraph) -> List[Tuple[int, MoleculeSet]]:
    '''Return all the distinct rewrites of a molecule by a set of
    templates, each paired with the index of the template that made it.

    :param templates: the templates
    :param g: the molecule
    :returns: a list of (template index, reactants) pairs'''
    rws = []
    seen: Set[Tuple[str, ...]] = set()
    for (k, t) in enumerate(templates):
        for s in applyTemplateSets(t, g):
            key = tuple(s.canonicalStrings())
            if key not in seen:
                seen.add(key)
                rws.append((k, s))
    return rws


def _pretrainTarget(args) -> List[ReactionExample]:
    '''Generate the examples for one target. Top-level so it can be
    handed to worker processes.'''
    (index, g, method, templates, cap, seed) = args
    if method == RANDOM:
        try:
            pairs = [(r.productSmiles(), r.reactantsSmiles()) for r in randomBondBreak(g, seed, cap)]
        except NoBreakableBond:
            return []
        source = RANDOM_PRETRAIN
    else:
        rws = templateRewrites(templates, g)
        if len(rws) == 0:
            return []
        rng = generatorFor(seed)
        chosen = rng.choice(len(rws), size=min(cap, len(rws)), replace=False)
        product = canonicalize(stripAtomMaps(g))
        pairs = [(product, rws[int(c)][1].canonicalSmiles()) for c in chosen]
        source = TEMPLATE_PRETRAIN
    return [ReactionExample(f'{method}-{index}-{n}', p, rs, source=source)
            for (n, (p, rs)) in enumerate(pairs)]


def buildPretrainCorpus(targets: Sequence[MolGraph], method: str = RANDOM,
                        templates: Optional[Sequence[Template]] = None,
                        cap: int = 10, seed: Seed = None,
                        workers: int = 1) -> Tuple[List[ReactionExample], List[int]]:
    '''Build a pre-training corpus of up to cap examples per target.

    Each target gets its own child seed, and results are merged in target
    order, so the corpus is the same whatever the number of workers.

    :param targets: the target molecules
    :param method: (optional) RANDOM or TEMPLATE (defaults to RANDOM)
    :param templates: (optional) the templates, required for TEMPLATE
    :param cap: (optional) the maximum examples per target (defaults to 10)
    :param seed: (optional) the random seed
    :param workers: (optional) the number of worker processes (defaults to 1)
    :returns: the examples and the indices of the targets that yielded none'''
    if method not in (RANDOM, TEMPLATE):
        raise ValueError(f'Unknown pre-training method {method}')
    if method == TEMPLATE and templates is None:
        raise ValueError('Template pre-training needs templates')
    ts = list(templates) if templates is not None else []
    seeds = spawnSeeds(seed, len(targets))
    tasks = [(i, g, method, ts, cap, seeds[i]) for (i, g) in enumerate(targets)]

    if workers > 1 and len(tasks) > 1:
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_pretrainTarget, tasks)
    else:
        results = [_pretrainTarget(t) for t in tasks]

    corpus = []
    skipped = []
    for (i, rs) in enumerate(results):
        if len(rs) == 0:
            skipped.append(i)
        corpus.extend(rs)
    if len(skipped) > 0:
        logger.info(f'{len(skipped)} of {len(targets)} targets yielded no {method} examples')
    return (corpus, skipped)


# ---------- SMILES augmentation ----------

def smilesAugment(r: ReactionExample, n: int = 1, seed: Seed = None,
                  attempts: int = 10) -> List[ReactionExample]:
    '''Generate examples whose products are different traversals
    of the same molecule, with unchanged reactants.

    Each variant is drawn with a fresh seed, retrying until it differs
    from the original and from the variants already drawn. Molecules
    with too few distinct traversals give fewer than n variants.

    :param r: the example
    :param n: (optional) the number of variants (defaults to 1)
    :param seed: (optional) the random seed
    :param attempts: (optional) draws allowed per variant (defaults to 10)
    :returns: the variants'''
    g = stripAtomMaps(r.productGraph())
    rng = generatorFor(seed)
    seen = set([r.sourceSmiles()])
    vs = []
    for _ in range(n * attempts):
        if len(vs) == n:
            break
        s = writeSmiles(g, rng)
        if s not in seen:
            seen.add(s)
            vs.append(ReactionExample(f'{r.id()}-aug{len(vs)}', s, r.targetSmiles(),
                                      source=SMILES_AUG))
    return vs


# ---------- Splits ----------

class DatasetSplit:
    '''A train/test split of a reaction dataset.

    :param train: the training examples
    :param test: the test examples
    :param mode: how the split was made'''

    def __init__(self, train: List[ReactionExample], test: List[ReactionExample], mode: str):
        self._train = train
        self._test = test
        self._mode = mode


    def train(self) -> List[ReactionExample]:
        return self._train


    def test(self) -> List[ReactionExample]:
        return self._test


    def mode(self) -> str:
        return self._mode


    def __repr__(self) -> str:
        return f'DatasetSplit({self._mode}, {len(self._train)} train, {len(self._test)} test)'


def _testSize(n: int, testFraction: float) -> int:
    if not (0.0 <= testFraction <= 1.0):
        raise ValueError(f'Test fraction {testFraction} out of range')
    return int(round(testFraction * n))


def randomSplit(data: Sequence[ReactionExample], seed: Seed = None,
                testFraction: float = 0.1) -> DatasetSplit:
    '''Split a dataset uniformly at random. Both sides keep the
    dataset's order.

    :param data: the examples
    :param seed: (optional) the random seed
    :param testFraction: (optional) the fraction for test (defaults to 0.1)
    :returns: the split'''
    k = _testSize(len(data), testFraction)
    rng = generatorFor(seed)
    test = set(int(i) for i in rng.permutation(len(data))[:k])
    return DatasetSplit([r for (i, r) in enumerate(data) if i not in test],
                        [r for (i, r) in enumerate(data) if i in test],
                        RANDOM_SPLIT)


def solvingTemplates(templates: Sequence[Template], r: ReactionExample) -> Set[str]:
    '''Return the ids of the templates that, applied to an example's
    product, give back its gold reactants.

    :param templates: the templates
    :param r: the example
    :returns: the ids of the solving templates'''
    gold = r.gold()
    g = r.productGraph()
    return set(t.id() for t in templates
               if any(moleculeSetEqual(s, gold) for s in applyTemplateSets(t, g)))


def templateSolvable(templates: Sequence[Template],
                     examples: Sequence[ReactionExample]) -> List[ReactionExample]:
    '''Return the examples that some template solves.

    :param templates: the templates
    :param examples: the examples
    :returns: the solvable examples'''
    return [r for r in examples if len(solvingTemplates(templates, r)) > 0]


def templateSplit(data: Sequence[ReactionExample], seed: Seed = None,
                  testFraction: float = 0.1) -> DatasetSplit:
    '''Split a mapped dataset so that no test example can be solved by
    any template extracted from the training examples.

    Examples are grouped by template, and whole groups are moved to test
    in a seeded random order. A group is only accepted if every template
    that solves any of its members is already in test or is the group's
    own, so the templates left in train never solve a test example. The
    finished split is checked by applying every training template to
    every test product; any group found solvable is returned to train
    and barred. Examples whose template cannot be extracted stay in train.

    :param data: the mapped examples
    :param seed: (optional) the random seed
    :param testFraction: (optional) the fraction for test (defaults to 0.1)
    :returns: the split'''
    target = _testSize(len(data), testFraction)
    if target == 0:
        return DatasetSplit(list(data), [], TEMPLATE_DISJOINT)

    # group by template
    extracted = extractEach(data)
    byId: Dict[str, Template] = dict()
    groups: Dict[str, List[int]] = dict()
    for (i, t) in enumerate(extracted):
        if t is not None:
            byId.setdefault(t.id(), t)
            groups.setdefault(t.id(), []).append(i)
    templates = [byId[k] for k in sorted(byId.keys())]
    solvers = [solvingTemplates(templates, r) if extracted[i] is not None else set()
               for (i, r) in enumerate(data)]

    rng = generatorFor(seed)
    ids = sorted(groups.keys())
    order = [ids[int(k)] for k in rng.permutation(len(ids))]
    barred: Set[str] = set()

    while True:
        # greedy fill
        chosen: Set[str] = set()
        size = 0
        progress = True
        while progress and size < target:
            progress = False
            for gid in order:
                if gid in chosen or gid in barred:
                    continue
                allowed = chosen | set([gid])
                if all(solvers[i] <= allowed for i in groups[gid]):
                    chosen.add(gid)
                    size += len(groups[gid])
                    progress = True
                    if size >= target:
                        break
        if size < target:
            raise InsufficientGroups(f'Only {size} of {target} test examples can be placed in template-disjoint groups')

        # check against the templates actually left in train
        trainTemplates = [byId[k] for k in ids if k not in chosen]
        bad = [i for gid in sorted(chosen) for i in groups[gid]
               if len(solvingTemplates(trainTemplates, data[i])) > 0]
        if len(bad) == 0:
            break
        badGroups = set(extracted[i].id() for i in bad)
        logger.warning(f'{len(bad)} test examples solvable from train, barring {len(badGroups)} groups')
        barred |= badGroups

    inTest = set(i for gid in chosen for i in groups[gid])
    return DatasetSplit([r for (i, r) in enumerate(data) if i not in inTest],
                        [r for (i, r) in enumerate(data) if i in inTest],
                        TEMPLATE_DISJOINT)


def rareSubset(data: Sequence[ReactionExample], threshold: float = 10,
               corpus: Optional[Sequence[ReactionExample]] = None) -> List[ReactionExample]:
    '''Select the examples whose template is rare, occurring at most
    threshold times over a corpus. Examples whose template cannot be
    extracted are left out.

    :param data: the examples to select from
    :param threshold: (optional) the maximum occurrence count (defaults to 10)
    :param corpus: (optional) the corpus to count over (defaults to data)
    :returns: the rare examples'''
    ids = [t.id() if t is not None else None for t in extractEach(data)]
    if corpus is None:
        counts = Counter(i for i in ids if i is not None)
    else:
        counts = Counter(t.id() for t in extractEach(corpus) if t is not None)
    return [r for (r, i) in zip(data, ids) if i is not None and counts[i] <= threshold]
