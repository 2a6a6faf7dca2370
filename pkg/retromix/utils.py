# Utility functions
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

import numpy
from typing import TypeVar, Iterable, Tuple, List, Sequence, Hashable
from retromix.types import Seed

A = TypeVar('A')
B = TypeVar('B')


# ---------- Iteration ----------

def zipboth(a: Iterable[A], b: Iterable[B]) -> Iterable[Tuple[A, B]]:
    '''Take two iterators and iterate the corresponding pairs.
    Unlike `zip' or `itertools.zip_longest' an exception is raised if the
    iterators are of uneven length.

    This is used wherever predictions are paired with gold answers, where
    a length mismatch means a file has been truncated or mis-aligned.

    :param a: the first iterator
    :param b: the second iterator
    :returns: an iterator over the pairs'''
    il, ir = iter(a), iter(b)
    while True:
        # get the next value from a
        try:
            l = next(il)
        except StopIteration:
            try:
                next(ir)
            except StopIteration:
                # both iterators are exhausted, finish
                return

            # if we get here, a finished before b
            raise ValueError('First iterator finished before the second')

        # get the next value from b
        try:
            r = next(ir)
        except StopIteration:
            # if we get here, b finished before a
            raise ValueError('Second iterator finished before the first')

        yield (l, r)


# ---------- Randomness ----------

def generatorFor(seed: Seed) -> numpy.random.Generator:
    '''Return a numpy random generator for the given seed.

    :param seed: an integer, a seed sequence, or None
    :returns: the generator'''
    return numpy.random.default_rng(seed)


def spawnSeeds(seed: Seed, n: int) -> List[numpy.random.SeedSequence]:
    '''Derive n independent child seeds from a parent seed.

    Child i depends only on the parent and i, so work split across
    workers draws the same numbers whatever the number of workers.

    :param seed: the parent seed
    :param n: the number of children
    :returns: a list of seed sequences'''
    if isinstance(seed, numpy.random.SeedSequence):
        ss = seed
    else:
        ss = numpy.random.SeedSequence(seed)
    return ss.spawn(n)


def seedInteger(seed: Seed) -> int:
    '''Collapse a seed into a single 32-bit integer, for places
    (like SMILES traversal) that want a plain integer.

    :param seed: the seed
    :returns: an integer'''
    return int(generatorFor(seed).integers(0, 2 ** 31 - 1))


# ---------- Numerics ----------

def logSumExp(vs: Sequence[float]) -> float:
    '''Compute log(sum(exp(vs))) stably by subtracting the maximum.

    A single value is returned unchanged (bit-for-bit).

    :param vs: the values
    :returns: the log of the sum of exponentials'''
    a = numpy.asarray(vs, dtype=numpy.float64)
    if a.size == 0:
        return -numpy.inf
    m = numpy.max(a)
    if not numpy.isfinite(m):
        return float(m)
    return float(m + numpy.log(numpy.sum(numpy.exp(a - m))))


def denseRank(keys: Sequence[Hashable]) -> List[int]:
    '''Rank a sequence of sortable keys densely, so equal keys get equal
    ranks and ranks run 0, 1, 2, ... with no gaps.

    :param keys: the keys
    :returns: the rank of each key'''
    order = {k: i for (i, k) in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]
