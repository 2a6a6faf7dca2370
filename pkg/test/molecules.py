# Seeded random molecules for property tests
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
from retromix import *


# Elements drawn for random molecules, carbon weighted up
ELEMENTS = ['C', 'C', 'C', 'C', 'N', 'O', 'S', 'Cl']

# Bonding capacity, so every atom keeps its default valence
CAPACITY = {'C': 4, 'N': 3, 'O': 2, 'S': 2, 'Cl': 1}


def randomFragment(rng: numpy.random.Generator, maxAtoms: int = 12, maxRings: int = 2) -> MolGraph:
    '''Build a random connected molecule: a random tree of atoms
    joined by single, double or triple bonds, closed by up to
    maxRings extra single bonds.

    :param rng: the random generator
    :param maxAtoms: (optional) the largest number of atoms (defaults to 12)
    :param maxRings: (optional) the most ring closures (defaults to 2)
    :returns: the molecule'''
    n = int(rng.integers(1, maxAtoms + 1))
    elements = []
    free = []
    bonds = dict()
    for i in range(n):
        ends = [j for j in range(i) if free[j] > 0]
        if i > 0 and len(ends) == 0:
            break
        e = ELEMENTS[int(rng.integers(len(ELEMENTS)))]
        elements.append(e)
        free.append(CAPACITY[e])
        if i > 0:
            j = ends[int(rng.integers(len(ends)))]
            most = min(free[i], free[j], 3)
            o = int(rng.integers(2, most + 1)) if most > 1 and rng.random() < 0.25 else 1
            bonds[(j, i)] = o
            free[i] -= o
            free[j] -= o

    for _ in range(int(rng.integers(0, maxRings + 1))):
        ps = [(i, j) for i in range(len(elements)) for j in range(i + 1, len(elements))
              if free[i] > 0 and free[j] > 0 and (i, j) not in bonds]
        if len(ps) == 0:
            break
        (i, j) = ps[int(rng.integers(len(ps)))]
        bonds[(i, j)] = 1
        free[i] -= 1
        free[j] -= 1

    return MolGraph([Atom(e) for e in elements], [(i, j, o) for ((i, j), o) in bonds.items()])


def randomMolecules(n: int, seed: int = 0):
    '''Generate seeded random molecules, about one in ten of them
    having a second component.

    :param n: the number of molecules
    :param seed: (optional) the random seed (defaults to 0)
    :returns: a generator of molecules'''
    rng = numpy.random.default_rng(seed)
    for _ in range(n):
        g = randomFragment(rng)
        if rng.random() < 0.1:
            g = MolGraph.union([g, randomFragment(rng, maxAtoms=4, maxRings=0)])
        yield g
