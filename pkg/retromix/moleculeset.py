# Sets of molecules
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

from typing import Iterable, Iterator, List, Optional
from retromix.types import Seed
from retromix.utils import generatorFor
from retromix.molecule import MolGraph, stripAtomMaps
from retromix.smiles import parseSmiles, writeSmiles, canonicalize


class MoleculeSet:
    '''A multiset of molecules, each a single connected graph.

    Molecule sets are the two sides of a reaction. Equality is
    multiset equality of canonical strings, so the order in which
    molecules are given never matters but repetitions do.

    :param molecules: (optional) the molecules'''

    def __init__(self, molecules: Iterable[MolGraph] = ()):
        ms = []
        for g in molecules:
            if g.isConnected():
                ms.append(g)
            else:
                ms.extend(g.componentGraphs())
        self._molecules: List[MolGraph] = ms
        self._canonical: Optional[List[str]] = None


    @staticmethod
    def fromSmiles(s: str, strict: bool = False) -> 'MoleculeSet':
        '''Build a molecule set from a dot-separated SMILES string.

        :param s: the string
        :param strict: (optional) raise on valence violations (defaults to False)
        :returns: the molecule set'''
        if len(s) == 0:
            return MoleculeSet()
        return MoleculeSet([parseSmiles(s, strict=strict)])


    # ---------- Access ----------

    def molecules(self) -> List[MolGraph]:
        '''Return the molecules.

        :returns: the list of graphs'''
        return list(self._molecules)


    def __len__(self) -> int:
        return len(self._molecules)


    def __iter__(self) -> Iterator[MolGraph]:
        return iter(self._molecules)


    def asGraph(self) -> MolGraph:
        '''Return the set as one disconnected graph.

        :returns: the union of the molecules'''
        return MolGraph.union(self._molecules)


    def hasAtomMaps(self) -> bool:
        '''Test whether any atom of any molecule carries an atom map.

        :returns: True if some atom is mapped'''
        return any(a.atomMap is not None for g in self._molecules for a in g.atoms())


    def withoutAtomMaps(self) -> 'MoleculeSet':
        '''Return a copy of the set with all atom maps removed.

        :returns: the unmapped set'''
        return MoleculeSet([stripAtomMaps(g) for g in self._molecules])


    # ---------- Strings ----------

    def canonicalStrings(self) -> List[str]:
        '''Return the sorted canonical strings of the molecules.

        :returns: the canonical strings'''
        if self._canonical is None:
            self._canonical = sorted(canonicalize(g) for g in self._molecules)
        return list(self._canonical)


    def canonicalSmiles(self) -> str:
        '''Return the canonical string of the whole set.

        :returns: the dot-separated canonical strings'''
        return '.'.join(self.canonicalStrings())


    def smiles(self, seed: Seed = None) -> str:
        '''Return a randomly-traversed string for the set, with the
        molecules in random order.

        :param seed: (optional) the random seed
        :returns: the dot-separated string'''
        rng = generatorFor(seed)
        ss = [writeSmiles(g, rng) for g in self._molecules]
        return '.'.join(ss[k] for k in rng.permutation(len(ss)))


    # ---------- Comparison ----------

    def __eq__(self, other) -> bool:
        if not isinstance(other, MoleculeSet):
            return NotImplemented
        return moleculeSetEqual(self, other)


    def __hash__(self) -> int:
        return hash(tuple(self.canonicalStrings()))


    def __repr__(self) -> str:
        return f'MoleculeSet({self.canonicalSmiles()})'


def moleculeSetEqual(a: MoleculeSet, b: MoleculeSet) -> bool:
    '''Test whether two molecule sets contain the same molecules
    with the same multiplicities.

    :param a: one set
    :param b: the other set
    :returns: True if the multisets of canonical strings are equal'''
    return a.canonicalStrings() == b.canonicalStrings()
