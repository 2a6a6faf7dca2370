# Reaction examples and reaction record files
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
from typing import Optional, Iterable, Iterator, Union, Set, TextIO
from pathlib import Path
from retromix.types import TokenSequence
from retromix.errors import ReactionFormatError, DataFileError
from retromix.molecule import MolGraph
from retromix.moleculeset import MoleculeSet
from retromix.smiles import tokenize

logger = logging.getLogger(__name__)


# Example sources
DATASET = 'dataset'                      #: Read from a reaction dataset.
RANDOM_PRETRAIN = 'random_pretrain'      #: Generated by random bond breaking.
TEMPLATE_PRETRAIN = 'template_pretrain'  #: Generated by template application.
SMILES_AUG = 'smiles_aug'                #: A re-traversal of another example's product.
SOURCES = frozenset([DATASET, RANDOM_PRETRAIN, TEMPLATE_PRETRAIN, SMILES_AUG])


class ReactionExample:
    '''A single-step retrosynthesis example: a product molecule and the
    reactants that make it.

    The product and reactants are held both as the strings they were
    given as and as parsed molecule sets. If the strings carry atom maps
    the example can have its template extracted; the model only ever
    sees the unmapped forms.

    :param id: the example id
    :param product: the product SMILES (exactly one molecule)
    :param reactants: the reactants SMILES (one or more molecules)
    :param reactionClass: (optional) the reaction class 1..10
    :param source: (optional) where the example came from (defaults to DATASET)'''

    def __init__(self, id: str, product: str, reactants: str,
                 reactionClass: Optional[int] = None,
                 source: str = DATASET):
        if source not in SOURCES:
            raise ReactionFormatError(f'Unknown example source {source}')
        if reactionClass is not None and reactionClass < 1:
            raise ReactionFormatError(f'Reaction class {reactionClass} out of range')
        self._id = id
        self._productSmiles = product
        self._reactantsSmiles = reactants
        self._reactionClass = reactionClass
        self._source = source

        self._product = MoleculeSet.fromSmiles(product)
        if len(self._product) != 1:
            raise ReactionFormatError(f'Product of {id} has {len(self._product)} molecules, not one')
        self._reactants = MoleculeSet.fromSmiles(reactants)
        if len(self._reactants) == 0:
            raise ReactionFormatError(f'No reactants in {id}')
        self._mapped = self._product.hasAtomMaps() or self._reactants.hasAtomMaps()


    # ---------- Access ----------

    def id(self) -> str:
        return self._id


    def productSmiles(self) -> str:
        '''Return the product string as given.

        :returns: the string'''
        return self._productSmiles


    def reactantsSmiles(self) -> str:
        '''Return the reactants string as given.

        :returns: the string'''
        return self._reactantsSmiles


    def product(self) -> MoleculeSet:
        '''Return the product as a one-molecule set.

        :returns: the product'''
        return self._product


    def productGraph(self) -> MolGraph:
        '''Return the product molecule.

        :returns: the graph'''
        return self._product.molecules()[0]


    def reactants(self) -> MoleculeSet:
        '''Return the reactants.

        :returns: the reactants'''
        return self._reactants


    def reactionClass(self) -> Optional[int]:
        return self._reactionClass


    def source(self) -> str:
        return self._source


    def hasAtomMaps(self) -> bool:
        '''Test whether the example carries atom maps.

        :returns: True if any atom on either side is mapped'''
        return self._mapped


    # ---------- Model views ----------

    def gold(self) -> MoleculeSet:
        '''Return the unmapped reactants, for comparison with predictions.

        :returns: the reactant set'''
        return self._reactants.withoutAtomMaps() if self._mapped else self._reactants


    def sourceSmiles(self) -> str:
        '''Return the product string the model reads. Mapped products
        are unmapped and canonicalised; unmapped ones are kept as given,
        so that augmented traversals survive.

        :returns: the string'''
        if self._mapped:
            return self._product.withoutAtomMaps().canonicalSmiles()
        return self._productSmiles


    def targetSmiles(self) -> str:
        '''Return the reactants string the model writes, unmapped
        and canonicalised if the example is mapped.

        :returns: the string'''
        if self._mapped:
            return self.gold().canonicalSmiles()
        return self._reactantsSmiles


    def sourceTokens(self) -> TokenSequence:
        return tokenize(self.sourceSmiles())


    def targetTokens(self) -> TokenSequence:
        return tokenize(self.targetSmiles())


    def __repr__(self) -> str:
        return f'ReactionExample({self._id}: {self._reactantsSmiles}>>{self._productSmiles})'


# ---------- Reagent removal ----------

def removeReagents(reactants: MoleculeSet, product: MoleculeSet) -> MoleculeSet:
    '''Drop the reactant molecules that contribute no atoms to the
    product. Only meaningful for mapped reactions: a reactant with no
    atom map appearing in the product is a reagent. Unmapped reactions
    are returned unchanged.

    :param reactants: the reactants
    :param product: the product
    :returns: the reactants without reagents'''
    maps = _atomMaps(product)
    if len(maps) == 0:
        return reactants
    keep = [g for g in reactants if len(_atomMaps([g]) & maps) > 0]
    dropped = len(reactants) - len(keep)
    if dropped > 0:
        logger.debug(f'Removed {dropped} reagent molecule(s)')
    return MoleculeSet(keep)


def _atomMaps(gs: Iterable[MolGraph]) -> Set[int]:
    return set(a.atomMap for g in gs for a in g.atoms() if a.atomMap is not None)


# ---------- Records ----------

def parseReaction(id: str, rxn: str,
                  reactionClass: Optional[int] = None,
                  source: str = DATASET) -> ReactionExample:
    '''Parse a reaction SMILES into an example, dropping any agents
    and reagents.

    Reaction SMILES have the form reactants>>product, or
    reactants>agents>product in which case the agents are discarded.

    :param id: the example id
    :param rxn: the reaction SMILES
    :param reactionClass: (optional) the class label
    :param source: (optional) the example source
    :returns: the example'''
    parts = rxn.split('>')
    if len(parts) != 3:
        raise ReactionFormatError(f'Malformed reaction SMILES {rxn}')
    (rs, _, ps) = parts
    if len(rs) == 0 or len(ps) == 0:
        raise ReactionFormatError(f'Reaction {rxn} is missing a side')

    # filter reagents piece by piece so the surviving text is kept verbatim
    maps = _atomMaps(MoleculeSet.fromSmiles(ps))
    if len(maps) > 0:
        pieces = rs.split('.')
        kept = [p for p in pieces if len(_atomMaps(MoleculeSet.fromSmiles(p)) & maps) > 0]
        if len(kept) < len(pieces):
            logger.debug(f'Removed {len(pieces) - len(kept)} reagent molecule(s) from {id}')
            rs = '.'.join(kept)
    return ReactionExample(id, ps, rs, reactionClass, source)


def parseReactionRecord(line: str) -> ReactionExample:
    '''Parse one record line: id, class (or "-"), reaction SMILES, and
    optionally the example source, tab-separated.

    :param line: the line, without its newline
    :returns: the example'''
    fs = line.split('\t')
    if len(fs) not in (3, 4):
        raise ReactionFormatError(f'Expected 3 or 4 fields, got {len(fs)}')
    (id, c, rxn) = fs[:3]
    if c == '-':
        rc = None
    else:
        try:
            rc = int(c)
        except ValueError:
            raise ReactionFormatError(f'Bad reaction class {c!r}')
    source = fs[3] if len(fs) == 4 else DATASET
    return parseReaction(id, rxn, rc, source)


def formatReactionRecord(r: ReactionExample, withSource: bool = False) -> str:
    '''Format an example as a record line (without newline).

    :param r: the example
    :param withSource: (optional) add the source column (defaults to False)
    :returns: the line'''
    c = '-' if r.reactionClass() is None else str(r.reactionClass())
    fs = [r.id(), c, f'{r.reactantsSmiles()}>>{r.productSmiles()}']
    if withSource:
        fs.append(r.source())
    return '\t'.join(fs)


def readReactions(path: Union[str, Path]) -> Iterator[ReactionExample]:
    '''Stream the examples from a record file. Blank lines and lines
    starting with "#" are skipped. Errors are raised with the file
    and line number attached.

    :param path: the file
    :returns: an iterator over the examples'''
    with open(path, 'r', encoding='utf-8') as fh:
        for (n, line) in enumerate(fh, start=1):
            line = line.rstrip('\n').rstrip('\r')
            if len(line.strip()) == 0 or line.startswith('#'):
                continue
            try:
                yield parseReactionRecord(line)
            except ValueError as e:
                raise DataFileError(path, n, e)


def writeReactionRecords(fh: TextIO, examples: Iterable[ReactionExample],
                         withSource: bool = False) -> int:
    '''Write examples to an open file, one record per line.

    :param fh: the file handle
    :param examples: the examples
    :param withSource: (optional) add the source column (defaults to False)
    :returns: the number of records written'''
    n = 0
    for r in examples:
        fh.write(formatReactionRecord(r, withSource) + '\n')
        n += 1
    return n


def writeReactions(path: Union[str, Path], examples: Iterable[ReactionExample],
                   withSource: bool = False) -> int:
    '''Write examples to a record file.

    :param path: the file
    :param examples: the examples
    :param withSource: (optional) add the source column (defaults to False)
    :returns: the number of records written'''
    with open(path, 'w', encoding='utf-8') as fh:
        return writeReactionRecords(fh, examples, withSource)
