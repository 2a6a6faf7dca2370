# SMILES lexing, parsing, writing, and canonicalisation
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

import re
import logging
from typing import List, Tuple, Dict, Set, Optional, Callable, Hashable
import numpy
from retromix.types import Seed, TokenSequence
from retromix.utils import generatorFor
from retromix.ranking import canonicalRanks
from retromix.molecule import (Atom, MolGraph, SINGLE, DOUBLE, TRIPLE, AROMATIC,
                               normaliseAromaticity, normaliseHydrogens)
from retromix.errors import (emptyInput, unlexableCharacter, unbalancedParenthesis,
                             unclosedRingBond, invalidAtomToken, invalidBond,
                             invalidRingClosure, emptyBranch, valenceViolation)

logger = logging.getLogger(__name__)


# ---------- Lexing ----------

# Tokens, longest match first: bracket atoms, two-letter halogens,
# two-digit ring bonds, organic-subset atoms, aromatic atoms, ring
# digits, and bond/branch/dot symbols
_TOKEN = re.compile(r'\[[^\[\]]*\]|Br|Cl|%\d{2}|[BCNOPSFI]|[bcnops]|\d|[-=#:/\\().]')

# Bracket atom contents: isotope, symbol, chirality (ignored),
# hydrogen count, charge, and atom map
_BRACKET = re.compile(r'^\[(\d+)?([A-Z][a-z]?|se|as|[bcnops])'
                      r'(@@|@[A-Z]{2}\d{1,2}|@)?'
                      r'(H\d*)?'
                      r'(\+\d+|-\d+|\++|-+)?'
                      r'(?::(\d+))?\]$')

# Bond symbols and their orders (the directional bonds are single
# bonds as far as the graph is concerned)
BOND_SYMBOLS = {'-': SINGLE, '=': DOUBLE, '#': TRIPLE, ':': AROMATIC,
                '/': SINGLE, '\\': SINGLE}


def _lex(s: str) -> List[Tuple[str, int]]:
    '''Split a string into tokens paired with their byte offsets.

    :param s: the string
    :returns: a list of (token, offset) pairs'''
    ts = []
    pos = 0
    offset = 0
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if m is None:
            raise unlexableCharacter(s[pos], offset)
        t = m.group(0)
        ts.append((t, offset))
        pos = m.end()
        offset += len(t.encode('utf-8'))
    return ts


def tokenize(s: str) -> TokenSequence:
    '''Split a SMILES string into its atomic units. Two-letter
    halogens, bracket atoms and two-digit ring bonds are single
    tokens, as is every other symbol.

    :param s: the SMILES string
    :returns: the tokens'''
    return [t for (t, _) in _lex(s)]


def detokenize(ts: TokenSequence) -> str:
    '''Re-assemble a token sequence into a string.

    :param ts: the tokens
    :returns: the string'''
    return ''.join(ts)


def _isAtomToken(t: str) -> bool:
    return t[0] == '[' or t[0].isalpha()


def _isRingToken(t: str) -> bool:
    return t[0] == '%' or t.isdigit()


# ---------- Parsing ----------

def _parseCharge(c: Optional[str]) -> int:
    if c is None:
        return 0
    sign = 1 if c[0] == '+' else -1
    if len(c) > 1 and c[1].isdigit():
        return sign * int(c[1:])
    return sign * len(c)


def _parseAtom(t: str, offset: int) -> Atom:
    '''Parse an atom token.

    :param t: the token
    :param offset: the token's offset
    :returns: the atom'''
    if t[0] != '[':
        if t.islower():
            return Atom(t.upper(), aromatic=True)
        return Atom(t)

    m = _BRACKET.match(t)
    if m is None:
        raise invalidAtomToken(t, offset)
    (iso, sym, _, hs, charge, amap) = m.groups()
    aromatic = sym.islower()
    element = sym.capitalize() if aromatic else sym
    h = 0
    if hs is not None:
        h = int(hs[1:]) if len(hs) > 1 else 1
    mapping = int(amap) if amap is not None else None
    if mapping == 0:
        mapping = None
    try:
        return Atom(element,
                    charge=_parseCharge(charge),
                    aromatic=aromatic,
                    explicitH=h,
                    isotope=int(iso) if iso is not None else None,
                    atomMap=mapping)
    except ValueError:
        raise invalidAtomToken(t, offset)


def _defaultOrder(a: Atom, b: Atom) -> int:
    return AROMATIC if (a.aromatic and b.aromatic) else SINGLE


def parseSmiles(s: str, strict: bool = False) -> MolGraph:
    '''Parse a SMILES string into a molecular graph.

    Valence violations are logged and the graph marked lenient, since
    real reaction data contains plenty of exotica. With strict
    parsing they raise an exception instead.

    :param s: the SMILES string
    :param strict: (optional) raise on valence violations (defaults to False)
    :returns: the graph'''
    if len(s) == 0:
        raise emptyInput()
    ts = _lex(s)

    atoms: List[Atom] = []
    offsets: List[int] = []
    bonds: Dict[Tuple[int, int], int] = dict()
    prev: Optional[int] = None
    branches: List[Tuple[Optional[int], int]] = []
    pending: Optional[Tuple[str, int]] = None
    rings: Dict[str, Tuple[int, Optional[Tuple[str, int]], int]] = dict()
    last = None

    def addBond(i, j, order):
        bonds[(min(i, j), max(i, j))] = order

    for (t, off) in ts:
        if _isAtomToken(t):
            a = _parseAtom(t, off)
            i = len(atoms)
            atoms.append(a)
            offsets.append(off)
            if prev is not None:
                order = BOND_SYMBOLS[pending[0]] if pending is not None else _defaultOrder(atoms[prev], a)
                addBond(prev, i, order)
            elif pending is not None:
                raise invalidBond(*pending)
            pending = None
            prev = i

        elif t == '(':
            if prev is None or pending is not None:
                raise invalidBond(t, off)
            branches.append((prev, off))

        elif t == ')':
            if len(branches) == 0:
                raise unbalancedParenthesis(off)
            if pending is not None:
                raise invalidBond(*pending)
            if last == '(':
                raise emptyBranch(off)
            (prev, _) = branches.pop()

        elif t in BOND_SYMBOLS:
            if prev is None or pending is not None:
                raise invalidBond(t, off)
            pending = (t, off)

        elif t == '.':
            if prev is None or pending is not None:
                raise invalidBond(t, off)
            prev = None

        elif _isRingToken(t):
            if prev is None:
                raise invalidRingClosure(t, off)
            d = str(int(t.lstrip('%')))
            if d in rings:
                (j, opening, _) = rings.pop(d)
                if j == prev or (min(j, prev), max(j, prev)) in bonds:
                    raise invalidRingClosure(t, off)
                os = [BOND_SYMBOLS[b[0]] for b in (opening, pending) if b is not None]
                if len(os) == 2 and os[0] != os[1]:
                    raise invalidBond(pending[0], pending[1])
                order = os[0] if len(os) > 0 else _defaultOrder(atoms[j], atoms[prev])
                addBond(j, prev, order)
            else:
                rings[d] = (prev, pending, off)
            pending = None

        last = t

    if pending is not None:
        raise invalidBond(*pending)
    if len(branches) > 0:
        raise unbalancedParenthesis(branches[-1][1])
    if len(rings) > 0:
        (d, (_, _, off)) = min(rings.items(), key=lambda kv: kv[1][2])
        raise unclosedRingBond(d, off)

    g = MolGraph(atoms, [(i, j, o) for ((i, j), o) in bonds.items()], lenient=not strict)
    bad = g.valenceViolations()
    if len(bad) > 0:
        i = bad[0]
        err = valenceViolation(g.atom(i).element, g.valence(i), i, offsets[i])
        if strict:
            raise err
        logger.warning(f'{s}: {err}')
    return g


# ---------- Writing ----------

def _atomText(g: MolGraph, i: int) -> str:
    '''Return the SMILES text for an atom, bracketed only if needed.

    :param g: the graph
    :param i: the atom
    :returns: the atom's text'''
    a = g.atom(i)
    sym = a.element.lower() if a.aromatic else a.element
    if a.isOrganic() and a.explicitH is None:
        return sym

    t = '['
    if a.isotope is not None:
        t += str(a.isotope)
    t += sym
    h = g.hydrogens(i)
    if h == 1:
        t += 'H'
    elif h > 1:
        t += f'H{h}'
    if a.charge == 1:
        t += '+'
    elif a.charge == -1:
        t += '-'
    elif a.charge > 1:
        t += f'+{a.charge}'
    elif a.charge < -1:
        t += f'-{-a.charge}'
    if a.atomMap is not None:
        t += f':{a.atomMap}'
    return t + ']'


def _bondText(g: MolGraph, i: int, j: int) -> str:
    '''Return the SMILES text for a bond, empty when the
    default bond is the right one.

    :param g: the graph
    :param i: one atom
    :param j: the other atom
    :returns: the bond's text'''
    o = g.bondOrder(i, j)
    both = g.atom(i).aromatic and g.atom(j).aromatic
    if o == SINGLE:
        return '-' if both else ''
    elif o == DOUBLE:
        return '='
    elif o == TRIPLE:
        return '#'
    else:
        return '' if both else ':'


def _ringLabel(d: int) -> str:
    return str(d) if d < 10 else f'%{d}'


def _writeComponent(g: MolGraph, start: int,
                    neighbours: Callable[[int], List[int]]) -> str:
    '''Write one connected component as SMILES by depth-first traversal.

    The first pass builds the traversal tree and finds the ring
    closures (the non-tree edges, opened at whichever end the traversal
    reached first). The second pass emits the string, all children but
    the last going into branches, with ring digits allocated lowest-first
    and released after the atom that closes them.

    :param g: the graph
    :param start: the starting atom
    :param neighbours: function giving the neighbours of an atom in the order to visit them
    :returns: the SMILES string'''

    # first pass: traversal tree and ring closures
    visited = {start: 0}
    children: Dict[int, List[int]] = {start: []}
    opens: Dict[int, List[int]] = {start: []}
    closes: Dict[int, List[int]] = {start: []}
    stack = [(start, None, iter(neighbours(start)))]
    while len(stack) > 0:
        (u, p, it) = stack[-1]
        advanced = False
        for v in it:
            if v not in visited:
                visited[v] = len(visited)
                children[u].append(v)
                children[v], opens[v], closes[v] = [], [], []
                stack.append((v, u, iter(neighbours(v))))
                advanced = True
                break
            elif v != p and visited[v] < visited[u]:
                # back edge to an ancestor
                opens[v].append(u)
                closes[u].append(v)
        if not advanced:
            stack.pop()
    for u in visited:
        opens[u].sort(key=lambda v: visited[v])
        closes[u].sort(key=lambda v: visited[v])

    # second pass: emit
    out: List[str] = []
    digits: Dict[Tuple[int, int], int] = dict()
    inUse: Set[int] = set()
    work: List = [(start, None, False)]
    while len(work) > 0:
        item = work.pop()
        if item == ')':
            out.append(')')
            continue
        (u, p, branch) = item
        if branch:
            out.append('(')
        if p is not None:
            out.append(_bondText(g, p, u))
        out.append(_atomText(g, u))

        freed = []
        for a in closes[u]:
            d = digits.pop((a, u))
            out.append(_ringLabel(d))
            freed.append(d)
        for v in opens[u]:
            d = min(set(range(1, len(inUse) + 2)) - inUse)
            inUse.add(d)
            digits[(u, v)] = d
            out.append(_bondText(g, u, v) + _ringLabel(d))
        inUse.difference_update(freed)

        cs = children[u]
        items: List = []
        for (k, c) in enumerate(cs):
            if k < len(cs) - 1:
                items.append((c, u, True))
                items.append(')')
            else:
                items.append((c, u, False))
        work.extend(reversed(items))

    return ''.join(out)


def writeSmiles(g: MolGraph, seed: Seed = None) -> str:
    '''Write a graph as a randomly-traversed SMILES string.

    The seed chooses the starting atom of each component, the order
    in which each atom's neighbours are visited, and the order of the
    components. Every result parses back to a graph isomorphic to g.

    :param g: the graph
    :param seed: (optional) the random seed
    :returns: the SMILES string'''
    g.requireValid()
    rng = generatorFor(seed)
    G = g.graph()
    order = {u: [int(v) for v in rng.permutation(sorted(G.neighbors(u)))] for u in range(len(g))}
    ss = []
    for cs in g.componentAtoms():
        start = int(cs[rng.integers(len(cs))])
        ss.append(_writeComponent(g, start, lambda u: order[u]))
    return '.'.join(ss[k] for k in rng.permutation(len(ss)))


# ---------- Canonicalisation ----------

def _invariant(g: MolGraph, i: int) -> Hashable:
    '''The seed invariant of an atom for canonical ranking.'''
    a = g.atom(i)
    return (a.element, a.charge, g.degree(i), a.aromatic,
            g.hydrogens(i), a.explicitH is not None,
            -1 if a.isotope is None else a.isotope,
            -1 if a.atomMap is None else a.atomMap)


def canonicalRanking(g: MolGraph) -> Dict[int, int]:
    '''Return the canonical rank of every atom in a graph.

    :param g: the graph
    :returns: map from atom to rank'''
    return canonicalRanks(g.graph(),
                          {i: _invariant(g, i) for i in range(len(g))},
                          lambda i, j: g.bondOrder(i, j))


def canonicalize(g: MolGraph) -> str:
    '''Return the canonical SMILES string of a graph.

    Kekulé six-rings are first normalised to aromatic form and
    unnecessary bracket atoms demoted. Each component is then written
    starting from its lowest-ranked atom, visiting neighbours in rank
    order, and the component strings are sorted.

    :param g: the graph
    :returns: the canonical string'''
    g.requireValid()
    h = normaliseHydrogens(normaliseAromaticity(g))
    rank = canonicalRanking(h)
    neighbours = {u: sorted(h.neighbours(u), key=lambda v: rank[v]) for u in range(len(h))}
    ss = []
    for cs in h.componentAtoms():
        start = min(cs, key=lambda u: rank[u])
        ss.append(_writeComponent(h, start, lambda u: neighbours[u]))
    return '.'.join(sorted(ss))


def canonicalizeSmiles(s: str) -> str:
    '''Canonicalise a SMILES string, which may have several components.

    :param s: the SMILES string
    :returns: the canonical string'''
    return canonicalize(parseSmiles(s))


# ---------- Ring bonds ----------

def ringBonds(g: MolGraph) -> Set[int]:
    '''Return the indices of the bonds that lie on at least one cycle.
    Bond indices are positions in :meth:`MolGraph.bondKeys`.

    :param g: the graph
    :returns: the set of ring bond indices'''
    rs = g.ringBondKeys()
    return set(k for (k, b) in enumerate(g.bondKeys()) if b in rs)
