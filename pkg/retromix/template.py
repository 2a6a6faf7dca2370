# Reaction templates: extraction, application, and storage
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

import json
import hashlib
import logging
import dataclasses
from dataclasses import dataclass
from collections import Counter, deque
from pathlib import Path
from typing import List, Dict, Tuple, Optional, Set, Iterable, Union
import networkx
from networkx.algorithms.isomorphism import GraphMatcher
from retromix.errors import (RetroError, UnmappedAtoms, NoChange,
                             ReactionFormatError, DataFileError)
from retromix.ranking import canonicalRanks
from retromix.molecule import (Atom, MolGraph, bondKey, normaliseAromaticity,
                               stripAtomMaps)
from retromix.moleculeset import MoleculeSet
from retromix.smiles import canonicalize
from retromix.reaction import ReactionExample, TEMPLATE_PRETRAIN

logger = logging.getLogger(__name__)


# Maximum number of pattern embeddings explored per (template, molecule)
EMBEDDING_CAP = 256


# ---------- Template atoms and bonds ----------

@dataclass(frozen=True)
class TemplateAtom:
    '''An atom of a template.

    Atoms present in the product are pattern atoms, matched against
    molecules by element, aromaticity and charge, and (for reaction
    centre atoms) by heavy-atom degree too. Their reactant-side
    aromaticity and charge are what they become after the rewrite,
    and their hydrogen change is added to the matched atom's hydrogens.

    Atoms absent from the product are leaving-group atoms, added by
    the rewrite with their reactant-side attributes and explicit
    hydrogen count (None for implicit).

    :param element: the element
    :param inProduct: (optional) True for a pattern atom (defaults to True)
    :param center: (optional) True for a reaction-centre atom (defaults to False)
    :param aromatic: (optional) product-side aromaticity
    :param charge: (optional) product-side charge
    :param degree: (optional) required degree, for centre atoms
    :param reactantAromatic: (optional) reactant-side aromaticity
    :param reactantCharge: (optional) reactant-side charge
    :param hydrogenChange: (optional) reactant minus product hydrogens
    :param explicitH: (optional) explicit hydrogens of a leaving atom'''

    element: str
    inProduct: bool = True
    center: bool = False
    aromatic: bool = False
    charge: int = 0
    degree: Optional[int] = None
    reactantAromatic: bool = False
    reactantCharge: int = 0
    hydrogenChange: int = 0
    explicitH: Optional[int] = None

    def symbol(self) -> str:
        '''Return the element symbol, lower-case if aromatic on the
        side where the atom first exists.

        :returns: the symbol'''
        arom = self.aromatic if self.inProduct else self.reactantAromatic
        return self.element.lower() if arom else self.element


    def invariant(self) -> Tuple:
        '''Return a comparable tuple of the atom's attributes, with
        -1 standing for missing values.

        :returns: the tuple'''
        return tuple(-1 if v is None else v for v in dataclasses.astuple(self))


@dataclass(frozen=True)
class TemplateBond:
    '''A bond of a template, with its order on each side of the
    reaction (None where the bond is absent).

    :param i: one atom
    :param j: the other atom
    :param productOrder: the order in the product
    :param reactantOrder: the order in the reactants'''

    i: int
    j: int
    productOrder: Optional[int]
    reactantOrder: Optional[int]

    def isChanged(self) -> bool:
        return self.productOrder != self.reactantOrder


# ---------- Templates ----------

class Template:
    '''A retrosynthetic template: a product pattern and the rewrite
    that turns a match of it into reactants.

    The template is held as a single graph whose atoms and bonds carry
    both their product-side and reactant-side forms. Templates built by
    :func:`makeTemplate` are in canonical atom order, and their id is a
    hash of their canonical serialisation, so the same reaction centre
    extracted from different reactions gets the same id.

    :param atoms: the atoms
    :param bonds: the bonds
    :param count: (optional) the number of occurrences (defaults to 1)
    :param id: (optional) the id (defaults to the hash of the serialisation)'''

    def __init__(self, atoms: List[TemplateAtom], bonds: List[TemplateBond],
                 count: int = 1, id: Optional[str] = None):
        self._atoms = list(atoms)
        self._bonds = list(bonds)
        self._count = count
        if id is None:
            id = hashlib.sha1(self.toJson().encode('utf-8')).hexdigest()[:16]
        self._id = id
        self._pattern: Optional[networkx.Graph] = None


    # ---------- Access ----------

    def id(self) -> str:
        return self._id


    def count(self) -> int:
        '''Return the number of times the template occurred in the
        corpus it was extracted from.

        :returns: the count'''
        return self._count


    def withCount(self, n: int) -> 'Template':
        '''Return a copy of the template with a different count.

        :param n: the count
        :returns: the template'''
        return Template(self._atoms, self._bonds, n, self._id)


    def atoms(self) -> List[TemplateAtom]:
        return list(self._atoms)


    def bonds(self) -> List[TemplateBond]:
        return list(self._bonds)


    def patternAtoms(self) -> List[int]:
        '''Return the indices of the atoms in the product pattern.

        :returns: the atom indices'''
        return [k for (k, a) in enumerate(self._atoms) if a.inProduct]


    def centerAtoms(self) -> List[int]:
        '''Return the indices of the reaction-centre atoms.

        :returns: the atom indices'''
        return [k for (k, a) in enumerate(self._atoms) if a.center]


    def leavingAtoms(self) -> List[int]:
        '''Return the indices of the leaving-group atoms.

        :returns: the atom indices'''
        return [k for (k, a) in enumerate(self._atoms) if not a.inProduct]


    # ---------- Patterns ----------

    def productPattern(self) -> networkx.Graph:
        '''Return the product pattern as an attributed graph, nodes
        being template atom indices.

        :returns: the pattern graph'''
        if self._pattern is None:
            P = networkx.Graph()
            for k in self.patternAtoms():
                a = self._atoms[k]
                P.add_node(k, element=a.element, aromatic=a.aromatic,
                           charge=a.charge, degree=a.degree if a.center else None)
            for b in self._bonds:
                if b.productOrder is not None:
                    P.add_edge(b.i, b.j, order=b.productOrder)
            self._pattern = networkx.freeze(P)
        return self._pattern


    def reactantPatterns(self) -> List[networkx.Graph]:
        '''Return the reactant-side patterns, one per connected
        component of the reactant side of the template.

        :returns: the reactant pattern graphs'''
        R = networkx.Graph()
        for (k, a) in enumerate(self._atoms):
            R.add_node(k, element=a.element, aromatic=a.reactantAromatic,
                       charge=a.reactantCharge, leaving=not a.inProduct)
        for b in self._bonds:
            if b.reactantOrder is not None:
                R.add_edge(b.i, b.j, order=b.reactantOrder)
        cs = sorted((sorted(c) for c in networkx.connected_components(R)), key=lambda c: c[0])
        return [R.subgraph(c).copy() for c in cs]


    def changedBondSignature(self) -> Tuple[str, ...]:
        '''Return a description of the bonds broken, formed or changed
        at the reaction centre, independent of the pattern around it.

        Each change is written as the two end symbols and the orders
        on the product and reactant sides (0 for absent), as in
        "C~N:1>0" for a broken C-N single bond.

        :returns: the sorted change labels'''
        ls = []
        for b in self._bonds:
            ai, aj = self._atoms[b.i], self._atoms[b.j]
            if b.isChanged() and (ai.inProduct or aj.inProduct):
                (x, y) = sorted([ai.symbol(), aj.symbol()])
                ls.append(f'{x}~{y}:{b.productOrder or 0}>{b.reactantOrder or 0}')
        return tuple(sorted(ls))


    # ---------- Serialisation ----------

    def toJson(self) -> str:
        '''Serialise the template's atoms and bonds.

        Atoms are lists of the :class:`TemplateAtom` fields in
        declaration order, bonds lists of the two atom indices and the
        product and reactant orders. The serialisation of a template
        built by :func:`makeTemplate` is canonical.

        :returns: a JSON string'''
        d = dict(atoms=[list(dataclasses.astuple(a)) for a in self._atoms],
                 bonds=[[b.i, b.j, b.productOrder, b.reactantOrder] for b in self._bonds])
        return json.dumps(d, separators=(',', ':'))


    @staticmethod
    def fromJson(s: str, count: int = 1, id: Optional[str] = None) -> 'Template':
        '''Re-build a template from its serialisation.

        :param s: the JSON string
        :param count: (optional) the count
        :param id: (optional) the id (defaults to the hash)
        :returns: the template'''
        try:
            d = json.loads(s)
            atoms = [TemplateAtom(*row) for row in d['atoms']]
            bonds = [TemplateBond(*row) for row in d['bonds']]
        except (ValueError, TypeError, KeyError) as e:
            raise ReactionFormatError(f'Malformed template: {e}')
        return Template(atoms, bonds, count, id)


    def __repr__(self) -> str:
        return f'Template({self._id}, {len(self.patternAtoms())} pattern atoms, {len(self.leavingAtoms())} leaving, count {self._count})'


def makeTemplate(atoms: List[TemplateAtom], bonds: List[TemplateBond],
                 count: int = 1) -> Template:
    '''Build a template with its atoms in canonical order.

    :param atoms: the atoms
    :param bonds: the bonds
    :param count: (optional) the count (defaults to 1)
    :returns: the template'''
    G = networkx.Graph()
    G.add_nodes_from(range(len(atoms)))
    for b in bonds:
        G.add_edge(b.i, b.j, key=(b.productOrder or 0, b.reactantOrder or 0))
    rank = canonicalRanks(G,
                          {k: a.invariant() for (k, a) in enumerate(atoms)},
                          lambda i, j: G.edges[i, j]['key'])

    order = sorted(range(len(atoms)), key=lambda k: rank[k])
    index = {k: n for (n, k) in enumerate(order)}
    cas = [atoms[k] for k in order]
    cbs = []
    for b in bonds:
        (i, j) = sorted([index[b.i], index[b.j]])
        cbs.append(TemplateBond(i, j, b.productOrder, b.reactantOrder))
    cbs.sort(key=lambda b: (b.i, b.j))
    return Template(cas, cbs, count)


# ---------- Extraction ----------

def _connect(P: MolGraph, atoms: Set[int]) -> Set[int]:
    '''Add the atoms on shortest paths needed to make a set of
    product atoms induce a connected subgraph.'''
    atoms = set(atoms)
    while True:
        cs = sorted((sorted(c) for c in networkx.connected_components(P.graph().subgraph(atoms))),
                    key=lambda c: c[0])
        if len(cs) <= 1:
            return atoms
        path = networkx.shortest_path(P.graph(), cs[0][0], cs[1][0])
        atoms.update(path)


def extractTemplate(r: ReactionExample) -> Template:
    '''Extract the radius-1 template of a mapped reaction.

    The reaction centre is the set of product atoms whose bonds, charge,
    aromaticity or hydrogen count differ between the two sides, or which
    are bonded in the reactants to atoms that do not survive into the
    product. The product pattern is the centre plus its immediate
    neighbours (joined up along shortest paths if that leaves it in
    pieces). The leaving groups are all the reactant atoms reachable from
    the centre without passing through a product atom.

    :param r: the mapped example
    :returns: the template'''
    P = normaliseAromaticity(r.productGraph())
    R = normaliseAromaticity(r.reactants().asGraph())

    pmap: Dict[int, int] = dict()
    for (i, a) in enumerate(P.atoms()):
        if a.atomMap is None:
            raise UnmappedAtoms(f'Product atom {i} ({a.element}) of {r.id()} has no atom map')
        if a.atomMap in pmap:
            raise ReactionFormatError(f'Atom map {a.atomMap} repeated in product of {r.id()}')
        pmap[a.atomMap] = i
    rmap: Dict[int, int] = dict()
    for (i, a) in enumerate(R.atoms()):
        if a.atomMap is not None and a.atomMap in pmap:
            if a.atomMap in rmap:
                raise ReactionFormatError(f'Atom map {a.atomMap} repeated in reactants of {r.id()}')
            rmap[a.atomMap] = i
    missing = set(pmap.keys()) - set(rmap.keys())
    if len(missing) > 0:
        raise UnmappedAtoms(f'Product atom maps {sorted(missing)} of {r.id()} absent from reactants')

    # correspondence between product and reactant atoms
    toR = {p: rmap[P.atom(p).atomMap] for p in range(len(P))}
    fromR = {v: p for (p, v) in toR.items()}

    # reaction centre
    centers: Set[int] = set()
    for (i, j) in P.bondKeys():
        if R.bondOrder(toR[i], toR[j]) != P.bondOrder(i, j):
            centers.update([i, j])
    for (u, v) in R.bondKeys():
        if u in fromR and v in fromR:
            if P.bondOrder(fromR[u], fromR[v]) is None:
                centers.update([fromR[u], fromR[v]])
        elif u in fromR:
            centers.add(fromR[u])
        elif v in fromR:
            centers.add(fromR[v])
    for p in range(len(P)):
        a, b = P.atom(p), R.atom(toR[p])
        if a.charge != b.charge or a.aromatic != b.aromatic or P.hydrogens(p) != R.hydrogens(toR[p]):
            centers.add(p)
    if len(centers) == 0:
        raise NoChange()

    # product pattern
    pattern = set(centers)
    for c in centers:
        pattern.update(P.neighbours(c))
    pattern = _connect(P, pattern)

    # leaving groups
    leaving: List[int] = []
    seen: Set[int] = set()
    queue = deque(sorted(toR[c] for c in centers))
    while len(queue) > 0:
        u = queue.popleft()
        for v in R.neighbours(u):
            if v not in fromR and v not in seen:
                seen.add(v)
                leaving.append(v)
                queue.append(v)

    # combined atoms, pattern atoms first
    ps = sorted(pattern)
    index = {p: k for (k, p) in enumerate(ps)}
    atoms = []
    for p in ps:
        a, b = P.atom(p), R.atom(toR[p])
        c = p in centers
        atoms.append(TemplateAtom(a.element, inProduct=True, center=c,
                                  aromatic=a.aromatic, charge=a.charge,
                                  degree=P.degree(p) if c else None,
                                  reactantAromatic=b.aromatic, reactantCharge=b.charge,
                                  hydrogenChange=(R.hydrogens(toR[p]) - P.hydrogens(p)) if c else 0))
    leavingIndex = {v: len(ps) + n for (n, v) in enumerate(leaving)}
    for v in leaving:
        b = R.atom(v)
        atoms.append(TemplateAtom(b.element, inProduct=False,
                                  reactantAromatic=b.aromatic, reactantCharge=b.charge,
                                  explicitH=b.explicitH))

    # combined bonds
    bonds = []
    for (n, p) in enumerate(ps):
        for q in ps[n + 1:]:
            po = P.bondOrder(p, q)
            ro = R.bondOrder(toR[p], toR[q])
            if po is not None or ro is not None:
                bonds.append(TemplateBond(index[p], index[q], po, ro))
    for (u, v) in R.bondKeys():
        ends = []
        for w in (u, v):
            if w in leavingIndex:
                ends.append(leavingIndex[w])
            elif w in fromR and fromR[w] in index:
                ends.append(index[fromR[w]])
        if len(ends) == 2 and (u in leavingIndex or v in leavingIndex):
            bonds.append(TemplateBond(ends[0], ends[1], None, R.bondOrder(u, v)))

    return makeTemplate(atoms, bonds)


def extractTemplateIds(examples: Iterable[ReactionExample]) -> List[Optional[str]]:
    '''Extract the template id of every example, with None for
    examples whose template cannot be extracted.

    :param examples: the examples
    :returns: the template ids'''
    return [t.id() if t is not None else None for t in extractEach(examples)]


def extractEach(examples: Iterable[ReactionExample]) -> List[Optional[Template]]:
    ts: List[Optional[Template]] = []
    failures = 0
    for r in examples:
        try:
            ts.append(extractTemplate(r))
        except RetroError as e:
            logger.debug(f'No template for {r.id()}: {e}')
            ts.append(None)
            failures += 1
    if failures > 0:
        logger.warning(f'Template extraction failed for {failures} of {len(ts)} examples')
    return ts


def extractTemplates(examples: Iterable[ReactionExample]) -> List[Template]:
    '''Extract the distinct templates of a corpus, counting how often
    each occurs. Examples whose template cannot be extracted are
    logged and skipped.

    :param examples: the examples
    :returns: the templates, most frequent first'''
    counts: Counter = Counter()
    first: Dict[str, Template] = dict()
    for t in extractEach(examples):
        if t is not None:
            counts[t.id()] += 1
            first.setdefault(t.id(), t)
    ids = sorted(counts.keys(), key=lambda i: (-counts[i], i))
    return [first[i].withCount(counts[i]) for i in ids]


# ---------- Unmapped signatures ----------

def _bondLabels(g: MolGraph) -> Counter:
    ls: Counter = Counter()
    for (i, j) in g.bondKeys():
        (x, y) = sorted(a.element.lower() if a.aromatic else a.element for a in (g.atom(i), g.atom(j)))
        ls[(x, y, g.bondOrder(i, j))] += 1
    return ls


def pairSignature(product: MolGraph, reactants: MolGraph) -> Tuple[str, ...]:
    '''Return the changed-bond signature of an unmapped reaction, in
    the form given by :meth:`Template.changedBondSignature`.

    Without atom maps the changes are read off the difference between
    the labelled bonds of the two sides. A bond lost and a bond gained
    between the same pair of elements are paired up as an order change.
    A bond broken in one place and formed again between the same
    elements elsewhere cancels out, so the signature can miss changes.

    :param product: the product
    :param reactants: the reactants
    :returns: the sorted change labels'''
    P = _bondLabels(normaliseAromaticity(product))
    R = _bondLabels(normaliseAromaticity(reactants))
    (broken, formed) = (P - R, R - P)
    ls = []
    for (x, y) in sorted(set((x, y) for (x, y, _) in (broken + formed))):
        ps = sorted(o for (a, b, o) in broken.elements() if (a, b) == (x, y))
        rs = sorted(o for (a, b, o) in formed.elements() if (a, b) == (x, y))
        for k in range(max(len(ps), len(rs))):
            p = ps[k] if k < len(ps) else 0
            r = rs[k] if k < len(rs) else 0
            ls.append(f'{x}~{y}:{p}>{r}')
    return tuple(sorted(ls))


# ---------- Application ----------

def _matchGraph(g: MolGraph) -> networkx.Graph:
    '''Build the attributed graph that patterns are matched against.'''
    G = networkx.Graph()
    for i in range(len(g)):
        a = g.atom(i)
        G.add_node(i, element=a.element, aromatic=a.aromatic,
                   charge=a.charge, degree=g.degree(i))
    for (i, j) in g.bondKeys():
        G.add_edge(i, j, order=g.bondOrder(i, j))
    return G


def _nodeMatch(m: Dict, p: Dict) -> bool:
    return (m['element'] == p['element'] and m['aromatic'] == p['aromatic'] and
            m['charge'] == p['charge'] and (p['degree'] is None or p['degree'] == m['degree']))


def _edgeMatch(m: Dict, p: Dict) -> bool:
    return m['order'] == p['order']


def embeddings(t: Template, g: MolGraph, cap: int = EMBEDDING_CAP) -> List[Dict[int, int]]:
    '''Find the embeddings of a template's product pattern into a
    molecule, as subgraph monomorphisms respecting the atom and bond
    constraints. Molecule bonds between matched atoms that the pattern
    lacks are allowed, as in ring closures.

    :param t: the template
    :param g: the molecule
    :param cap: (optional) the maximum number of embeddings (defaults to EMBEDDING_CAP)
    :returns: a list of maps from template atom to molecule atom'''
    P = t.productPattern()
    need = Counter(d['element'] for (_, d) in P.nodes(data=True))
    have = Counter(a.element for a in g.atoms())
    if any(have[e] < n for (e, n) in need.items()):
        return []

    gm = GraphMatcher(_matchGraph(g), P, node_match=_nodeMatch, edge_match=_edgeMatch)
    ms = []
    for m in gm.subgraph_monomorphisms_iter():
        if len(ms) == cap:
            logger.info(f'Embedding cap of {cap} reached for template {t.id()}')
            break
        ms.append({p: n for (n, p) in m.items()})
    return ms


def _rewrite(t: Template, g: MolGraph, m: Dict[int, int]) -> Optional[MolGraph]:
    '''Rewrite a molecule at one embedding of a template, returning
    None if the hydrogen changes are impossible.'''
    atoms = g.atoms()
    orders = {k: g.bondOrder(*k) for k in g.bondKeys()}
    where = dict(m)
    for (k, ta) in enumerate(t.atoms()):
        if not ta.inProduct:
            where[k] = len(atoms)
            atoms.append(Atom(ta.element, charge=ta.reactantCharge,
                              aromatic=ta.reactantAromatic, explicitH=ta.explicitH))
        elif ta.center:
            n = m[k]
            h = g.hydrogens(n) + ta.hydrogenChange
            if h < 0:
                return None
            atoms[n] = atoms[n].withChanges(charge=ta.reactantCharge,
                                            aromatic=ta.reactantAromatic,
                                            explicitH=h)
    for b in t.bonds():
        if not b.isChanged():
            continue
        k = bondKey(where[b.i], where[b.j])
        if b.reactantOrder is None:
            orders.pop(k, None)
        else:
            orders[k] = b.reactantOrder
    return stripAtomMaps(MolGraph(atoms, [(i, j, o) for ((i, j), o) in orders.items()], lenient=True))


def applyTemplateSets(t: Template, g: MolGraph, cap: int = EMBEDDING_CAP) -> List[MoleculeSet]:
    '''Apply a template to a molecule, returning the distinct reactant
    sets it produces, in embedding order.

    :param t: the template
    :param g: the molecule
    :param cap: (optional) the embedding cap
    :returns: the reactant sets'''
    h = normaliseAromaticity(g)
    sets = []
    seen: Set[Tuple[str, ...]] = set()
    for m in embeddings(t, h, cap):
        r = _rewrite(t, h, m)
        if r is None:
            continue
        s = MoleculeSet([r])
        key = tuple(s.canonicalStrings())
        if key not in seen:
            seen.add(key)
            sets.append(s)
    return sets


def applyTemplate(t: Template, g: MolGraph, cap: int = EMBEDDING_CAP) -> List[ReactionExample]:
    '''Apply a template to a molecule, producing one example per
    distinct rewrite. Symmetric embeddings that give the same reactants
    produce a single example.

    :param t: the template
    :param g: the (product) molecule
    :param cap: (optional) the embedding cap
    :returns: the examples'''
    sets = applyTemplateSets(t, g, cap)
    if len(sets) == 0:
        return []
    product = canonicalize(stripAtomMaps(g))
    return [ReactionExample(f'{t.id()}:{k}', product, s.canonicalSmiles(), source=TEMPLATE_PRETRAIN)
            for (k, s) in enumerate(sets)]


# ---------- Template stores ----------

def readTemplates(path: Union[str, Path]) -> List[Template]:
    '''Read a template store: one template per line as id, count
    and serialisation, tab-separated.

    :param path: the file
    :returns: the templates'''
    ts = []
    with open(path, 'r', encoding='utf-8') as fh:
        for (n, line) in enumerate(fh, start=1):
            line = line.rstrip('\n')
            if len(line.strip()) == 0 or line.startswith('#'):
                continue
            try:
                fs = line.split('\t')
                if len(fs) != 3:
                    raise ReactionFormatError(f'Expected 3 fields, got {len(fs)}')
                ts.append(Template.fromJson(fs[2], int(fs[1]), fs[0]))
            except (RetroError, ValueError) as e:
                raise DataFileError(path, n, e)
    return ts


def writeTemplates(path: Union[str, Path], templates: Iterable[Template]) -> int:
    '''Write a template store.

    :param path: the file
    :param templates: the templates
    :returns: the number of templates written'''
    n = 0
    with open(path, 'w', encoding='utf-8') as fh:
        for t in templates:
            fh.write(f'{t.id()}\t{t.count()}\t{t.toJson()}\n')
            n += 1
    return n
