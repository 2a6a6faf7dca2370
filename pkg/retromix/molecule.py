# Atoms, bonds, and molecular graphs
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
import dataclasses
from dataclasses import dataclass
from typing import Iterable, List, Tuple, Optional, Set, Dict, Sequence
import networkx
from retromix.types import BondKey
from retromix.errors import valenceViolation

logger = logging.getLogger(__name__)


# ---------- Chemistry tables ----------

PERIODIC_TABLE = frozenset('''
H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co
Ni Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb
Te I Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re
Os Ir Pt Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es
Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og
'''.split())                                                     #: Element symbols.

ORGANIC_SUBSET = frozenset(['B', 'C', 'N', 'O', 'P', 'S', 'F', 'Cl', 'Br', 'I'])   #: Atoms writable without brackets.
AROMATIC_ORGANIC = frozenset(['B', 'C', 'N', 'O', 'P', 'S'])                    #: Atoms writable lower-case without brackets.
AROMATIC_CAPABLE = frozenset(['B', 'C', 'N', 'O', 'P', 'S', 'Se', 'As'])         #: Atoms that may be aromatic at all.

# Allowed valences for uncharged atoms
VALENCES: Dict[str, Tuple[int, ...]] = {
    'B': (3,),
    'C': (4,),
    'N': (3, 5),
    'O': (2,),
    'P': (3, 5),
    'S': (2, 4, 6),
    'F': (1,),
    'Cl': (1,),
    'Br': (1,),
    'I': (1,),
}

# Bond orders
SINGLE = 1
DOUBLE = 2
TRIPLE = 3
AROMATIC = 4
BOND_ORDERS = (SINGLE, DOUBLE, TRIPLE, AROMATIC)

# contribution of each bond order to valence (aromatic bonds count
# as one, with aromatic atoms then getting one extra when computing
# implicit hydrogens)
BOND_VALENCE = {SINGLE: 1, DOUBLE: 2, TRIPLE: 3, AROMATIC: 1}


def allowedValences(element: str, charge: int = 0) -> Optional[Tuple[int, ...]]:
    '''Return the allowed valences of an element carrying the given charge,
    or None if the element has no valence table entry (in which case any
    valence is accepted).

    Positive charge raises the valence of pnictogens, chalcogens, and
    halogens (as in ammonium) and negative charge lowers it. Carbon loses
    valence with either sign; boron gains valence when negative (as in
    borohydride).

    :param element: the element symbol
    :param charge: (optional) the formal charge (defaults to 0)
    :returns: a tuple of valences in increasing order, or None'''
    base = VALENCES.get(element)
    if base is None:
        return None
    if charge == 0:
        return base
    if element == 'B':
        adj = -charge
    elif element == 'C':
        adj = -abs(charge)
    else:
        adj = charge
    return tuple(v + adj for v in base if v + adj >= 0)


# ---------- Atoms and bonds ----------

@dataclass(frozen=True)
class Atom:
    '''An atom in a molecular graph.

    Hydrogens are never atoms in their own right: an atom either has an
    explicit hydrogen count (written in a bracket atom) or has its
    hydrogens computed to fill its default valence.

    :param element: the element symbol
    :param charge: (optional) the formal charge (defaults to 0)
    :param aromatic: (optional) True if the atom is aromatic (defaults to False)
    :param explicitH: (optional) the explicit hydrogen count (defaults to None, implicit)
    :param isotope: (optional) the isotope mass number
    :param atomMap: (optional) the reaction atom-map index'''

    element: str
    charge: int = 0
    aromatic: bool = False
    explicitH: Optional[int] = None
    isotope: Optional[int] = None
    atomMap: Optional[int] = None

    def __post_init__(self):
        if self.element not in PERIODIC_TABLE:
            raise ValueError(f'Unknown element {self.element}')
        if self.aromatic and self.element not in AROMATIC_CAPABLE:
            raise ValueError(f'Element {self.element} cannot be aromatic')
        if self.explicitH is not None and self.explicitH < 0:
            raise ValueError(f'Negative hydrogen count {self.explicitH}')
        if self.isotope is not None and self.isotope <= 0:
            raise ValueError(f'Non-positive isotope {self.isotope}')
        if self.atomMap is not None and self.atomMap <= 0:
            raise ValueError(f'Non-positive atom map {self.atomMap}')


    def withChanges(self, **kwargs) -> 'Atom':
        '''Return a copy of the atom with some attributes changed.

        :returns: the new atom'''
        return dataclasses.replace(self, **kwargs)


    def isOrganic(self) -> bool:
        '''Test whether the atom can be written without brackets,
        hydrogens aside.

        :returns: True if the atom is in the organic subset'''
        if self.charge != 0 or self.isotope is not None or self.atomMap is not None:
            return False
        if self.aromatic:
            return self.element in AROMATIC_ORGANIC
        return self.element in ORGANIC_SUBSET


@dataclass(frozen=True)
class Bond:
    '''A bond between two atoms.

    :param endpoints: the atom indices, smaller first
    :param order: the bond order
    :param inRing: True if the bond lies on a cycle'''

    endpoints: BondKey
    order: int
    inRing: bool


def bondKey(i: int, j: int) -> BondKey:
    '''Return the canonical key for the bond between two atoms.

    :param i: one atom
    :param j: the other atom
    :returns: the pair, smaller index first'''
    return (i, j) if i < j else (j, i)


# ---------- Molecular graphs ----------

class MolGraph:
    '''An attributed molecular graph.

    The graph is held as a frozen networkx graph whose nodes are the atom
    indices 0, 1, ... carrying an `atom` attribute, and whose edges carry
    an `order` attribute. Graphs are immutable once constructed: the
    editing operations all return new graphs.

    A graph is "lenient" if it came from parsing real-world data, in which
    case valence violations are tolerated and only logged. Graphs derived
    from lenient graphs stay lenient. Graphs built directly are strict.

    :param atoms: the atoms
    :param bonds: triples of atom indices and bond order
    :param lenient: (optional) tolerate valence violations (defaults to False)'''

    def __init__(self, atoms: Iterable[Atom] = (),
                 bonds: Iterable[Tuple[int, int, int]] = (),
                 lenient: bool = False):
        g = networkx.Graph()
        for (i, a) in enumerate(atoms):
            g.add_node(i, atom=a)
        n = g.number_of_nodes()
        for (i, j, o) in bonds:
            if i == j:
                raise ValueError(f'Bond from atom {i} to itself')
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f'Bond ({i}, {j}) outside atom range')
            if g.has_edge(i, j):
                raise ValueError(f'Duplicate bond ({i}, {j})')
            if o not in BOND_ORDERS:
                raise ValueError(f'Unknown bond order {o}')
            g.add_edge(i, j, order=o)
        self._graph = networkx.freeze(g)
        self._lenient = lenient
        self._ringBonds: Optional[Set[BondKey]] = None


    # ---------- Access ----------

    def graph(self) -> networkx.Graph:
        '''Return the underlying (frozen) networkx graph.

        :returns: the graph'''
        return self._graph


    def isLenient(self) -> bool:
        '''Test whether valence violations are tolerated.

        :returns: True if the graph is lenient'''
        return self._lenient


    def numberOfAtoms(self) -> int:
        '''Return the number of (heavy) atoms.

        :returns: the number of atoms'''
        return self._graph.number_of_nodes()


    def __len__(self) -> int:
        return self.numberOfAtoms()


    def atom(self, i: int) -> Atom:
        '''Return the atom with the given index.

        :param i: the index
        :returns: the atom'''
        return self._graph.nodes[i]['atom']


    def atoms(self) -> List[Atom]:
        '''Return the atoms in index order.

        :returns: the atoms'''
        return [self.atom(i) for i in range(self.numberOfAtoms())]


    def bondKeys(self) -> List[BondKey]:
        '''Return the keys of all bonds, in sorted order. This
        order defines bond indices.

        :returns: the bond keys'''
        return sorted(bondKey(i, j) for (i, j) in self._graph.edges())


    def bonds(self) -> List[Bond]:
        '''Return all the bonds, in bond-index order.

        :returns: the bonds'''
        rs = self.ringBondKeys()
        return [Bond(k, self.bondOrder(*k), k in rs) for k in self.bondKeys()]


    def bondOrder(self, i: int, j: int) -> Optional[int]:
        '''Return the order of the bond between two atoms, or
        None if they are not bonded.

        :param i: one atom
        :param j: the other atom
        :returns: the order or None'''
        if self._graph.has_edge(i, j):
            return self._graph.edges[i, j]['order']
        return None


    def neighbours(self, i: int) -> List[int]:
        '''Return the atoms bonded to the given atom, in index order.

        :param i: the atom
        :returns: the neighbours'''
        return sorted(self._graph.neighbors(i))


    def degree(self, i: int) -> int:
        '''Return the heavy-atom degree of an atom.

        :param i: the atom
        :returns: the number of bonded atoms'''
        return self._graph.degree(i)


    # ---------- Topology ----------

    def components(self) -> int:
        '''Return the number of connected components.

        :returns: the component count'''
        if self.numberOfAtoms() == 0:
            return 0
        return networkx.number_connected_components(self._graph)


    def isConnected(self) -> bool:
        '''Test whether the graph is a single molecule.

        :returns: True if there is exactly one component'''
        return self.components() == 1


    def componentAtoms(self) -> List[List[int]]:
        '''Return the atoms of each component, components ordered by
        their lowest atom index and atoms in index order.

        :returns: a list of lists of atom indices'''
        cs = [sorted(c) for c in networkx.connected_components(self._graph)]
        cs.sort(key=lambda c: c[0])
        return cs


    def componentGraphs(self) -> List['MolGraph']:
        '''Split the graph into one graph per component.

        :returns: the component graphs'''
        return [self.subgraph(c) for c in self.componentAtoms()]


    def ringBondKeys(self) -> Set[BondKey]:
        '''Return the keys of all bonds lying on at least one cycle.
        These are exactly the bonds that are not bridges.

        :returns: the set of ring bond keys'''
        if self._ringBonds is None:
            bridges = set(bondKey(i, j) for (i, j) in networkx.bridges(self._graph))
            self._ringBonds = set(k for k in self.bondKeys() if k not in bridges)
        return self._ringBonds


    def isRingBond(self, i: int, j: int) -> bool:
        '''Test whether the bond between two atoms is in a ring.

        :param i: one atom
        :param j: the other atom
        :returns: True if the bond lies on a cycle'''
        return bondKey(i, j) in self.ringBondKeys()


    # ---------- Hydrogens and valence ----------

    def bondValenceSum(self, i: int) -> int:
        '''Return the sum of bond-order contributions at an atom,
        with aromatic bonds counting one each.

        :param i: the atom
        :returns: the bond valence sum'''
        return sum(BOND_VALENCE[self.bondOrder(i, j)] for j in self._graph.neighbors(i))


    def defaultHydrogens(self, i: int) -> int:
        '''Return the number of hydrogens needed to fill the atom's
        default valence given its bonds, ignoring any explicit count.

        Aromatic atoms get one extra unit of bond valence and fill only
        their lowest valence, so pyridine nitrogen and thiophene sulphur
        carry no hydrogens while aromatic carbon carries one.

        :param i: the atom
        :returns: the implicit hydrogen count'''
        a = self.atom(i)
        vs = allowedValences(a.element, a.charge)
        if vs is None or len(vs) == 0:
            return 0
        s = self.bondValenceSum(i)
        if a.aromatic:
            return max(0, vs[0] - (s + 1))
        for v in vs:
            if v >= s:
                return v - s
        return 0


    def hydrogens(self, i: int) -> int:
        '''Return the total number of hydrogens on an atom: its
        explicit count if it has one, otherwise its default count.

        :param i: the atom
        :returns: the hydrogen count'''
        a = self.atom(i)
        if a.explicitH is not None:
            return a.explicitH
        return self.defaultHydrogens(i)


    def valence(self, i: int) -> int:
        '''Return the implied valence of an atom, bonds plus hydrogens.

        :param i: the atom
        :returns: the valence'''
        return self.bondValenceSum(i) + self.hydrogens(i)


    def valenceViolations(self) -> List[int]:
        '''Return the atoms whose implied valence exceeds the maximum
        allowed for their element and charge.

        :returns: the offending atom indices'''
        bad = []
        for i in range(self.numberOfAtoms()):
            a = self.atom(i)
            vs = allowedValences(a.element, a.charge)
            if vs is None:
                continue
            if len(vs) == 0 or self.valence(i) > vs[-1]:
                bad.append(i)
        return bad


    def checkValence(self, fatal: bool = False) -> bool:
        '''Check every atom's valence against the valence table.

        :param fatal: (optional) raise an exception on a violation (defaults to False)
        :returns: True if all atoms are within their maximum valence'''
        bad = self.valenceViolations()
        if len(bad) > 0:
            if fatal:
                i = bad[0]
                raise valenceViolation(self.atom(i).element, self.valence(i), i)
            return False
        return True


    def requireValid(self):
        '''Raise an exception if the graph is strict and violates valence.
        Lenient graphs are let through.'''
        if not self.checkValence(fatal=not self._lenient):
            logger.debug('Valence violation tolerated in lenient graph')


    # ---------- Derived graphs ----------

    def subgraph(self, atoms: Sequence[int]) -> 'MolGraph':
        '''Return the subgraph induced on the given atoms, renumbered
        in the order given.

        :param atoms: the atom indices
        :returns: the induced subgraph'''
        index = {a: k for (k, a) in enumerate(atoms)}
        bs = []
        for (i, j) in self.bondKeys():
            if i in index and j in index:
                bs.append((index[i], index[j], self.bondOrder(i, j)))
        return MolGraph([self.atom(a) for a in atoms], bs, lenient=self._lenient)


    def withoutBond(self, i: int, j: int) -> 'MolGraph':
        '''Return a copy of the graph with one bond removed.

        :param i: one atom
        :param j: the other atom
        :returns: the new graph'''
        k = bondKey(i, j)
        bs = [(a, b, self.bondOrder(a, b)) for (a, b) in self.bondKeys() if (a, b) != k]
        return MolGraph(self.atoms(), bs, lenient=self._lenient)


    def withAtoms(self, atoms: Sequence[Atom]) -> 'MolGraph':
        '''Return a copy of the graph with its atoms replaced, keeping
        the bonds.

        :param atoms: the new atoms, one per existing atom
        :returns: the new graph'''
        if len(atoms) != self.numberOfAtoms():
            raise ValueError('Atom count mismatch')
        bs = [(a, b, self.bondOrder(a, b)) for (a, b) in self.bondKeys()]
        return MolGraph(atoms, bs, lenient=self._lenient)


    def withBondOrders(self, orders: Dict[BondKey, int]) -> 'MolGraph':
        '''Return a copy of the graph with the orders of some bonds changed.

        :param orders: map from bond key to new order
        :returns: the new graph'''
        bs = [(a, b, orders.get((a, b), self.bondOrder(a, b))) for (a, b) in self.bondKeys()]
        return MolGraph(self.atoms(), bs, lenient=self._lenient)


    @staticmethod
    def union(gs: Iterable['MolGraph']) -> 'MolGraph':
        '''Return the disjoint union of several graphs, atoms numbered
        consecutively in the order given.

        :param gs: the graphs
        :returns: the union'''
        atoms: List[Atom] = []
        bonds: List[Tuple[int, int, int]] = []
        lenient = False
        for g in gs:
            off = len(atoms)
            atoms.extend(g.atoms())
            bonds.extend((i + off, j + off, g.bondOrder(i, j)) for (i, j) in g.bondKeys())
            lenient = lenient or g.isLenient()
        return MolGraph(atoms, bonds, lenient=lenient)


    def __repr__(self) -> str:
        return f'MolGraph({self.numberOfAtoms()} atoms, {self._graph.number_of_edges()} bonds)'


# ---------- Normalisation ----------

def normaliseHydrogens(g: MolGraph) -> MolGraph:
    '''Demote bracket atoms that need no brackets: organic-subset atoms
    whose explicit hydrogen count is their default count become implicit,
    so that "[CH4]" and "C" describe the same atom.

    :param g: the graph
    :returns: the normalised graph'''
    atoms = []
    for i in range(g.numberOfAtoms()):
        a = g.atom(i)
        if a.explicitH is not None and a.isOrganic() and a.explicitH == g.defaultHydrogens(i):
            a = a.withChanges(explicitH=None)
        atoms.append(a)
    return g.withAtoms(atoms)


def stripAtomMaps(g: MolGraph) -> MolGraph:
    '''Remove all atom maps from a graph, normalising hydrogens so
    that "[CH3:5]" and "C" describe the same atom.

    :param g: the graph
    :returns: the unmapped graph'''
    return normaliseHydrogens(g.withAtoms([a.withChanges(atomMap=None) for a in g.atoms()]))


def _alternates(orders: List[int]) -> bool:
    '''Test whether a cycle of bond orders can alternate single and
    double, treating aromatic bonds as either.

    :param orders: the bond orders around the ring
    :returns: True if some alternation fits'''
    if any(o not in (SINGLE, DOUBLE, AROMATIC) for o in orders):
        return False
    if all(o == AROMATIC for o in orders):
        return False
    for phase in (0, 1):
        ok = True
        for (k, o) in enumerate(orders):
            want = DOUBLE if (k % 2) == phase else SINGLE
            if o != AROMATIC and o != want:
                ok = False
                break
        if ok:
            return True
    return False


def normaliseAromaticity(g: MolGraph) -> MolGraph:
    '''Map alternating single/double six-membered rings of
    aromatic-capable atoms to aromatic form.

    This is not aromaticity perception: it covers the common case of
    Kekulé benzenoid rings (and their nitrogen analogues) so that Kekulé
    and aromatic spellings of the same molecule coincide. The pass is
    repeated until nothing changes, so fused Kekulé ring systems whose
    rings only alternate once a neighbouring ring is aromatic are
    normalised too.

    :param g: the graph
    :returns: the normalised graph (g itself if nothing changed)'''
    G = g.graph()
    rings = []
    for c in networkx.simple_cycles(G, length_bound=6):
        if len(c) == 6 and all(g.atom(a).element in AROMATIC_CAPABLE for a in c):
            rings.append(c)
    if len(rings) == 0:
        return g

    atoms = g.atoms()
    orders: Dict[BondKey, int] = {}

    def order(i, j):
        k = bondKey(i, j)
        return orders.get(k, g.bondOrder(i, j))

    changed = True
    while changed:
        changed = False
        for c in rings:
            ks = [bondKey(c[k], c[(k + 1) % 6]) for k in range(6)]
            os = [order(*k) for k in ks]
            if all(o == AROMATIC for o in os):
                continue
            if _alternates(os):
                for k in ks:
                    orders[k] = AROMATIC
                for a in c:
                    atoms[a] = atoms[a].withChanges(aromatic=True)
                changed = True

    if len(orders) == 0:
        return g
    bs = [(a, b, order(a, b)) for (a, b) in g.bondKeys()]
    return MolGraph(atoms, bs, lenient=g.isLenient())
