# Test SMILES lexing, parsing, writing and canonicalisation
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

import unittest
import networkx
from retromix import *
from .molecules import randomMolecules


class TestTokenize(unittest.TestCase):

    def testSimple(self):
        '''Test two-letter halogens are single tokens.'''
        self.assertEqual(tokenize('CC(=O)Cl'), ['C', 'C', '(', '=', 'O', ')', 'Cl'])


    def testBracketsAndRings(self):
        '''Test bracket atoms and two-digit ring bonds are single tokens.'''
        self.assertEqual(tokenize('[NH4+].C%12CC%12'),
                         ['[NH4+]', '.', 'C', '%12', 'C', 'C', '%12'])


    def testRoundTrip(self):
        '''Test detokenising gives back the string.'''
        for s in ['c1ccc2c(c1)[nH]cc2', 'CC(C)(C)OC(=O)N1CCC[CH]1C(=O)O',
                  'O=C(Cl)c1ccc(Br)cc1']:
            self.assertEqual(detokenize(tokenize(s)), s)


    def testUnlexable(self):
        '''Test we report the offset of an unlexable character.'''
        with self.assertRaises(SmilesError) as ctx:
            tokenize('C$C')
        self.assertEqual(ctx.exception.kind(), 'UnlexableCharacter')
        self.assertEqual(ctx.exception.offset(), 1)


class TestParse(unittest.TestCase):

    def assertSmilesError(self, s, kind, offset=None):
        with self.assertRaises(SmilesError) as ctx:
            parseSmiles(s)
        self.assertEqual(ctx.exception.kind(), kind)
        if offset is not None:
            self.assertEqual(ctx.exception.offset(), offset)


    def testChain(self):
        '''Test a simple chain.'''
        g = parseSmiles('CC=O')
        self.assertEqual(len(g), 3)
        self.assertEqual(g.bondOrder(0, 1), SINGLE)
        self.assertEqual(g.bondOrder(1, 2), DOUBLE)


    def testBranches(self):
        '''Test branches attach to the atom before them.'''
        g = parseSmiles('CC(C)(C)O')
        self.assertEqual(g.degree(1), 4)
        self.assertEqual(g.neighbours(4), [1])


    def testRingClosure(self):
        '''Test ring bonds close onto the opening atom.'''
        g = parseSmiles('C1CC=C1')
        self.assertEqual(g.bondOrder(0, 3), SINGLE)
        self.assertEqual(len(g.ringBondKeys()), 4)


    def testRingBondOrder(self):
        '''Test a bond symbol at either end of a ring bond sets its order.'''
        self.assertEqual(parseSmiles('C=1CCC1').bondOrder(0, 3), DOUBLE)
        self.assertEqual(parseSmiles('C1CCC=1').bondOrder(0, 3), DOUBLE)


    def testAromaticBonds(self):
        '''Test bonds between aromatic atoms default to aromatic.'''
        g = parseSmiles('c1ccccc1C')
        self.assertEqual(g.bondOrder(0, 1), AROMATIC)
        self.assertEqual(g.bondOrder(5, 6), SINGLE)


    def testBracketAtom(self):
        '''Test the parts of a bracket atom.'''
        g = parseSmiles('[13CH3:7][O-]')
        a = g.atom(0)
        self.assertEqual(a.isotope, 13)
        self.assertEqual(a.explicitH, 3)
        self.assertEqual(a.atomMap, 7)
        self.assertEqual(g.atom(1).charge, -1)


    def testErrors(self):
        '''Test each kind of error, with its offset.'''
        self.assertSmilesError('', 'EmptyInput', 0)
        self.assertSmilesError('CC(C', 'UnbalancedParenthesis', 2)
        self.assertSmilesError('CC)C', 'UnbalancedParenthesis', 2)
        self.assertSmilesError('C1CC', 'UnclosedRingBond', 1)
        self.assertSmilesError('C()C', 'EmptyBranch', 2)
        self.assertSmilesError('=CC', 'InvalidBond', 0)
        self.assertSmilesError('CC=', 'InvalidBond', 2)
        self.assertSmilesError('[Xx]', 'InvalidAtomToken', 0)
        self.assertSmilesError('C11', 'InvalidRingClosure', 2)


    def testDuplicateRingBond(self):
        '''Test a ring bond onto an already-bonded atom is rejected.'''
        self.assertSmilesError('C12CCC12', 'InvalidRingClosure')


    def testStrictValence(self):
        '''Test strict parsing rejects valence violations.'''
        with self.assertRaises(SmilesError) as ctx:
            parseSmiles('C(C)(C)(C)(C)C', strict=True)
        self.assertEqual(ctx.exception.kind(), 'ValenceViolation')
        self.assertEqual(ctx.exception.offset(), 0)


    def testErrorsAreValueErrors(self):
        '''Test SMILES errors can be caught as ValueError.'''
        with self.assertRaises(ValueError):
            parseSmiles('C(')


class TestCanonical(unittest.TestCase):

    def testAtomOrder(self):
        '''Test different spellings canonicalise the same.'''
        self.assertEqual(canonicalizeSmiles('OCC'), canonicalizeSmiles('CCO'))
        self.assertEqual(canonicalizeSmiles('C(C)O'), canonicalizeSmiles('CCO'))


    def testFusedRings(self):
        '''Test two spellings of a fused heteroaromatic give one string.'''
        self.assertEqual(canonicalizeSmiles('c1ncc2cc(F)ncc2n1'),
                         canonicalizeSmiles('Fc1cc2cncnc2cn1'))


    def testDifferentMolecules(self):
        '''Test isomers canonicalise differently.'''
        self.assertNotEqual(canonicalizeSmiles('CCCO'), canonicalizeSmiles('CC(C)O'))
        self.assertNotEqual(canonicalizeSmiles('Fc1ccccc1Cl'), canonicalizeSmiles('Fc1ccc(Cl)cc1'))


    def testKekule(self):
        '''Test Kekulé and aromatic benzene coincide.'''
        self.assertEqual(canonicalizeSmiles('C1=CC=CC=C1'), canonicalizeSmiles('c1ccccc1'))


    def testBrackets(self):
        '''Test unnecessary brackets are dropped.'''
        self.assertEqual(canonicalizeSmiles('[CH3][CH2][OH]'), canonicalizeSmiles('CCO'))


    def testComponentOrder(self):
        '''Test component order doesn't matter.'''
        self.assertEqual(canonicalizeSmiles('CCO.c1ccccc1'), canonicalizeSmiles('c1ccccc1.OCC'))


    def testIdempotent(self):
        '''Test canonicalising a canonical string changes nothing.'''
        for s in ['CC(=O)Oc1ccccc1C(=O)O', 'c1ncc2cc(F)ncc2n1', 'C1CCC2(CC1)OCCO2']:
            c = canonicalizeSmiles(s)
            self.assertEqual(canonicalizeSmiles(c), c)


class TestRandomTraversal(unittest.TestCase):

    def testSameMolecule(self):
        '''Test random traversals all canonicalise to the original.'''
        for s in ['CC(=O)Oc1ccccc1C(=O)O', 'c1ncc2cc(F)ncc2n1', 'C1CCC2(CC1)OCCO2', 'CCO.[Na+].[Cl-]']:
            g = parseSmiles(s)
            c = canonicalize(g)
            for seed in range(10):
                self.assertEqual(canonicalizeSmiles(writeSmiles(g, seed)), c)


    def testDeterministic(self):
        '''Test the same seed gives the same traversal.'''
        g = parseSmiles('CC(=O)Oc1ccccc1C(=O)O')
        self.assertEqual(writeSmiles(g, 17), writeSmiles(g, 17))


    def testVaries(self):
        '''Test different seeds give different traversals.'''
        g = parseSmiles('CC(=O)Oc1ccccc1C(=O)O')
        ss = set(writeSmiles(g, seed) for seed in range(20))
        self.assertGreater(len(ss), 1)


def isomorphic(g, h):
    return networkx.is_isomorphic(g.graph(), h.graph(),
                                  node_match=lambda a, b: a['atom'] == b['atom'],
                                  edge_match=lambda a, b: a['order'] == b['order'])


class TestRandomMolecules(unittest.TestCase):

    def testTraversalsRoundTrip(self):
        '''Test every traversal of random molecules parses back to the same molecule.'''
        for g in randomMolecules(1000, seed=42):
            c = canonicalize(g)
            for seed in range(10):
                s = writeSmiles(g, seed)
                h = parseSmiles(s, strict=True)
                self.assertTrue(isomorphic(g, h), s)
                self.assertEqual(canonicalize(h), c, s)


    def testIsomorphismCheck(self):
        '''Test the isomorphism check tells apart bond orders and elements.'''
        self.assertTrue(isomorphic(parseSmiles('OCC=C'), parseSmiles('C=CCO')))
        self.assertFalse(isomorphic(parseSmiles('OCC=C'), parseSmiles('OC=CC')))
        self.assertFalse(isomorphic(parseSmiles('OCCC'), parseSmiles('NCCC')))


    def testGenerator(self):
        '''Test the random molecules are valid, seeded and varied.'''
        gs = list(randomMolecules(200, seed=7))
        for g in gs:
            self.assertEqual(g.valenceViolations(), [])
        self.assertEqual([canonicalize(g) for g in gs],
                         [canonicalize(g) for g in randomMolecules(200, seed=7)])
        self.assertTrue(any(len(g.ringBondKeys()) > 0 for g in gs))
        self.assertTrue(any(DOUBLE in [g.bondOrder(*k) for k in g.bondKeys()] for g in gs))
        self.assertTrue(any(g.components() > 1 for g in gs))
