# Test reaction examples and record files
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
import os
from tempfile import TemporaryDirectory
from retromix import *


# acetic acid and methylamine to N-methylacetamide, with a solvent
AMIDE = '[CH3:1][C:2](=[O:3])[OH:4].[NH2:5][CH3:6].ClCCl>>[CH3:1][C:2](=[O:3])[NH:5][CH3:6]'


class TestReaction(unittest.TestCase):

    def testParse(self):
        '''Test parsing a mapped reaction drops the reagent.'''
        r = parseReaction('r1', AMIDE, 3)
        self.assertEqual(r.id(), 'r1')
        self.assertEqual(r.reactionClass(), 3)
        self.assertEqual(len(r.reactants()), 2)
        self.assertTrue(r.hasAtomMaps())
        self.assertEqual(r.source(), DATASET)


    def testAgents(self):
        '''Test agents between the arrows are discarded.'''
        r = parseReaction('r2', 'CC(=O)O.CN>O>CC(=O)NC')
        self.assertEqual(r.reactants(), MoleculeSet.fromSmiles('CN.CC(=O)O'))


    def testUnmappedKeepsEverything(self):
        '''Test unmapped reactions keep all their reactants.'''
        r = parseReaction('r3', 'CC(=O)O.CN.ClCCl>>CC(=O)NC')
        self.assertEqual(len(r.reactants()), 3)


    def testModelViews(self):
        '''Test the model sees unmapped canonical strings.'''
        r = parseReaction('r1', AMIDE)
        self.assertNotIn(':', r.sourceSmiles())
        self.assertNotIn(':', r.targetSmiles())
        self.assertEqual(r.sourceSmiles(), canonicalizeSmiles('CC(=O)NC'))
        self.assertEqual(r.gold(), MoleculeSet.fromSmiles('CC(=O)O.CN'))
        self.assertEqual(r.sourceTokens(), tokenize(r.sourceSmiles()))


    def testUnmappedVerbatim(self):
        '''Test unmapped strings are kept as given.'''
        r = ReactionExample('u', 'OCC', 'C=C.O')
        self.assertEqual(r.sourceSmiles(), 'OCC')
        self.assertEqual(r.targetSmiles(), 'C=C.O')


    def testMalformed(self):
        '''Test malformed reactions are rejected.'''
        with self.assertRaises(ReactionFormatError):
            parseReaction('x', 'CC>>')
        with self.assertRaises(ReactionFormatError):
            parseReaction('x', 'CC>CC')
        with self.assertRaises(ReactionFormatError):
            ReactionExample('x', 'CC.O', 'CCO')
        with self.assertRaises(ReactionFormatError):
            ReactionExample('x', 'CC', 'CC', source='nowhere')


    def testRemoveReagents(self):
        '''Test reagent removal on molecule sets.'''
        ps = MoleculeSet.fromSmiles('[CH3:1][C:2](=[O:3])[NH:5][CH3:6]')
        rs = MoleculeSet.fromSmiles('[CH3:1][C:2](=[O:3])[OH:4].[NH2:5][CH3:6].ClCCl')
        self.assertEqual(len(removeReagents(rs, ps)), 2)


class TestRecords(unittest.TestCase):

    def testRecord(self):
        '''Test formatting and parsing a record.'''
        r = parseReactionRecord(f'r1\t7\t{AMIDE}')
        self.assertEqual(r.reactionClass(), 7)
        s = parseReactionRecord(formatReactionRecord(r))
        self.assertEqual(s.id(), 'r1')
        self.assertEqual(s.reactionClass(), 7)
        self.assertEqual(s.gold(), r.gold())


    def testNoClass(self):
        '''Test a dash means no class.'''
        r = parseReactionRecord('r1\t-\tCC(=O)O.CN>>CC(=O)NC')
        self.assertIsNone(r.reactionClass())


    def testSource(self):
        '''Test the optional source column.'''
        r = parseReactionRecord(f'r1\t-\tCC(=O)O.CN>>CC(=O)NC\t{RANDOM_PRETRAIN}')
        self.assertEqual(r.source(), RANDOM_PRETRAIN)
        self.assertTrue(formatReactionRecord(r, withSource=True).endswith(RANDOM_PRETRAIN))


    def testBadRecords(self):
        '''Test bad records are rejected.'''
        with self.assertRaises(ReactionFormatError):
            parseReactionRecord('r1\tCC>>CC')
        with self.assertRaises(ReactionFormatError):
            parseReactionRecord('r1\tseven\tCC>>CC')


    def testFiles(self):
        '''Test writing and reading a record file.'''
        rs = [parseReaction('a', AMIDE, 1), parseReaction('b', 'C=C.O>>CCO', 2)]
        with TemporaryDirectory() as d:
            fn = os.path.join(d, 'data.tsv')
            self.assertEqual(writeReactions(fn, rs), 2)
            ss = list(readReactions(fn))
        self.assertEqual([s.id() for s in ss], ['a', 'b'])
        self.assertEqual([s.reactionClass() for s in ss], [1, 2])


    def testFileErrors(self):
        '''Test errors carry the file name and line number.'''
        with TemporaryDirectory() as d:
            fn = os.path.join(d, 'data.tsv')
            with open(fn, 'w') as fh:
                fh.write('# comment\n\na\t1\tCCO>>CC=O\nb\t1\tC(>>CC\n')
            with self.assertRaises(DataFileError) as ctx:
                list(readReactions(fn))
        self.assertEqual(ctx.exception.line(), 4)
        self.assertIsInstance(ctx.exception.cause(), SmilesError)
