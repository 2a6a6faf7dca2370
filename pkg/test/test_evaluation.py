# Test evaluation and reaction classifiers
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
import numpy
from retromix import *


AMIDE = '[CH3:1][C:2](=[O:3])[OH:4].[NH2:5][CH3:6]>>[CH3:1][C:2](=[O:3])[NH:5][CH3:6]'
AMIDE2 = '[CH3:1][C:2](=[O:3])[OH:4].[NH2:5][CH2:6][CH3:7]>>[CH3:1][C:2](=[O:3])[NH:5][CH2:6][CH3:7]'
ESTER = '[CH3:1][C:2](=[O:3])[OH:4].[OH:5][CH3:6]>>[CH3:1][C:2](=[O:3])[O:5][CH3:6]'
BENZAMIDE = ('[cH:7]1[cH:8][cH:9][cH:10][cH:11][c:1]1[C:2](=[O:3])[OH:4].[NH2:5][CH3:6]>>'
             '[cH:7]1[cH:8][cH:9][cH:10][cH:11][c:1]1[C:2](=[O:3])[NH:5][CH3:6]')


class TestAccuracy(unittest.TestCase):

    def testRanks(self):
        '''Test accuracy at each rank with the gold answer third.'''
        gold = [MoleculeSet.fromSmiles('CC(=O)O.CN')]
        ps = [['CCO', 'CC', 'NC.OC(C)=O', 'C']]
        accs = topKAccuracy(ps, gold, ks=[1, 2, 3, 10])
        self.assertEqual(accs, [0.0, 0.0, 1.0, 1.0])


    def testAverage(self):
        '''Test accuracy is averaged over examples.'''
        gold = [MoleculeSet.fromSmiles('CCO'), MoleculeSet.fromSmiles('CC')]
        ps = [[Prediction('OCC', -1.0, 1)], [Prediction('CCC', -1.0, 1)]]
        self.assertEqual(topKAccuracy(ps, gold, ks=[1]), [0.5])


    def testInvalidIgnored(self):
        '''Test invalid predictions never match.'''
        gold = [MoleculeSet.fromSmiles('CCO')]
        self.assertEqual(topKAccuracy([['C(', 'CCO']], gold, ks=[1, 2]), [0.0, 1.0])


    def testEdges(self):
        '''Test empty inputs and mismatched lengths.'''
        self.assertEqual(topKAccuracy([], [], ks=[1, 5]), [0.0, 0.0])
        with self.assertRaises(ValueError):
            topKAccuracy([['C']], [])


class TestDiversity(unittest.TestCase):

    def testUnique(self):
        '''Test counting distinct classes in the top predictions.'''
        clf = syntheticClassifier()
        ps = [['abcd', 'dcba', 'bcda', 'abcd'], ['efgh', 'fghe']]
        self.assertAlmostEqual(uniqueReactionCount(ps, ['abcd', 'efgh'], clf), (3 + 2) / 2)


    def testUniqueCutoff(self):
        '''Test only the first k predictions count.'''
        clf = syntheticClassifier()
        ps = [['abcd', 'dcba', 'bcda']]
        self.assertEqual(uniqueReactionCount(ps, ['abcd'], clf, k=1), 1.0)


    def testUniqueEmpty(self):
        '''Test examples without predictions are left out.'''
        clf = syntheticClassifier()
        self.assertEqual(uniqueReactionCount([[], ['abcd']], ['abcd', 'abcd'], clf), 1.0)
        self.assertEqual(uniqueReactionCount([[]], ['abcd'], clf), 0.0)


    def testUnknownIsNotAClass(self):
        '''Test unclassifiable predictions add no class but don't drop the count below one.'''
        clf = FunctionClassifier(lambda s, t: 1 if t == 'CC' else UNKNOWN, 'first', 1)
        self.assertEqual(uniqueReactionCount([['CC', 'CCC']], ['CCCC'], clf), 1.0)
        self.assertEqual(uniqueReactionCount([['CCC', 'CCO']], ['CCCC'], clf), 1.0)


    def testBound(self):
        '''Test the count lies between one and the smaller of k and the classes.'''
        clf = syntheticClassifier()
        ps = [['abcd', 'dcba', 'bcda', 'badc', 'bcde', 'aaaa', 'abc']]
        for k in range(1, 8):
            n = uniqueReactionCount(ps, ['abcd'], clf, k=k)
            self.assertGreaterEqual(n, 1.0)
            self.assertLessEqual(n, min(k, clf.numberOfClasses()))


    def testInvalidSkipped(self):
        '''Test invalid predictions neither count nor use up the top k.'''
        clf = FunctionClassifier(lambda s, t: len(t), 'length', 5)
        self.assertEqual(uniqueReactionCount([['C(', 'CC', 'CCC']], ['CCCC'], clf, k=2), 2.0)
        self.assertEqual(uniqueReactionCount([['C(', 'C1CC'], ['CC']], ['CCCC', 'CCCC'], clf), 1.0)
        self.assertTrue(clf.accepts('CC'))
        self.assertFalse(clf.accepts('C('))
        self.assertFalse(syntheticClassifier().accepts('CC(=O)O'))


    def testSyntheticClassifier(self):
        '''Test the synthetic classifier recovers modes.'''
        clf = syntheticClassifier()
        self.assertEqual(clf.numberOfClasses(), 5)
        self.assertEqual(clf.classify('abcd', 'badc'), 4)
        self.assertEqual(clf.classify('abcd', 'bcde'), 5)
        self.assertEqual(clf.classify('abcd', 'aaaa'), UNKNOWN)


class TestLatentClassMatrix(unittest.TestCase):

    def testRows(self):
        '''Test rows are normalised and empty rows flagged.'''
        m = LatentClassMatrix(numpy.array([[2, 2, 0], [0, 0, 0], [0, 1, 3]]))
        self.assertEqual(m.degenerateRows(), [False, True, False])
        fs = m.frequencies()
        self.assertTrue(numpy.allclose(fs[0], [0.5, 0.5, 0.0]))
        self.assertTrue(numpy.allclose(fs[1], 0.0))
        self.assertAlmostEqual(fs[2].sum(), 1.0)


    def testCSV(self):
        '''Test the CSV form.'''
        m = LatentClassMatrix(numpy.array([[1, 1], [0, 0]]))
        lines = m.csv().splitlines()
        self.assertEqual(lines[0], 'z,class1,class2,degenerate')
        self.assertEqual(lines[1], '1,0.500000,0.500000,0')
        self.assertEqual(lines[2], '2,0.000000,0.000000,1')


    def testFromPools(self):
        '''Test counting the classes of each latent class's predictions.'''
        clf = syntheticClassifier()
        pools = [{1: ['abcd', 'dcba'], 2: ['dcba', 'zzzz'], 3: []}]
        m = latentClassMatrix(pools, ['abcd'], clf, 3)
        self.assertEqual(m.counts()[0].tolist(), [1, 1, 0, 0, 0])
        self.assertEqual(m.counts()[1].tolist(), [0, 1, 0, 0, 0])
        self.assertEqual(m.degenerateRows(), [False, False, True])


class TestReport(unittest.TestCase):

    def testInvalidRate(self):
        '''Test the invalid rate counts every hypothesis.'''
        pools = [{1: ['CCO', 'C('], 2: ['CC']}, {1: ['C1CC']}]
        self.assertEqual(invalidRate(pools), 0.5)
        self.assertEqual(invalidRate([]), 0.0)


    def testEvaluate(self):
        '''Test the full report.'''
        gold = [MoleculeSet.fromSmiles('CCO')]
        pools = [{1: ['CCO', 'C('], 2: ['CC', 'O']}]
        r = evaluate([['CC', 'OCC']], gold, ['CC(=O)O'], pools)
        self.assertEqual(r.examples, 1)
        self.assertEqual(r.accuracies[1], 0.0)
        self.assertEqual(r.accuracies[2], 1.0)
        self.assertEqual(r.invalidRate, 0.25)
        self.assertIsNone(r.uniqueClasses)
        self.assertIsNone(r.matrix)


    def testText(self):
        '''Test the text and TSV forms.'''
        r = EvalReport(10, {1: 0.5, 3: 0.75}, 0.1, 2.5, 'test')
        self.assertIn('Top-1 accuracy: 50.0%', r.text())
        self.assertIn('(test)', r.text())
        self.assertEqual(r.tsv().splitlines(),
                         ['metric\tvalue', 'examples\t10', 'top1\t0.500000', 'top3\t0.750000',
                          'invalid\t0.100000', 'unique\t2.500000'])


    def testWithClassifier(self):
        '''Test the report carries diversity statistics given a classifier.'''
        clf = syntheticClassifier()
        gold = [MoleculeSet.fromSmiles('C')]
        r = evaluate([['abcd', 'dcba']], gold, ['abcd'], [{1: ['abcd'], 2: ['dcba']}], clf, 2)
        self.assertEqual(r.uniqueClasses, 2.0)
        self.assertEqual(r.classifier, clf.label())
        self.assertEqual(r.matrix.degenerateRows(), [False, False])


class TestTemplateProxyClassifier(unittest.TestCase):

    def setUp(self):
        self._clf = templateProxyClassifier([parseReaction('a', AMIDE, 1),
                                             parseReaction('b', AMIDE2, 1),
                                             parseReaction('c', ESTER, 2),
                                             parseReaction('d', ESTER)])


    def testClasses(self):
        '''Test unlabelled reactions are ignored.'''
        self.assertEqual(self._clf.numberOfClasses(), 2)
        self.assertEqual(len(self._clf.templates()), 2)
        self.assertEqual(self._clf.templates()[0].count(), 2)


    def testExact(self):
        '''Test training reactions get their own class.'''
        self.assertEqual(self._clf.classify('CC(=O)NC', 'CN.CC(=O)O'), 1)
        self.assertEqual(self._clf.classify('COC(C)=O', 'CC(=O)O.CO'), 2)


    def testRewrite(self):
        '''Test unseen reactions are classified by template.'''
        self.assertEqual(self._clf.classify('CCC(=O)NCC', 'CCC(=O)O.CCN'), 1)
        self.assertEqual(self._clf.classify('CCC(=O)OCC', 'CCC(=O)O.CCO'), 2)


    def testUnknown(self):
        '''Test unexplained and invalid reactions are unknown.'''
        self.assertEqual(self._clf.classify('CCC(=O)NCC', 'CCCC'), UNKNOWN)
        self.assertEqual(self._clf.classify('CC(', 'CC'), UNKNOWN)


    def testSignature(self):
        '''Test reactions no template rewrites are classified by their changed bonds.'''
        self.assertEqual(self._clf.classify('CNC(=O)c1ccccc1', 'CN.O=C(O)c1ccccc1'), 1)


    def testSignatureNeedsAtoms(self):
        '''Test reactants missing product atoms aren't classified by changed bonds.'''
        self.assertEqual(self._clf.classify('CNC(=O)c1ccccc1', 'CO.O=C(O)c1ccccc1'), UNKNOWN)


    def testEmptySignature(self):
        '''Test changes that cancel out leave a reaction unknown.'''
        self.assertEqual(self._clf.classify('COC(=O)c1ccccc1', 'CO.O=C(O)c1ccccc1'), UNKNOWN)


    def testUnseenTemplate(self):
        '''Test a template not seen in training takes the class of its changed bonds.'''
        t = extractTemplate(parseReaction('e', BENZAMIDE))
        self.assertNotIn(t.id(), [u.id() for u in self._clf.templates()])
        self.assertEqual(self._clf.classOfTemplate(t), 1)
