# Test hard-EM training
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
import numpy
from retromix import *


def syntheticSetup(K=3, nModes=3, nExamples=12, seed=0, dropout=0.1):
    es = makeSyntheticMultimodal(nModes, nExamples, seed)
    vocab = vocabularyFor(es)
    cfg = ModelConfig(vocab.size(), dModel=8, nHeads=2, nEncoderLayers=1, nDecoderLayers=1,
                      dFF=16, dropout=dropout, maxLen=16, K=K)
    return (encodePairs(vocab, es), vocab, initParams(cfg, seed))


class TestTrainConfig(unittest.TestCase):

    def testValidation(self):
        '''Test bad training configurations are rejected.'''
        with self.assertRaises(ValueError):
            TrainConfig(batchSize=0)
        with self.assertRaises(ValueError):
            TrainConfig(warmup=10, maxSteps=5)
        with self.assertRaises(ValueError):
            TrainConfig(phase='testing')
        with self.assertRaises(ValueError):
            TrainConfig(peakRate=0.0)


class TestTrace(unittest.TestCase):

    def testArgmin(self):
        '''Test consistency means choosing the least loss.'''
        t = HardEMTrace()
        t.append('a', 2, [2.0, 1.5, 3.0])
        self.assertTrue(t.isConsistent())
        t.append('b', 1, [2.0, 1.5, 3.0])
        self.assertFalse(t.isConsistent())


    def testTies(self):
        '''Test ties go to the first class.'''
        t = HardEMTrace()
        t.append('a', 2, [2.0, 1.5, 1.5])
        self.assertTrue(t.isConsistent())
        u = HardEMTrace()
        u.append('a', 3, [2.0, 1.5, 1.5])
        self.assertFalse(u.isConsistent())


    def testUsage(self):
        '''Test usage counts the selections.'''
        t = HardEMTrace()
        for (i, z) in enumerate([1, 3, 3, 2, 3]):
            t.append(f'e{i}', z, [0.0, 0.0, 0.0])
        self.assertEqual(t.usage(3), [1, 1, 3])
        self.assertEqual(t.chosen(), [1, 3, 3, 2, 3])
        self.assertEqual(len(t), 5)


class TestHardEM(unittest.TestCase):

    def testSelect(self):
        '''Test selection picks the most likely class.'''
        (data, _, params) = syntheticSetup()
        e = data[0]
        (z, losses) = selectLatent(params, e.source, e.target)
        self.assertEqual(z, int(numpy.argmin(losses)) + 1)
        self.assertTrue(numpy.allclose(losses, -latentLogProbs(params, e.source, e.target)))


    def testStepTrace(self):
        '''Test a step records a consistent choice per example.'''
        (data, _, params) = syntheticSetup()
        cfg = TrainConfig(batchSize=4, warmup=1, maxSteps=10)
        opt = Adam(inverseSqrtSchedule(cfg.peakRate, cfg.warmup))
        (_, trace, _) = hardEMStep(params, data[:4], cfg, 1, opt)
        self.assertEqual(len(trace), 4)
        self.assertTrue(trace.isConsistent())
        self.assertEqual([r.exampleId for r in trace.records()], [e.id for e in data[:4]])


    def testMeanLoss(self):
        '''Test the reported loss is the selected loss per target token.'''
        (data, _, params) = syntheticSetup()
        e = data[0]
        (z, losses) = selectLatent(params, e.source, e.target)
        cfg = TrainConfig(batchSize=1, warmup=1, maxSteps=10)
        (_, _, l) = hardEMStep(params, [e], cfg, 1, Adam(constantSchedule(1e-3)))
        self.assertAlmostEqual(l, losses[z - 1] / (len(e.target) - 1))


    def testOnlyChosenRowMoves(self):
        '''Test only the selected latent embedding changes, step after step.'''
        (data, _, params) = syntheticSetup(K=4)
        cfg = TrainConfig(batchSize=1, warmup=1, maxSteps=20)
        opt = Adam(constantSchedule(1e-2))
        for step in range(1, 13):
            before = params['latent'].copy()
            e = data[(step - 1) % len(data)]
            (_, trace, _) = hardEMStep(params, [e], cfg, step, opt)
            z = trace.chosen()[0]
            for k in range(4):
                if k == z - 1:
                    self.assertFalse(numpy.array_equal(params['latent'][k], before[k]))
                else:
                    self.assertTrue(numpy.array_equal(params['latent'][k], before[k]),
                                    f'step {step}: row {k + 1} moved, {z} chosen')


    def testNonFinite(self):
        '''Test a non-finite loss aborts the step.'''
        (data, _, params) = syntheticSetup()
        params['output.b'][0] = numpy.nan
        cfg = TrainConfig(batchSize=1, warmup=1, maxSteps=10)
        with self.assertRaises(NonFiniteLoss) as ctx:
            hardEMStep(params, data[:1], cfg, 1, Adam(constantSchedule(1e-3)))
        self.assertEqual(ctx.exception.exampleId(), data[0].id)


    def testEmptyBatch(self):
        '''Test an empty batch is rejected.'''
        (_, _, params) = syntheticSetup()
        with self.assertRaises(ValueError):
            hardEMStep(params, [], TrainConfig(), 1, Adam(constantSchedule(1e-3)))


    def testDropoutSeeds(self):
        '''Test dropout seeds depend on the seed, step and example.'''
        a = generatorFor(dropoutSeed(0, 1, 2)).random()
        self.assertEqual(a, generatorFor(dropoutSeed(0, 1, 2)).random())
        self.assertNotEqual(a, generatorFor(dropoutSeed(0, 2, 1)).random())


class TestTrainer(unittest.TestCase):

    def testMetrics(self):
        '''Test metrics are recorded every interval and at the end.'''
        (data, _, params) = syntheticSetup()
        cfg = TrainConfig(batchSize=4, warmup=2, maxSteps=7, interval=3)
        t = Trainer(params, cfg)
        t.train(data, data[:3])
        ms = t.metrics()
        self.assertEqual([m.step for m in ms], [3, 6, 7])
        self.assertEqual([sum(m.usage) for m in ms], [12, 12, 4])
        self.assertTrue(all(numpy.isfinite(m.validationNLL) for m in ms))
        self.assertEqual(t.optimiser().step(), 7)


    def testNoValidation(self):
        '''Test the validation NLL is NaN without validation data.'''
        (data, _, params) = syntheticSetup()
        self.assertTrue(numpy.isnan(validationNLL(params, [])))


    def testInputUnchanged(self):
        '''Test training leaves the initial parameters alone.'''
        (data, _, params) = syntheticSetup()
        before = params.copy()
        train(params, data, TrainConfig(batchSize=4, warmup=1, maxSteps=2))
        for n in params:
            self.assertTrue(numpy.array_equal(params[n], before[n]))


    def testDeterministic(self):
        '''Test the same seed gives the same model.'''
        (data, _, params) = syntheticSetup()
        cfg = TrainConfig(batchSize=4, warmup=1, maxSteps=3, seed=5)
        (p1, m1) = train(params, data, cfg)
        (p2, m2) = train(params, data, cfg)
        for n in p1:
            self.assertTrue(numpy.array_equal(p1[n], p2[n]))
        self.assertEqual([(m.step, m.trainLoss, m.usage) for m in m1],
                         [(m.step, m.trainLoss, m.usage) for m in m2])


    def testBatches(self):
        '''Test each epoch visits every example once.'''
        (data, _, params) = syntheticSetup()
        t = Trainer(params, TrainConfig(batchSize=5, warmup=1, maxSteps=3))
        bs = t.batches(12)
        epoch = next(bs) + next(bs) + next(bs)
        self.assertEqual(sorted(epoch), list(range(12)))


    def testLearns(self):
        '''Test training on a single example reduces its NLL.'''
        (data, _, params) = syntheticSetup(K=2, dropout=0.0)
        one = data[:1]
        before = validationNLL(params, one)
        (trained, _) = train(params, one, TrainConfig(batchSize=1, peakRate=1e-2, warmup=1, maxSteps=40))
        self.assertLess(validationNLL(trained, one), before)


    def testOutputs(self):
        '''Test metrics and checkpoints are written.'''
        (data, vocab, params) = syntheticSetup()
        cfg = TrainConfig(batchSize=4, warmup=1, maxSteps=4, interval=2,
                          checkpointInterval=2, phase=PRETRAIN)
        with TemporaryDirectory() as d:
            train(params, data, cfg, vocab=vocab, outputDir=d)
            self.assertTrue(os.path.exists(os.path.join(d, 'pretrain-step2.ckpt')))
            self.assertTrue(os.path.exists(os.path.join(d, 'pretrain-step4.ckpt')))
            ms = readMetrics(os.path.join(d, 'metrics.tsv'))
            (loaded, v, meta) = loadCheckpoint(os.path.join(d, 'pretrain-step4.ckpt'))
        self.assertEqual([m.step for m in ms], [2, 4])
        self.assertEqual(v, vocab)
        self.assertEqual(meta['step'], 4)
        self.assertEqual(meta['phase'], PRETRAIN)


class TestMetricsRecords(unittest.TestCase):

    def testRoundTrip(self):
        '''Test records survive formatting.'''
        m = MetricsRecord(100, FINETUNE, 1.25, 0.5, (3, 0, 5))
        self.assertEqual(MetricsRecord.parse(m.format()), m)


    def testStepsToReach(self):
        '''Test we find the first step reaching a target NLL.'''
        ms = [MetricsRecord(s, FINETUNE, 0.0, nll, (1,)) for (s, nll) in [(10, 2.0), (20, 1.0), (30, 0.5)]]
        self.assertEqual(stepsToReach(ms, 1.0), 20)
        self.assertIsNone(stepsToReach(ms, 0.1))


class TestSynthetic(unittest.TestCase):

    def testModes(self):
        '''Test each source appears once per mode, labelled with its mode.'''
        es = makeSyntheticMultimodal(3, 30, seed=4)
        self.assertEqual(len(es), 30)
        bySource = dict()
        for e in es:
            self.assertEqual(syntheticModeOf(e.sourceTokens(), e.targetTokens()), e.mode())
            bySource.setdefault(tuple(e.sourceTokens()), set()).add(e.mode())
        self.assertEqual(len(bySource), 10)
        for ms in bySource.values():
            self.assertEqual(ms, set([1, 2, 3]))


    def testDeterministic(self):
        '''Test the same seed gives the same task.'''
        a = makeSyntheticMultimodal(5, 20, seed=8)
        b = makeSyntheticMultimodal(5, 20, seed=8)
        self.assertEqual([(e.id(), e.sourceTokens(), e.targetTokens()) for e in a],
                         [(e.id(), e.sourceTokens(), e.targetTokens()) for e in b])


    def testSources(self):
        '''Test sources are distinct, in range, and unambiguous.'''
        ss = syntheticSources(50, seed=1)
        self.assertEqual(len(set(tuple(s) for s in ss)), 50)
        for s in ss:
            self.assertTrue(4 <= len(s) <= 7)
            self.assertEqual(len(set(tuple(t) for t in syntheticTargets(s, 5))), 5)


    def testTransformations(self):
        '''Test the individual modes.'''
        s = list('abcd')
        self.assertEqual(syntheticTargets(s, 5), [list('abcd'), list('dcba'), list('bcda'),
                                                   list('badc'), list('bcde')])
        self.assertEqual(syntheticModeOf(s, list('hhhh')), 0)


    def testModeRange(self):
        '''Test the number of modes is checked.'''
        with self.assertRaises(ValueError):
            makeSyntheticMultimodal(1, 10)
        with self.assertRaises(ValueError):
            makeSyntheticMultimodal(6, 10)


    def testEncoding(self):
        '''Test token pairs encode against their vocabulary.'''
        es = makeSyntheticMultimodal(2, 4, seed=0)
        vocab = vocabularyFor(es)
        ps = encodePairs(vocab, es)
        self.assertEqual(ps[0].target[0], BOS)
        self.assertEqual(ps[0].source[-1], EOS)
        with self.assertRaises(VocabMismatch):
            encodePairs(Vocabulary(['a']), es)
