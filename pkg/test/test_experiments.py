# Test mode coverage on the synthetic multi-modal task
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


# Set to True to run the full-size experiment, which takes many
# minutes on a CPU. The reduced form always runs.
FULL_EXPERIMENTS = False


def coverage(K, nExamples, steps, nHeldOut, dModel=16, seed=1):
    '''Train on the three-mode task and decode held-out sources greedily
    under every latent class.

    :returns: the distinct valid outputs per source, and the mean unique mode count'''
    es = makeSyntheticMultimodal(3, nExamples, seed)
    vocab = Vocabulary(SYNTHETIC_ALPHABET)
    cfg = ModelConfig(vocab.size(), dModel=dModel, nHeads=2, nEncoderLayers=1, nDecoderLayers=1,
                      dFF=2 * dModel, dropout=0.0, maxLen=12, K=K)
    (params, ms) = train(initParams(cfg, seed), encodePairs(vocab, es),
                         TrainConfig(batchSize=32, peakRate=3e-3, warmup=min(100, steps),
                                     maxSteps=steps, interval=steps, seed=seed))

    seen = set(tuple(e.sourceTokens()) for e in es)
    held = [s for s in syntheticSources(nHeldOut + len(seen), seed + 1) if tuple(s) not in seen][:nHeldOut]
    modes, outputs = [], []
    for s in held:
        x = vocab.encodeSource(s)
        ts = []
        for z in range(1, K + 1):
            h = greedyDecode(params, x, z)
            if h is not None:
                ts.append(''.join(vocab.decode(list(h.ids))))
        outputs.append(set(ts))
        modes.append(set(syntheticModeOf(s, list(t)) for t in ts) - set([UNKNOWN]))
    clf = syntheticClassifier()
    unique = uniqueReactionCount([sorted(o) for o in outputs], [''.join(s) for s in held], clf)
    return (ms, outputs, modes, unique)


class TestModeCoverage(unittest.TestCase):

    def testReduced(self):
        '''Test three latent classes decode more distinct outputs per source than one.'''
        (ms3, outputs3, _, _) = coverage(3, 300, 150, 10)
        (ms1, outputs1, _, _) = coverage(1, 300, 150, 10)
        self.assertTrue(numpy.isfinite(ms3[-1].trainLoss))
        self.assertEqual(len(outputs3), 10)
        for o in outputs3:
            self.assertLessEqual(len(o), 3)
        for o in outputs1:
            self.assertLessEqual(len(o), 1)
        self.assertGreater(numpy.mean([len(o) for o in outputs3]),
                           numpy.mean([len(o) for o in outputs1]))


    @unittest.skipUnless(FULL_EXPERIMENTS, 'full-size experiment')
    def testFull(self):
        '''Test three latent classes recover more modes than one.'''
        (_, _, modes3, unique3) = coverage(3, 5000, 3000, 200)
        (_, _, modes1, unique1) = coverage(1, 5000, 3000, 200)
        self.assertGreaterEqual(sum(1 for m in modes3 if len(m) >= 2) / len(modes3), 0.8)
        self.assertTrue(all(len(m) <= 1 for m in modes1))
        self.assertGreaterEqual(unique3 - unique1, 0.5)


class TestPretraining(unittest.TestCase):

    def setUp(self):
        self._vocab = Vocabulary(SYNTHETIC_ALPHABET)
        self._cfg = ModelConfig(self._vocab.size(), dModel=16, nHeads=2, nEncoderLayers=1, nDecoderLayers=1,
                                dFF=32, dropout=0.0, maxLen=12, K=2)


    def finetune(self, params, data, validation):
        return train(params, data, TrainConfig(batchSize=16, peakRate=3e-3, warmup=10,
                                               maxSteps=60, interval=10, seed=2),
                     validation)


    def testFewerSteps(self):
        '''Test a pre-trained model reaches the from-scratch validation loss no later.'''
        es = makeSyntheticMultimodal(2, 120, seed=4)
        (data, validation) = (encodePairs(self._vocab, es[:80]), encodePairs(self._vocab, es[80:]))

        init = initParams(self._cfg, 4)
        (pretrained, _) = train(init, encodePairs(self._vocab, makeSyntheticMultimodal(2, 600, seed=3)),
                                TrainConfig(batchSize=16, peakRate=3e-3, warmup=20, maxSteps=300,
                                            interval=300, seed=1, phase=PRETRAIN))
        (_, scratch) = self.finetune(init, data, validation)
        (_, warm) = self.finetune(pretrained, data, validation)

        target = scratch[-1].validationNLL
        self.assertEqual([m.step for m in warm], [10, 20, 30, 40, 50, 60])
        self.assertIsNotNone(stepsToReach(warm, target))
        self.assertLessEqual(stepsToReach(warm, target), stepsToReach(scratch, target))
        self.assertLess(warm[-1].validationNLL, target)
        self.assertLess(warm[0].validationNLL, scratch[0].validationNLL)
