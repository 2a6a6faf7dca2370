# Test the optimiser
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


class TestSchedules(unittest.TestCase):

    def testInverseSqrt(self):
        '''Test warm-up then decay, peaking at the end of warm-up.'''
        r = inverseSqrtSchedule(1e-3, 400)
        self.assertAlmostEqual(r(400), 1e-3)
        self.assertAlmostEqual(r(200), 5e-4)
        self.assertAlmostEqual(r(1600), 5e-4)
        self.assertAlmostEqual(r(0), r(1))
        self.assertTrue(all(r(s) <= 1e-3 for s in range(1, 2000)))


    def testBadWarmup(self):
        '''Test a warm-up of zero steps is rejected.'''
        with self.assertRaises(ValueError):
            inverseSqrtSchedule(1e-3, 0)


    def testConstant(self):
        '''Test the constant schedule.'''
        r = constantSchedule(0.5)
        self.assertEqual(r(1), 0.5)
        self.assertEqual(r(1000), 0.5)


class TestClipping(unittest.TestCase):

    def testClip(self):
        '''Test large gradients are scaled down to the maximum norm.'''
        cfg = ModelConfig(8, dModel=4, nHeads=1, nEncoderLayers=1, nDecoderLayers=1, dFF=4, K=2)
        g = initParams(cfg, 0)
        n = g.globalNorm()
        self.assertGreater(n, 1.0)
        self.assertAlmostEqual(clipGradients(g, 1.0), n)
        self.assertAlmostEqual(g.globalNorm(), 1.0)


    def testNoClip(self):
        '''Test small gradients are left alone.'''
        cfg = ModelConfig(8, dModel=4, nHeads=1, nEncoderLayers=1, nDecoderLayers=1, dFF=4, K=2)
        g = initParams(cfg, 0)
        g.scale(1e-3 / g.globalNorm())
        clipGradients(g, 1.0)
        self.assertAlmostEqual(g.globalNorm(), 1e-3)


class TestAdam(unittest.TestCase):

    def testFirstStep(self):
        '''Test the first update moves each parameter by the learning rate.'''
        ps = dict(x=numpy.array([3.0, -2.0]))
        opt = Adam(constantSchedule(0.1))
        opt.update(ps, dict(x=numpy.array([0.5, -4.0])))
        self.assertTrue(numpy.allclose(ps['x'], [2.9, -1.9]))
        self.assertEqual(opt.step(), 1)


    def testQuadratic(self):
        '''Test we minimise a quadratic.'''
        ps = dict(x=numpy.array([3.0, -2.0, 0.5]))
        opt = Adam(lambda step: 0.1 * 0.99 ** step)
        for _ in range(3000):
            opt.update(ps, dict(x=ps['x'].copy()))
        self.assertTrue(numpy.all(numpy.abs(ps['x']) < 1e-5))


    def testReset(self):
        '''Test resetting forgets the step count.'''
        opt = Adam(inverseSqrtSchedule(1e-3, 10))
        ps = dict(x=numpy.zeros(2))
        opt.update(ps, dict(x=numpy.ones(2)))
        self.assertAlmostEqual(opt.learningRate(), 2e-4)
        opt.reset()
        self.assertEqual(opt.step(), 0)
        self.assertAlmostEqual(opt.learningRate(), 1e-4)


    def testRowSparse(self):
        '''Test rows of row-sparse tensors without gradient keep their values and moments.'''
        ps = dict(latent=numpy.ones((3, 2)), w=numpy.ones(2))
        opt = Adam(constantSchedule(0.1))
        opt.update(ps, dict(latent=numpy.array([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]]), w=numpy.ones(2)))
        self.assertTrue(numpy.allclose(ps['latent'][0], 0.9))
        opt.update(ps, dict(latent=numpy.array([[0.0, 0.0], [0.0, 0.0], [1.0, -1.0]]), w=numpy.zeros(2)))
        self.assertTrue(numpy.allclose(ps['latent'][0], 0.9))
        self.assertTrue(numpy.all(ps['latent'][1] == 1.0))
        self.assertFalse(numpy.allclose(ps['latent'][2], 1.0))

        # dense tensors keep moving on momentum
        self.assertTrue(numpy.all(ps['w'] < 0.9))


    def testDense(self):
        '''Test tensors not named as row-sparse are updated whole.'''
        ps = dict(latent=numpy.ones((2, 2)))
        opt = Adam(constantSchedule(0.1), rowSparse=())
        opt.update(ps, dict(latent=numpy.array([[1.0, 1.0], [0.0, 0.0]])))
        opt.update(ps, dict(latent=numpy.zeros((2, 2))))
        self.assertTrue(numpy.all(ps['latent'][0] < 0.9))
