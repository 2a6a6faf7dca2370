# Test run configurations
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
import argparse
from tempfile import TemporaryDirectory
from retromix import *


def parsed(argv):
    p = argparse.ArgumentParser()
    RunConfig.addArguments(p)
    return p.parse_args(argv)


class TestRunConfig(unittest.TestCase):

    def testDefaults(self):
        '''Test the defaults are the schema's.'''
        rc = RunConfig()
        self.assertEqual(rc['latent_classes'], 5)
        self.assertEqual(rc['beam_width'], 10)
        self.assertEqual(rc['progress'], False)
        self.assertEqual(set(rc.keys()), set(SCHEMA.keys()))


    def testSet(self):
        '''Test string values are parsed to the key's type.'''
        rc = RunConfig({'d_model': '64', 'dropout': '0.2', 'progress': 'yes'})
        self.assertEqual(rc['d_model'], 64)
        self.assertEqual(rc['dropout'], 0.2)
        self.assertTrue(rc['progress'])


    def testBadKeys(self):
        '''Test unknown keys and bad values are rejected.'''
        rc = RunConfig()
        with self.assertRaises(ConfigError):
            rc.set('colour', 'blue')
        with self.assertRaises(ConfigError):
            rc['colour']
        with self.assertRaises(ConfigError):
            rc.set('steps', 'many')
        with self.assertRaises(ConfigError):
            rc.set('progress', 'perhaps')


    def testFlagName(self):
        '''Test flags are the keys with dashes.'''
        self.assertEqual(flagName('max_decode_length'), '--max-decode-length')


    def testLoadFile(self):
        '''Test reading a file with comments and blank lines.'''
        with TemporaryDirectory() as d:
            fn = os.path.join(d, 'run.conf')
            with open(fn, 'w') as fh:
                fh.write('# a run\n\nsteps = 50   # short\nlatent_classes=3\n')
            rc = RunConfig()
            rc.loadFile(fn)
        self.assertEqual(rc['steps'], 50)
        self.assertEqual(rc['latent_classes'], 3)


    def testLoadFileErrors(self):
        '''Test file errors carry the line number.'''
        with TemporaryDirectory() as d:
            fn = os.path.join(d, 'run.conf')
            with open(fn, 'w') as fh:
                fh.write('steps = 50\nwidth = 3\n')
            with self.assertRaises(ConfigError) as ctx:
                RunConfig().loadFile(fn)
            self.assertIn(':2:', str(ctx.exception))

            with open(fn, 'w') as fh:
                fh.write('steps 50\n')
            with self.assertRaises(ConfigError):
                RunConfig().loadFile(fn)


    def testPrecedence(self):
        '''Test flags win over the file, which wins over the defaults.'''
        with TemporaryDirectory() as d:
            fn = os.path.join(d, 'run.conf')
            with open(fn, 'w') as fh:
                fh.write('steps = 50\nseed = 7\n')
            rc = RunConfig.fromArguments(parsed(['--config', fn, '--seed', '9']))
        self.assertEqual(rc['steps'], 50)
        self.assertEqual(rc['seed'], 9)
        self.assertEqual(rc['warmup'], 400)


    def testFormat(self):
        '''Test a written configuration loads back unchanged.'''
        rc = RunConfig({'steps': 12, 'alpha': 0.5, 'progress': True})
        with TemporaryDirectory() as d:
            fn = os.path.join(d, 'run.conf')
            rc.write(fn)
            rc2 = RunConfig()
            rc2.loadFile(fn)
        self.assertEqual(rc, rc2)


class TestTypedConfigs(unittest.TestCase):

    def testModel(self):
        '''Test building the model configuration.'''
        rc = RunConfig({'d_model': 16, 'n_heads': 2, 'latent_classes': 3})
        cfg = rc.modelConfig(20)
        self.assertEqual(cfg.vocabSize, 20)
        self.assertEqual(cfg.dModel, 16)
        self.assertEqual(cfg.K, 3)


    def testBadModel(self):
        '''Test inconsistent model settings are configuration errors.'''
        rc = RunConfig({'d_model': 10, 'n_heads': 3})
        with self.assertRaises(ConfigError):
            rc.modelConfig(20)


    def testTrain(self):
        '''Test building the training configuration for each phase.'''
        rc = RunConfig({'batch_size': 4})
        self.assertEqual(rc.trainConfig().phase, FINETUNE)
        self.assertEqual(rc.trainConfig(PRETRAIN).phase, PRETRAIN)
        self.assertEqual(rc.trainConfig().batchSize, 4)
        with self.assertRaises(ConfigError):
            RunConfig({'batch_size': 0}).trainConfig()


    def testBeam(self):
        '''Test building the beam configuration.'''
        bc = RunConfig({'beam_width': 3, 'alpha': 0.6}).beamConfig()
        self.assertEqual(bc.beamWidth, 3)
        self.assertEqual(bc.alpha, 0.6)
        with self.assertRaises(ConfigError):
            RunConfig({'beam_width': 0}).beamConfig()
