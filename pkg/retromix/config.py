# Run configurations
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

# A run configuration is a flat set of typed keys. Values come from the
# defaults, then a configuration file of "key = value" lines (with "#"
# comments), then command-line flags named --key-name for key_name.
# Later sources win. Environment variables are never read.

import argparse
from pathlib import Path
from typing import Dict, Any, Tuple, Callable, Optional, Union, Iterable
from retromix.errors import ConfigError
from retromix.model import ModelConfig
from retromix.training import TrainConfig, FINETUNE
from retromix.decode import BeamConfig


def _parseBool(s: str) -> bool:
    if s.lower() in ['true', 'yes', '1', 'on']:
        return True
    if s.lower() in ['false', 'no', '0', 'off']:
        return False
    raise ValueError(f'Not a boolean: {s}')


# The schema: key -> (parser, default, help)
SCHEMA: Dict[str, Tuple[Callable[[str], Any], Any, str]] = {
    # model
    'd_model': (int, 128, 'model dimension'),
    'n_heads': (int, 4, 'attention heads'),
    'n_enc_layers': (int, 3, 'encoder layers'),
    'n_dec_layers': (int, 3, 'decoder layers'),
    'd_ff': (int, 256, 'feed-forward hidden size'),
    'dropout': (float, 0.1, 'dropout probability'),
    'max_len': (int, 256, 'longest sequence, sentinels included'),
    'latent_classes': (int, 5, 'number of latent classes K'),

    # training
    'batch_size': (int, 32, 'examples per step'),
    'peak_rate': (float, 1e-3, 'peak learning rate'),
    'warmup': (int, 400, 'warm-up steps'),
    'clip_norm': (float, 1.0, 'gradient clipping norm'),
    'steps': (int, 4000, 'training steps per phase'),
    'interval': (int, 100, 'steps between metrics records'),
    'checkpoint_interval': (int, 0, 'steps between checkpoints, 0 for final only'),

    # decoding
    'beam_width': (int, 10, 'beam width'),
    'max_decode_length': (int, 200, 'longest decoded sequence'),
    'alpha': (float, 0.0, 'length-normalisation exponent'),
    'top_k': (int, 10, 'predictions per source'),

    # augmentation and splitting
    'cap': (int, 10, 'pre-training examples per target molecule'),
    'embedding_cap': (int, 256, 'embeddings tried per template application'),
    'variants': (int, 1, 'SMILES re-traversals added per training example'),
    'test_fraction': (float, 0.1, 'fraction of data held out for testing'),
    'rare_threshold': (int, 10, 'template count below which reactions are rare'),

    # reproducibility
    'seed': (int, 0, 'random seed'),
    'workers': (int, 1, 'worker processes for data-parallel sections'),
    'progress': (_parseBool, False, 'show progress bars'),
}


def flagName(key: str) -> str:
    return '--' + key.replace('_', '-')


class RunConfig:
    '''A resolved run configuration.

    :param values: (optional) values overriding the defaults'''

    def __init__(self, values: Optional[Dict[str, Any]] = None):
        self._values: Dict[str, Any] = {k: d for (k, (_, d, _)) in SCHEMA.items()}
        if values is not None:
            for (k, v) in values.items():
                self.set(k, v)


    # ---------- Access ----------

    def set(self, key: str, value: Any):
        '''Set a key, parsing string values.

        :param key: the key
        :param value: the value, or its string form'''
        if key not in SCHEMA:
            raise ConfigError(f'Unknown configuration key {key}')
        (parser, _, _) = SCHEMA[key]
        if isinstance(value, str):
            try:
                value = parser(value.strip())
            except ValueError:
                raise ConfigError(f'Bad value {value!r} for {key}')
        self._values[key] = value


    def __getitem__(self, key: str) -> Any:
        if key not in SCHEMA:
            raise ConfigError(f'Unknown configuration key {key}')
        return self._values[key]


    def keys(self) -> Iterable[str]:
        return SCHEMA.keys()


    def __eq__(self, other) -> bool:
        return isinstance(other, RunConfig) and self._values == other._values


    # ---------- Sources ----------

    def loadFile(self, path: Union[str, Path]):
        '''Update from a configuration file.

        :param path: the file'''
        with open(path, 'r', encoding='utf-8') as fh:
            for (n, line) in enumerate(fh, start=1):
                line = line.split('#', 1)[0].strip()
                if len(line) == 0:
                    continue
                if '=' not in line:
                    raise ConfigError(f'{path}:{n}: expected key = value')
                (k, v) = line.split('=', 1)
                try:
                    self.set(k.strip(), v)
                except ConfigError as e:
                    raise ConfigError(f'{path}:{n}: {e.message()}')


    @staticmethod
    def addArguments(parser: argparse.ArgumentParser):
        '''Add a --config option and a flag for every key to a parser.
        Flags default to None so that unset ones don't override.

        :param parser: the parser'''
        parser.add_argument('--config', metavar='FILE', help='configuration file')
        for (k, (_, d, h)) in SCHEMA.items():
            parser.add_argument(flagName(k), dest=k, metavar='V', default=None,
                                help=f'{h} (default {d})')


    @staticmethod
    def fromArguments(args: argparse.Namespace) -> 'RunConfig':
        '''Resolve a configuration from parsed arguments: the defaults,
        then any configuration file, then any flags.

        :param args: the arguments
        :returns: the configuration'''
        rc = RunConfig()
        if getattr(args, 'config', None) is not None:
            rc.loadFile(args.config)
        for k in SCHEMA:
            v = getattr(args, k, None)
            if v is not None:
                rc.set(k, v)
        return rc


    # ---------- Output ----------

    def format(self) -> str:
        '''Return the configuration as a file that loads back to it.'''
        lines = [f'{k} = {self._values[k]}' for k in SCHEMA]
        return '\n'.join(lines) + '\n'


    def write(self, path: Union[str, Path]):
        with open(path, 'w', encoding='utf-8') as fh:
            fh.write(self.format())


    # ---------- Typed configurations ----------

    def modelConfig(self, vocabSize: int) -> ModelConfig:
        '''Build the model configuration.

        :param vocabSize: the vocabulary size
        :returns: the configuration'''
        try:
            return ModelConfig(vocabSize, self['d_model'], self['n_heads'],
                               self['n_enc_layers'], self['n_dec_layers'],
                               self['d_ff'], self['dropout'], self['max_len'],
                               self['latent_classes'])
        except ValueError as e:
            raise ConfigError(str(e))


    def trainConfig(self, phase: str = FINETUNE) -> TrainConfig:
        '''Build the training configuration for a phase.

        :param phase: (optional) the phase (defaults to fine-tuning)
        :returns: the configuration'''
        try:
            return TrainConfig(self['batch_size'], self['peak_rate'], self['warmup'],
                               self['clip_norm'], self['steps'], self['interval'],
                               self['checkpoint_interval'], self['seed'], phase)
        except ValueError as e:
            raise ConfigError(str(e))


    def beamConfig(self) -> BeamConfig:
        try:
            return BeamConfig(self['beam_width'], self['max_decode_length'], self['alpha'])
        except ValueError as e:
            raise ConfigError(str(e))
