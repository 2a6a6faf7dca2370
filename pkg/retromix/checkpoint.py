# Model checkpoint files
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

# A checkpoint is a binary container holding, in order:
#
#   - the magic bytes RETROMIX
#   - the format version, as a little-endian uint32
#   - a length-prefixed JSON header with the model configuration and
#     any metadata (phase, step)
#   - a length-prefixed JSON list of the vocabulary's tokens
#   - the number of tensors, then for each tensor its length-prefixed
#     name, its number of dimensions, its dimensions, and its values as
#     little-endian float32 in row-major order
#
# Tensors are written in declaration order. All length prefixes are
# little-endian uint32.

import json
import logging
import struct
from typing import Dict, Any, Tuple, Optional, BinaryIO
import numpy
from retromix.errors import CheckpointFormatError
from retromix.model import ModelConfig, ModelParams, parameterShapes
from retromix.vocabulary import Vocabulary


logger = logging.getLogger(__name__)


MAGIC = b'RETROMIX'
VERSION = 1


# ---------- Low-level framing ----------

def _writeUint(fh: BinaryIO, n: int):
    fh.write(struct.pack('<I', n))


def _writeBlob(fh: BinaryIO, b: bytes):
    _writeUint(fh, len(b))
    fh.write(b)


def _readExactly(fh: BinaryIO, n: int) -> bytes:
    b = fh.read(n)
    if len(b) != n:
        raise CheckpointFormatError(f'Truncated checkpoint (wanted {n} bytes, got {len(b)})')
    return b


def _readUint(fh: BinaryIO) -> int:
    return struct.unpack('<I', _readExactly(fh, 4))[0]


def _readBlob(fh: BinaryIO) -> bytes:
    return _readExactly(fh, _readUint(fh))


def _readJson(fh: BinaryIO) -> Any:
    try:
        return json.loads(_readBlob(fh).decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f'Corrupt checkpoint header: {e}')


# ---------- Saving and loading ----------

def saveCheckpoint(path: str, params: ModelParams, vocab: Vocabulary,
                   meta: Optional[Dict[str, Any]] = None):
    '''Save a model's parameters and vocabulary.

    Tensors are stored as 32-bit floats, so a loaded model agrees with
    the saved one only to single precision.

    :param path: the file to write
    :param params: the parameters
    :param vocab: the vocabulary
    :param meta: (optional) metadata to store alongside'''
    cfg = params.config()
    if vocab.size() != cfg.vocabSize:
        raise CheckpointFormatError(f'Vocabulary of size {vocab.size()} does not match model size {cfg.vocabSize}')

    header = dict(model=cfg.toDict(), meta=meta or dict())
    with open(path, 'wb') as fh:
        fh.write(MAGIC)
        _writeUint(fh, VERSION)
        _writeBlob(fh, json.dumps(header, sort_keys=True).encode('utf-8'))
        _writeBlob(fh, json.dumps(vocab.tokens()).encode('utf-8'))
        names = params.names()
        _writeUint(fh, len(names))
        for n in names:
            t = params[n]
            _writeBlob(fh, n.encode('utf-8'))
            _writeUint(fh, t.ndim)
            for s in t.shape:
                _writeUint(fh, s)
            fh.write(t.astype('<f4').tobytes())
    logger.info(f'Wrote checkpoint {path}')


def loadCheckpoint(path: str) -> Tuple[ModelParams, Vocabulary, Dict[str, Any]]:
    '''Load a checkpoint, validating every tensor against the
    stored configuration.

    :param path: the file to read
    :returns: the parameters, the vocabulary, and the metadata'''
    with open(path, 'rb') as fh:
        if _readExactly(fh, len(MAGIC)) != MAGIC:
            raise CheckpointFormatError(f'{path} is not a checkpoint')
        v = _readUint(fh)
        if v != VERSION:
            raise CheckpointFormatError(f'Unsupported checkpoint version {v}')

        header = _readJson(fh)
        try:
            cfg = ModelConfig.fromDict(header['model'])
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointFormatError(f'Bad model configuration: {e}')
        vocab = Vocabulary(_readJson(fh))
        if vocab.size() != cfg.vocabSize:
            raise CheckpointFormatError(f'Vocabulary of size {vocab.size()} does not match model size {cfg.vocabSize}')

        expected = dict(parameterShapes(cfg))
        n = _readUint(fh)
        if n != len(expected):
            raise CheckpointFormatError(f'Expected {len(expected)} tensors, found {n}')
        ts = dict()
        for _ in range(n):
            name = _readBlob(fh).decode('utf-8')
            ndim = _readUint(fh)
            shape = tuple(_readUint(fh) for _ in range(ndim))
            if name not in expected:
                raise CheckpointFormatError(f'Unexpected tensor {name}')
            if shape != expected[name]:
                raise CheckpointFormatError(f'Tensor {name} has shape {shape}, expected {expected[name]}')
            size = int(numpy.prod(shape)) if ndim > 0 else 1
            data = numpy.frombuffer(_readExactly(fh, 4 * size), dtype='<f4')
            ts[name] = data.reshape(shape).astype(numpy.float64)
        if fh.read(1) != b'':
            raise CheckpointFormatError('Trailing data after last tensor')

    return (ModelParams(cfg, ts), vocab, header.get('meta', dict()))
