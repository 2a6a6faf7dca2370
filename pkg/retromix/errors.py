# Exceptions
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

from typing import Optional, Any


class RetroError(ValueError):
    '''The base class of all domain errors.

    Errors carry a kind (a short name for the fault), an optional byte
    offset into the string being processed, and a message. They are
    ValueErrors, so code that only cares that an input was bad can
    catch them generically.

    :param kind: the kind of error
    :param message: the message
    :param offset: (optional) the byte offset of the fault'''

    def __init__(self, kind: str, message: str, offset: Optional[int] = None):
        super().__init__(message if offset is None else f'{message} (at offset {offset})')
        self._kind = kind
        self._message = message
        self._offset = offset


    def kind(self) -> str:
        '''Return the kind of error.

        :returns: the kind'''
        return self._kind


    def offset(self) -> Optional[int]:
        '''Return the byte offset of the fault, if known.

        :returns: the offset or None'''
        return self._offset


    def message(self) -> str:
        '''Return the bare message, without offset.

        :returns: the message'''
        return self._message


# ---------- SMILES ----------

class SmilesError(RetroError):
    '''An error in lexing, parsing, or writing SMILES.'''
    pass


def emptyInput() -> SmilesError:
    return SmilesError('EmptyInput', 'Empty SMILES string', 0)

def unlexableCharacter(c: str, offset: int) -> SmilesError:
    return SmilesError('UnlexableCharacter', f'Unlexable character {c!r}', offset)

def unbalancedParenthesis(offset: int) -> SmilesError:
    return SmilesError('UnbalancedParenthesis', 'Unbalanced parenthesis', offset)

def unclosedRingBond(digit: str, offset: int) -> SmilesError:
    return SmilesError('UnclosedRingBond', f'Ring bond {digit} opened but never closed', offset)

def invalidAtomToken(token: str, offset: int) -> SmilesError:
    return SmilesError('InvalidAtomToken', f'Invalid atom {token!r}', offset)

def invalidBond(token: str, offset: int) -> SmilesError:
    return SmilesError('InvalidBond', f'Misplaced bond symbol {token!r}', offset)

def invalidRingClosure(digit: str, offset: int) -> SmilesError:
    return SmilesError('InvalidRingClosure', f'Ring bond {digit} closes onto an already-bonded atom', offset)

def emptyBranch(offset: int) -> SmilesError:
    return SmilesError('EmptyBranch', 'Branch contains no atoms', offset)

def valenceViolation(element: str, valence: float, atom: int, offset: Optional[int] = None) -> SmilesError:
    return SmilesError('ValenceViolation', f'Atom {atom} ({element}) has valence {valence:g}, more than allowed', offset)


# ---------- Reactions and templates ----------

class ReactionError(RetroError):
    '''An error in handling reactions, templates, or datasets.'''
    pass


class NoBreakableBond(ReactionError):
    '''Raised when a molecule has no acyclic single bond to break.'''

    def __init__(self, smiles: str):
        super().__init__('NoBreakableBond', f'No acyclic single bond in {smiles}')


class UnmappedAtoms(ReactionError):
    '''Raised when template extraction meets product atoms without maps.'''

    def __init__(self, message: str):
        super().__init__('UnmappedAtoms', message)


class NoChange(ReactionError):
    '''Raised when a reaction's two sides have no changed bonds or atoms.'''

    def __init__(self):
        super().__init__('NoChange', 'Reaction has no changed bonds or atoms')


class InsufficientGroups(ReactionError):
    '''Raised when a template split cannot reach its test fraction.'''

    def __init__(self, message: str):
        super().__init__('InsufficientGroups', message)


class ReactionFormatError(ReactionError):
    '''Raised for malformed reaction records.'''

    def __init__(self, message: str):
        super().__init__('ReactionFormat', message)


class DataFileError(RetroError):
    '''Wraps a domain error raised while reading a file, adding the
    file name and line number.

    :param path: the file
    :param line: the 1-based line number
    :param cause: the underlying error'''

    def __init__(self, path: Any, line: int, cause: Exception):
        super().__init__('DataFile', f'{path}:{line}: {cause}')
        self._path = path
        self._line = line
        self._cause = cause


    def path(self) -> Any:
        return self._path


    def line(self) -> int:
        return self._line


    def cause(self) -> Exception:
        return self._cause


# ---------- Models and training ----------

class ModelError(RetroError):
    '''An error in model inputs, parameters, or checkpoints.'''
    pass


class SequenceTooLong(ModelError):
    def __init__(self, n: int, maxLen: int):
        super().__init__('SequenceTooLong', f'Sequence of length {n} exceeds maximum {maxLen}')


class TokenOutOfRange(ModelError):
    def __init__(self, token: int, vocabSize: int):
        super().__init__('TokenOutOfRange', f'Token id {token} outside vocabulary of size {vocabSize}')


class CheckpointFormatError(ModelError):
    def __init__(self, message: str):
        super().__init__('CheckpointFormat', message)


class VocabMismatch(ModelError):
    def __init__(self, tokens):
        ts = ', '.join(sorted(tokens)[:10])
        super().__init__('VocabMismatch', f'Tokens not in vocabulary: {ts}')
        self._tokens = set(tokens)


    def tokens(self):
        return self._tokens


class TrainingError(RetroError):
    '''An error during training.'''
    pass


class NonFiniteLoss(TrainingError):
    '''Raised when an example's loss is not finite, aborting the step.

    :param exampleId: the offending example'''

    def __init__(self, exampleId: Any, loss: float):
        super().__init__('NonFiniteLoss', f'Non-finite loss {loss} for example {exampleId}')
        self._exampleId = exampleId


    def exampleId(self) -> Any:
        return self._exampleId


# ---------- Configuration ----------

class ConfigError(RetroError):
    '''An unknown or malformed configuration key.'''

    def __init__(self, message: str):
        super().__init__('Config', message)
