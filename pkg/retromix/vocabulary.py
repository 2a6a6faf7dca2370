# Token vocabularies
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

from typing import List, Iterable, Dict, Set
from retromix.types import TokenSequence, TokenIds
from retromix.errors import VocabMismatch, TokenOutOfRange


# Reserved tokens and their ids
PAD = 0
BOS = 1
EOS = 2
RESERVED = ['<pad>', '<s>', '</s>']


class Vocabulary:
    '''A mapping between tokens and integer ids.

    Ids 0, 1 and 2 are reserved for padding and the begin and end
    sentinels. The remaining tokens are numbered in the order given,
    which for vocabularies built from a corpus is sorted order.

    :param tokens: the (non-reserved) tokens'''

    def __init__(self, tokens: Iterable[str] = ()):
        self._tokens: List[str] = list(RESERVED)
        self._ids: Dict[str, int] = {t: i for (i, t) in enumerate(RESERVED)}
        for t in tokens:
            if t in self._ids:
                raise ValueError(f'Duplicate token {t!r}')
            self._ids[t] = len(self._tokens)
            self._tokens.append(t)


    @staticmethod
    def fromSequences(seqs: Iterable[TokenSequence]) -> 'Vocabulary':
        '''Build a vocabulary covering every token of some sequences.

        :param seqs: the token sequences
        :returns: the vocabulary'''
        ts: Set[str] = set()
        for s in seqs:
            ts.update(s)
        return Vocabulary(sorted(ts - set(RESERVED)))


    # ---------- Access ----------

    def size(self) -> int:
        '''Return the number of ids, reserved ones included.

        :returns: the vocabulary size'''
        return len(self._tokens)


    def __len__(self) -> int:
        return self.size()


    def tokens(self) -> List[str]:
        '''Return the non-reserved tokens in id order.

        :returns: the tokens'''
        return self._tokens[len(RESERVED):]


    def __contains__(self, t: str) -> bool:
        return t in self._ids


    def idOf(self, t: str) -> int:
        return self._ids[t]


    def tokenOf(self, i: int) -> str:
        if not (0 <= i < len(self._tokens)):
            raise TokenOutOfRange(i, len(self._tokens))
        return self._tokens[i]


    def missing(self, seqs: Iterable[TokenSequence]) -> Set[str]:
        '''Return the tokens of some sequences that the vocabulary
        doesn't cover.

        :param seqs: the sequences
        :returns: the missing tokens'''
        ms = set()
        for s in seqs:
            ms.update(t for t in s if t not in self._ids)
        return ms


    def requireCovers(self, seqs: Iterable[TokenSequence]):
        '''Raise an exception if any token of the sequences is missing.

        :param seqs: the sequences'''
        ms = self.missing(seqs)
        if len(ms) > 0:
            raise VocabMismatch(ms)


    # ---------- Encoding ----------

    def encodeSource(self, ts: TokenSequence) -> TokenIds:
        '''Encode a source sequence: its tokens followed by the end sentinel.

        :param ts: the tokens
        :returns: the ids'''
        try:
            return [self._ids[t] for t in ts] + [EOS]
        except KeyError as e:
            raise VocabMismatch([e.args[0]])


    def encodeTarget(self, ts: TokenSequence) -> TokenIds:
        '''Encode a target sequence: the begin sentinel, its tokens,
        and the end sentinel.

        :param ts: the tokens
        :returns: the ids'''
        return [BOS] + self.encodeSource(ts)


    def decode(self, ids: TokenIds) -> TokenSequence:
        '''Decode ids back to tokens, dropping sentinels and padding.

        :param ids: the ids
        :returns: the tokens'''
        return [self.tokenOf(i) for i in ids if i not in (PAD, BOS, EOS)]


    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens


    def __repr__(self) -> str:
        return f'Vocabulary({self.size()} tokens)'
