# Helper types
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

import numpy
from typing import List, Tuple, Union


# Random seeds: an integer, a numpy seed sequence, or None for fresh entropy
Seed = Union[int, numpy.random.SeedSequence, None]

# Token ids as fed to the model
TokenIds = List[int]

# Undirected bond keys, smaller atom index first
BondKey = Tuple[int, int]

# SMILES token sequences; concatenating the tokens gives back the string
TokenSequence = List[str]
