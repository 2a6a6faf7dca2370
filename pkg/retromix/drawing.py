# Standard methods for drawing evaluation results
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

import matplotlib.pyplot as plt
from typing import Sequence, Optional
from retromix.evaluation import LatentClassMatrix


def drawLatentClassMatrix(m: LatentClassMatrix, ax = None,
                          colourMap = 'Blues',
                          classLabels: Optional[Sequence[str]] = None,
                          showValues = False,
                          valueColour = 'k', valueFontSize = 5,
                          markDegenerate = True,
                          degenerateColour = 'r',
                          showColourBar = True):
    '''Draw the frequencies with which latent classes generate reaction
    classes as a heat map, latent classes down the side.

    Degenerate rows (latent classes that generated nothing classifiable)
    are all zero: they can be marked so they aren't mistaken for
    rows that simply favour no class.

    :param m: the matrix
    :param ax: the axes to draw into (default the current main axes)
    :param colourMap: the colour map (default 'Blues')
    :param classLabels: labels for the reaction classes (default class numbers)
    :param showValues: write the frequency in each cell (default False)
    :param valueColour: colour for the values if shown (default 'k')
    :param valueFontSize: font size for the values if shown (default 5)
    :param markDegenerate: mark degenerate rows (default True)
    :param degenerateColour: colour of the degenerate row labels (default 'r')
    :param showColourBar: add a colour bar (default True)
    '''

    # fill in defaults
    if ax is None:
        ax = plt.gca()
    K = m.numberOfLatentClasses()
    C = m.numberOfReactionClasses()
    if classLabels is None:
        classLabels = [f'{c}' for c in range(1, C + 1)]

    # the frequencies
    fs = m.frequencies()
    im = ax.imshow(fs, cmap=colourMap, vmin=0.0, vmax=1.0, aspect='auto')
    if showValues:
        for z in range(K):
            for c in range(C):
                ax.annotate(f'{fs[z, c]:.2f}', (c, z), ha='center', va='center',
                            fontsize=valueFontSize, color=valueColour)

    # configure the axes
    ax.set_xticks(range(C))
    ax.set_xticklabels(classLabels)
    ax.set_yticks(range(K))
    ax.set_yticklabels([f'z={z}' for z in range(1, K + 1)])
    ax.set_xlabel('Reaction class')
    ax.set_ylabel('Latent class')
    if markDegenerate:
        for (z, d) in enumerate(m.degenerateRows()):
            if d:
                ax.get_yticklabels()[z].set_color(degenerateColour)

    if showColourBar:
        plt.colorbar(im, ax=ax)
