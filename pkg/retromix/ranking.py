# Canonical ranking of attributed graphs
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

from collections import Counter
from typing import Callable, Dict, Hashable, List
import networkx
from retromix.utils import denseRank


# Edge labelling function
EdgeKey = Callable[[int, int], Hashable]


def _refine(G: networkx.Graph, nodes: List[int],
            rank: Dict[int, int], edgeKey: EdgeKey) -> Dict[int, int]:
    '''Refine a ranking by repeatedly extending each node's key with the
    sorted ranks of its neighbours (and the labels of the connecting
    edges) until the number of classes stops growing.

    Each new key starts with the old rank, so the refined ranking never
    re-orders nodes that were already distinguished.

    :param G: the graph
    :param nodes: the nodes in index order
    :param rank: the starting (dense) ranks
    :param edgeKey: function returning the label of an edge
    :returns: the refined ranks'''
    classes = len(set(rank.values()))
    while True:
        keys = []
        for n in nodes:
            ns = sorted((rank[m], edgeKey(n, m)) for m in G.neighbors(n))
            keys.append((rank[n], tuple(ns)))
        new = dict(zip(nodes, denseRank(keys)))
        newClasses = len(set(new.values()))
        if newClasses == classes:
            return new
        rank, classes = new, newClasses


def canonicalRanks(G: networkx.Graph,
                   invariants: Dict[int, Hashable],
                   edgeKey: EdgeKey) -> Dict[int, int]:
    '''Compute a canonical ranking of the nodes of an attributed graph.

    Ranks are seeded from the node invariants and refined by the
    Morgan-style neighbourhood iteration. Any remaining ties are broken
    by giving the lowest-indexed node of the lowest tied class priority
    and refining again, until every node has a distinct rank.

    The invariants must be mutually comparable (use -1 rather than None
    for missing values).

    :param G: the graph, with integer nodes
    :param invariants: the seed invariant of each node
    :param edgeKey: function returning the label of an edge
    :returns: a map from node to rank 0, 1, ...'''
    nodes = sorted(G.nodes())
    if len(nodes) == 0:
        return dict()
    rank = dict(zip(nodes, denseRank([invariants[n] for n in nodes])))
    rank = _refine(G, nodes, rank, edgeKey)

    while len(set(rank.values())) < len(nodes):
        counts = Counter(rank.values())
        tied = min(r for (r, c) in counts.items() if c > 1)
        chosen = min(n for n in nodes if rank[n] == tied)

        # split the chosen node off from its class
        split = {}
        for n in nodes:
            if rank[n] == tied and n != chosen:
                split[n] = 2 * rank[n] + 1
            else:
                split[n] = 2 * rank[n]
        rank = dict(zip(nodes, denseRank([split[n] for n in nodes])))
        rank = _refine(G, nodes, rank, edgeKey)

    return rank
