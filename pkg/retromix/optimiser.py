# Optimisation
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
from typing import Dict, Callable, Any, Iterable
from retromix.model import ModelParams


# A schedule maps a 1-based step number to a learning rate
Schedule = Callable[[int], float]


def inverseSqrtSchedule(peak: float, warmup: int) -> Schedule:
    '''Return the inverse-square-root learning rate schedule: linear
    warm-up to the peak rate at step warmup, then decay proportional to
    1 / sqrt(step).

    :param peak: the peak learning rate
    :param warmup: the number of warm-up steps
    :returns: the schedule'''
    if warmup < 1:
        raise ValueError(f'Warm-up of {warmup} steps')

    def rate(step: int) -> float:
        step = max(step, 1)
        return peak * min(step / warmup, numpy.sqrt(warmup / step))

    return rate


def constantSchedule(r: float) -> Schedule:
    return lambda step: r


def clipGradients(grads: ModelParams, maxNorm: float) -> float:
    '''Scale gradients in place so their global norm is at most maxNorm.

    :param grads: the gradients
    :param maxNorm: the maximum norm
    :returns: the norm before clipping'''
    n = grads.globalNorm()
    if n > maxNorm > 0:
        grads.scale(maxNorm / n)
    return n


class Adam:
    '''The Adam adaptive-moment optimiser.

    Moments are held per tensor name, so the optimiser works on
    anything that iterates (name, array) pairs and updates the arrays
    in place.

    Tensors named as row-sparse are updated row by row: a row whose
    gradient is exactly zero keeps its parameters and its moments.
    Hard-EM training relies on this for the latent class embeddings,
    where only the rows of the selected classes may change in a step.

    :param schedule: the learning rate schedule
    :param beta1: (optional) the first-moment decay (defaults to 0.9)
    :param beta2: (optional) the second-moment decay (defaults to 0.98)
    :param eps: (optional) the denominator floor (defaults to 1e-9)
    :param rowSparse: (optional) names of row-sparse tensors (defaults to the latent embeddings)'''

    def __init__(self, schedule: Schedule, beta1: float = 0.9, beta2: float = 0.98,
                 eps: float = 1e-9, rowSparse: Iterable[str] = ('latent',)):
        self._schedule = schedule
        self._beta1 = beta1
        self._beta2 = beta2
        self._eps = eps
        self._rowSparse = set(rowSparse)
        self._m: Dict[str, numpy.ndarray] = dict()
        self._v: Dict[str, numpy.ndarray] = dict()
        self._step = 0


    def step(self) -> int:
        '''Return the number of updates applied so far.

        :returns: the step count'''
        return self._step


    def learningRate(self) -> float:
        '''Return the learning rate the next update will use.'''
        return self._schedule(self._step + 1)


    def reset(self):
        '''Discard the moments and step count.'''
        self._m = dict()
        self._v = dict()
        self._step = 0


    def update(self, params: Any, grads: Any):
        '''Apply one update to the parameters, in place.

        :param params: the parameters, iterating (name, array) through items()
        :param grads: the gradients, indexable by name'''
        self._step += 1
        t = self._step
        lr = self._schedule(t)
        c1 = 1.0 - self._beta1 ** t
        c2 = 1.0 - self._beta2 ** t
        for (n, p) in params.items():
            g = grads[n]
            if n not in self._m:
                self._m[n] = numpy.zeros_like(p)
                self._v[n] = numpy.zeros_like(p)
            m = self._m[n]
            v = self._v[n]
            if n in self._rowSparse:
                rows = numpy.any(g != 0.0, axis=tuple(range(1, g.ndim)))
                m[rows] = self._beta1 * m[rows] + (1.0 - self._beta1) * g[rows]
                v[rows] = self._beta2 * v[rows] + (1.0 - self._beta2) * g[rows] * g[rows]
                p[rows] -= lr * (m[rows] / c1) / (numpy.sqrt(v[rows] / c2) + self._eps)
                continue
            m *= self._beta1
            m += (1.0 - self._beta1) * g
            v *= self._beta2
            v += (1.0 - self._beta2) * g * g
            p -= lr * (m / c1) / (numpy.sqrt(v / c2) + self._eps)
