# Initialisation for retromix
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

# Utilities
from .types import Seed, TokenIds, TokenSequence, BondKey
from .utils import zipboth, generatorFor, spawnSeeds, seedInteger, logSumExp, denseRank

# Errors
from .errors import (RetroError,
                     SmilesError, emptyInput, unlexableCharacter, unbalancedParenthesis,
                     unclosedRingBond, invalidAtomToken, invalidBond, invalidRingClosure,
                     emptyBranch, valenceViolation,
                     ReactionError, NoBreakableBond, UnmappedAtoms, NoChange,
                     InsufficientGroups, ReactionFormatError,
                     DataFileError,
                     ModelError, SequenceTooLong, TokenOutOfRange, CheckpointFormatError, VocabMismatch,
                     TrainingError, NonFiniteLoss,
                     ConfigError)

# Molecules and reactions
from .molecule import (PERIODIC_TABLE, ORGANIC_SUBSET, AROMATIC_ORGANIC,
                       SINGLE, DOUBLE, TRIPLE, AROMATIC, BOND_ORDERS,
                       Atom, Bond, bondKey, MolGraph, allowedValences,
                       normaliseHydrogens, stripAtomMaps, normaliseAromaticity)
from .ranking import canonicalRanks
from .smiles import (tokenize, detokenize, parseSmiles, writeSmiles, canonicalRanking,
                     canonicalize, canonicalizeSmiles, ringBonds)
from .moleculeset import MoleculeSet, moleculeSetEqual
from .reaction import (DATASET, RANDOM_PRETRAIN, TEMPLATE_PRETRAIN, SMILES_AUG, SOURCES,
                       ReactionExample, removeReagents, parseReaction, parseReactionRecord,
                       formatReactionRecord, readReactions, writeReactionRecords, writeReactions)

# Templates and augmentation
from .template import (EMBEDDING_CAP, TemplateAtom, TemplateBond, Template, makeTemplate,
                       extractTemplate, extractTemplateIds, extractEach, extractTemplates,
                       pairSignature, embeddings, applyTemplateSets, applyTemplate,
                       readTemplates, writeTemplates)
from .augment import (RANDOM, TEMPLATE, RANDOM_SPLIT, TEMPLATE_DISJOINT,
                      breakableBonds, randomBondBreak, templateRewrites, buildPretrainCorpus,
                      smilesAugment, DatasetSplit, randomSplit, solvingTemplates,
                      templateSolvable, templateSplit, rareSubset)

# Models
from .vocabulary import PAD, BOS, EOS, RESERVED, Vocabulary
from .layers import (positionalEncoding, dropoutMask, layerNormForward, layerNormBackward,
                     attentionForward, attentionBackward, causalMask, applyMask,
                     feedForwardForward, feedForwardBackward, softmax, logSoftmax)
from .model import (ModelConfig, DropoutMode, OFF, ModelParams, parameterShapes,
                    parameterCount, initParams, encode, decodeLogProbs, forward,
                    sequenceLogProb, latentLogProbs, mixtureLogLikelihood,
                    lossAndGradients, backward)
from .checkpoint import saveCheckpoint, loadCheckpoint

# Training
from .optimiser import inverseSqrtSchedule, constantSchedule, clipGradients, Adam
from .training import (PRETRAIN, FINETUNE, PHASES, TrainConfig, SequencePair, TokenPair,
                       vocabularyFor, encodePairs, HardEMTrace, selectLatent, dropoutSeed, hardEMStep,
                       validationNLL, MetricsRecord, readMetrics, stepsToReach, Trainer, train,
                       SYNTHETIC_ALPHABET, SYNTHETIC_MODES, syntheticTargets, syntheticSources,
                       makeSyntheticMultimodal, syntheticModeOf)

# Decoding
from .decode import (BeamConfig, Hypothesis, normalisedScore, beamSearchSteps, beamSearch, greedyDecode,
                     Prediction, canonicalText, mergePredictions, TopK, perLatentWidth,
                     predictTopK, pairwiseDistinctness, templateTopK,
                     formatPredictions, writePredictions, readPredictions,
                     writePools, readPools)

# Evaluation
from .classifier import (UNKNOWN, ReactionClassifier, FunctionClassifier, syntheticClassifier,
                         TemplateProxyClassifier, templateProxyClassifier)
from .evaluation import (ACCURACY_KS, topKAccuracy, uniqueReactionCount, LatentClassMatrix,
                         latentClassMatrix, EvalReport, invalidRate, evaluate)

# Configuration
from .config import SCHEMA, flagName, RunConfig

# Drawing
from .drawing import drawLatentClassMatrix
