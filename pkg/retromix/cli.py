# Command-line interface
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

import argparse
import logging
import multiprocessing
import os
import sys
from typing import List, Optional, TextIO, Iterator, Tuple, Dict, Any
from tqdm import tqdm
from retromix.errors import RetroError, ConfigError, NonFiniteLoss, DataFileError, ModelError
from retromix.smiles import parseSmiles, tokenize, canonicalizeSmiles
from retromix.reaction import readReactions, writeReactions
from retromix.template import readTemplates, writeTemplates, extractTemplates
from retromix.augment import (RANDOM, TEMPLATE, RANDOM_SPLIT, TEMPLATE_DISJOINT,
                              buildPretrainCorpus, smilesAugment, randomSplit,
                              templateSplit, rareSubset)
from retromix.vocabulary import Vocabulary
from retromix.model import ModelParams, initParams
from retromix.checkpoint import loadCheckpoint
from retromix.training import PRETRAIN, FINETUNE, Trainer, vocabularyFor, encodePairs
from retromix.decode import (BeamConfig, TopK, predictTopK, templateTopK,
                             writePredictions, writePools, readPredictions, readPools)
from retromix.classifier import syntheticClassifier, templateProxyClassifier
from retromix.evaluation import evaluate
from retromix.config import RunConfig


logger = logging.getLogger(__name__)


# Exit codes
OK = 0
USAGE = 1
DATA = 2
NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # report usage errors by exception, so they get our exit code
    def error(self, message):
        raise UsageError(message)


# ---------- Helpers ----------

def _lines(fh: TextIO) -> Iterator[Tuple[int, str]]:
    for (n, line) in enumerate(fh, start=1):
        line = line.rstrip('\n').rstrip('\r')
        if len(line.strip()) == 0 or line.startswith('#'):
            continue
        yield (n, line)


def _filter(args, out: TextIO, f):
    fh = open(args.input, 'r', encoding='utf-8') if args.input is not None else sys.stdin
    name = args.input or '<stdin>'
    try:
        for (n, line) in _lines(fh):
            try:
                out.write(f(line.split('\t')[0]) + '\n')
            except ValueError as e:
                raise DataFileError(name, n, e)
    finally:
        if fh is not sys.stdin:
            fh.close()


def _readMolecules(path: str):
    gs = []
    with open(path, 'r', encoding='utf-8') as fh:
        for (n, line) in _lines(fh):
            try:
                gs.append(parseSmiles(line.split('\t')[0]))
            except ValueError as e:
                raise DataFileError(path, n, e)
    return gs


def _outputDir(args, rc: RunConfig) -> str:
    os.makedirs(args.output_dir, exist_ok=True)
    rc.write(os.path.join(args.output_dir, 'run.conf'))
    return args.output_dir


# ---------- Subcommands ----------

def canonicalizeCommand(args, rc: RunConfig, out: TextIO):
    _filter(args, out, canonicalizeSmiles)


def tokenizeCommand(args, rc: RunConfig, out: TextIO):
    _filter(args, out, lambda s: ' '.join(tokenize(s)))


def augmentCommand(args, rc: RunConfig, out: TextIO):
    if args.method == 'smiles':
        rs = []
        for (i, r) in enumerate(tqdm(readReactions(args.input), desc='augment', disable=not rc['progress'])):
            rs.append(r)
            rs.extend(smilesAugment(r, rc['variants'], [rc['seed'], i]))
        n = writeReactions(args.output, rs, withSource=True)
    else:
        templates = None
        if args.method == TEMPLATE:
            if args.templates is None:
                raise UsageError('Template augmentation needs --templates')
            templates = readTemplates(args.templates)
        targets = _readMolecules(args.input)
        (corpus, skipped) = buildPretrainCorpus(targets, args.method, templates, rc['cap'],
                                                rc['seed'], rc['workers'])
        n = writeReactions(args.output, corpus, withSource=True)
    logger.info(f'Wrote {n} examples to {args.output}')


def splitCommand(args, rc: RunConfig, out: TextIO):
    data = list(readReactions(args.input))
    if args.mode == RANDOM_SPLIT:
        s = randomSplit(data, rc['seed'], rc['test_fraction'])
    else:
        s = templateSplit(data, rc['seed'], rc['test_fraction'])
    d = _outputDir(args, rc)
    writeReactions(os.path.join(d, 'train.tsv'), s.train())
    writeReactions(os.path.join(d, 'test.tsv'), s.test())
    if args.rare:
        rare = rareSubset(s.test(), rc['rare_threshold'], data)
        writeReactions(os.path.join(d, 'rare.tsv'), rare)
        logger.info(f'{len(rare)} rare test examples')
    logger.info(f'Split {len(data)} examples into {len(s.train())} train and {len(s.test())} test')


def extractCommand(args, rc: RunConfig, out: TextIO):
    ts = extractTemplates(readReactions(args.input))
    n = writeTemplates(args.output, ts)
    logger.info(f'Wrote {n} templates to {args.output}')


def _trainPhase(args, rc: RunConfig, phase: str):
    d = _outputDir(args, rc)
    data = list(readReactions(args.input))
    if args.augment:
        aug = []
        for (i, r) in enumerate(data):
            aug.extend(smilesAugment(r, rc['variants'], [rc['seed'], i]))
        data.extend(aug)
    validation = list(readReactions(args.validation)) if args.validation is not None else []

    if args.init is not None:
        (params, vocab, _) = loadCheckpoint(args.init)
    else:
        extra = []
        for p in args.extra or []:
            extra.extend(readReactions(p))
        vocab = vocabularyFor(data + validation + extra)
        params = initParams(rc.modelConfig(vocab.size()), rc['seed'])
    pairs = encodePairs(vocab, data)
    vpairs = encodePairs(vocab, validation)

    t = Trainer(params, rc.trainConfig(phase), vocab, d)
    t.train(pairs, vpairs, progress=rc['progress'])


def pretrainCommand(args, rc: RunConfig, out: TextIO):
    _trainPhase(args, rc, PRETRAIN)


def trainCommand(args, rc: RunConfig, out: TextIO):
    _trainPhase(args, rc, FINETUNE)


# predictor state held by each worker process
_predictor: Dict[str, Any] = dict()


def _initPredictor(params: ModelParams, vocab: Vocabulary, k: int, bc: BeamConfig):
    _predictor.update(params=params, vocab=vocab, k=k, bc=bc)


def _predictOne(source: str) -> Optional[TopK]:
    vocab = _predictor['vocab']
    try:
        x = vocab.encodeSource(tokenize(source))
        return predictTopK(_predictor['params'], vocab, x, _predictor['k'], _predictor['bc'])
    except ModelError as e:
        logger.warning(f'No predictions for {source}: {e}')
        return None


def predictCommand(args, rc: RunConfig, out: TextIO):
    k = rc['top_k']
    rs = readReactions(args.input)
    with open(args.output, 'w', encoding='utf-8') as fh:
        if args.method == 'template':
            if args.templates is None:
                raise UsageError('Template prediction needs --templates')
            ts = readTemplates(args.templates)
            for r in tqdm(rs, desc='predict', disable=not rc['progress']):
                writePredictions(fh, r.id(), templateTopK(ts, parseSmiles(r.sourceSmiles()), k,
                                                          rc['embedding_cap']))
            return

        if args.checkpoint is None:
            raise UsageError('Model prediction needs --checkpoint')
        (params, vocab, _) = loadCheckpoint(args.checkpoint)
        bc = rc.beamConfig()
        with open(args.output + '.pools', 'w', encoding='utf-8') as ph:
            ids = []

            def sources():
                for r in rs:
                    ids.append(r.id())
                    yield r.sourceSmiles()

            if rc['workers'] > 1:
                pool = multiprocessing.Pool(rc['workers'], _initPredictor, (params, vocab, k, bc))
                results = pool.imap(_predictOne, sources(), chunksize=4)
            else:
                pool = None
                _initPredictor(params, vocab, k, bc)
                results = map(_predictOne, sources())
            try:
                for (i, r) in enumerate(tqdm(results, desc='predict', disable=not rc['progress'])):
                    if r is not None:
                        writePredictions(fh, ids[i], r.predictions)
                        writePools(ph, ids[i], r)
            finally:
                if pool is not None:
                    pool.close()
                    pool.join()


def evalCommand(args, rc: RunConfig, out: TextIO):
    gold = list(readReactions(args.gold))
    predictions = readPredictions(args.predictions)
    pools = readPools(args.pools) if args.pools is not None else None

    clf = None
    if args.classifier == 'template':
        if args.train is None:
            raise UsageError('The template classifier needs --train')
        clf = templateProxyClassifier(readReactions(args.train), rc['embedding_cap'])
    elif args.classifier == 'synthetic':
        clf = syntheticClassifier()

    K = None
    ps = None
    if pools is not None:
        K = max((z for zs in pools.values() for z in zs), default=1)
        ps = [pools.get(r.id(), dict()) for r in gold]
    report = evaluate([predictions.get(r.id(), []) for r in gold],
                      [r.gold() for r in gold],
                      [r.sourceSmiles() for r in gold],
                      ps, clf, K)
    out.write(report.text())

    if args.output_dir is not None:
        d = _outputDir(args, rc)
        with open(os.path.join(d, 'report.tsv'), 'w', encoding='utf-8') as fh:
            fh.write(report.tsv())
        with open(os.path.join(d, 'report.txt'), 'w', encoding='utf-8') as fh:
            fh.write(report.text())
        if report.matrix is not None:
            with open(os.path.join(d, 'matrix.csv'), 'w', encoding='utf-8') as fh:
                fh.write(report.matrix.csv())
            if args.plot:
                import matplotlib
                matplotlib.use('Agg')
                import matplotlib.pyplot as plt
                from retromix.drawing import drawLatentClassMatrix
                fig = plt.figure(figsize=(6, 4))
                drawLatentClassMatrix(report.matrix, ax=fig.gca())
                fig.savefig(os.path.join(d, 'matrix.png'), dpi=150, bbox_inches='tight')
                plt.close(fig)


# ---------- Argument parsing ----------

def makeParser() -> argparse.ArgumentParser:
    '''Build the command-line parser.

    :returns: the parser'''
    p = _Parser(prog='retromix', description='Diverse retrosynthesis with mixture sequence models')
    g = p.add_mutually_exclusive_group()
    g.add_argument('--verbose', action='store_true', help='log debugging detail')
    g.add_argument('--quiet', action='store_true', help='log warnings only')
    sub = p.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    def command(name, f, help):
        c = sub.add_parser(name, help=help)
        c.set_defaults(run=f)
        RunConfig.addArguments(c)
        return c

    c = command('canonicalize', canonicalizeCommand, 'canonicalise SMILES, one per line')
    c.add_argument('--input', help='input file (default standard input)')

    c = command('tokenize', tokenizeCommand, 'tokenise SMILES, one per line')
    c.add_argument('--input', help='input file (default standard input)')

    c = command('augment', augmentCommand, 'build a pre-training or augmented corpus')
    c.add_argument('--method', choices=[RANDOM, TEMPLATE, 'smiles'], default=RANDOM,
                   help='random bond breaking, template application, or SMILES re-traversal')
    c.add_argument('--input', required=True, help='molecules (or reactions, for smiles)')
    c.add_argument('--templates', help='template store, for the template method')
    c.add_argument('--output', required=True, help='corpus file to write')

    c = command('split', splitCommand, 'split a dataset into train and test')
    c.add_argument('--input', required=True, help='reactions')
    c.add_argument('--mode', choices=[RANDOM_SPLIT, TEMPLATE_DISJOINT], default=RANDOM_SPLIT)
    c.add_argument('--rare', action='store_true', help='also write the rare-template test subset')
    c.add_argument('--output-dir', required=True)

    c = command('extract', extractCommand, 'extract templates from mapped reactions')
    c.add_argument('--input', required=True, help='mapped reactions')
    c.add_argument('--output', required=True, help='template store to write')

    for (name, f, help) in [('pretrain', pretrainCommand, 'pre-train a model'),
                            ('train', trainCommand, 'train or fine-tune a model')]:
        c = command(name, f, help)
        c.add_argument('--input', required=True, help='training reactions')
        c.add_argument('--validation', help='validation reactions')
        c.add_argument('--init', help='checkpoint to start from')
        c.add_argument('--extra', action='append',
                       help='further reactions whose tokens the vocabulary must cover')
        c.add_argument('--augment', action='store_true', help='add SMILES re-traversals')
        c.add_argument('--output-dir', required=True)

    c = command('predict', predictCommand, 'predict reactants for products')
    c.add_argument('--method', choices=['model', 'template'], default='model')
    c.add_argument('--checkpoint', help='model checkpoint')
    c.add_argument('--templates', help='template store, for the template method')
    c.add_argument('--input', required=True, help='reactions whose products to predict')
    c.add_argument('--output', required=True, help='prediction file to write')

    c = command('eval', evalCommand, 'evaluate predictions')
    c.add_argument('--predictions', required=True)
    c.add_argument('--pools', help='hypothesis pools written alongside the predictions')
    c.add_argument('--gold', required=True, help='reactions with gold reactants')
    c.add_argument('--classifier', choices=['none', 'template', 'synthetic'], default='none')
    c.add_argument('--train', help='labelled training reactions, for the template classifier')
    c.add_argument('--plot', action='store_true', help='draw the latent class matrix')
    c.add_argument('--output-dir')

    return p


def main(argv: Optional[List[str]] = None, out: TextIO = None) -> int:
    '''Run the command line.

    :param argv: (optional) the arguments (defaults to the process' arguments)
    :param out: (optional) the output stream (defaults to standard output)
    :returns: the exit code'''
    out = out or sys.stdout
    try:
        args = makeParser().parse_args(argv)
        rc = RunConfig.fromArguments(args)
    except UsageError as e:
        print(f'retromix: {e}', file=sys.stderr)
        return USAGE
    except ConfigError as e:
        print(f'retromix: {e}', file=sys.stderr)
        return USAGE

    level = logging.DEBUG if args.verbose else (logging.WARNING if args.quiet else logging.INFO)
    logging.basicConfig(level=level, format='%(asctime)s %(name)s %(levelname)s %(message)s')

    try:
        args.run(args, rc, out)
    except (UsageError, ConfigError) as e:
        print(f'retromix: {e}', file=sys.stderr)
        return USAGE
    except NonFiniteLoss as e:
        print(f'retromix: {e}', file=sys.stderr)
        return NUMERIC
    except (RetroError, OSError) as e:
        print(f'retromix: {e}', file=sys.stderr)
        return DATA
    return OK
