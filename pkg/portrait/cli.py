"""
Command-line entry point: `python -m portrait [global flags] <command> [command flags]`.
"""
import argparse
import json
import logging
import os
import os.path as osp
import sys
from typing import Dict, List, Optional, Tuple

import pandas as pd

from portrait.audio.clip import read_wav
from portrait.audio.spectrogram import StftParams, preprocess
from portrait.core.tensor import set_precision
from portrait.datasets.dataset import PortraitDataset
from portrait.datasets.synthetic import generate_dataset, load_dataset, save_dataset
from portrait.evaluation import ablation_report, face_to_face_benchmark, report_frame, write_report_csv
from portrait.models.embedder import FaceEmbedder
from portrait.models.gender import GENDERS, GenderClassifier, classifier_accuracy, train_gender_classifier
from portrait.models.speech_portrait import MODEL_TAGS, get_model, get_variant
from portrait.priors.bank import PriorBank, build_prior_bank
from portrait.priors.convergence import DEFAULT_NS, prior_convergence_table
from portrait.training.checkpoint import (load_face_decoder, load_gender_classifier, load_speech_encoder,
                                          save_checkpoint)
from portrait.training.config import TrainConfig
from portrait.training.trainer import train_fd, train_se
from portrait.utils.errors import ContractError, PortraitError
from portrait.utils.image import save_png

logger = logging.getLogger('portrait')

TRAIN_FLAGS = ('epochs', 'batch_size', 'lr', 'dtype', 'grad_clip')


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog='portrait', description='Speech-to-face portrait generation.')
    parser.add_argument('--config', default=None, help='key=value file overriding config/default_args.json')
    parser.add_argument('--seed', default=None, type=int)
    parser.add_argument('--preset', default=None, choices=['tiny', 'full'], help='defaults to the --config file, then tiny')
    parser.add_argument('--verbose', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('gen-data', help='generate a synthetic speaker/face dataset')
    gen.add_argument('--n', default=None, type=int, help='number of pairs (default: n_samples)')
    gen.add_argument('--out', required=True)

    fd = sub.add_parser('train-fd', help='train the face decoder')
    fd.add_argument('--data', required=True)
    fd.add_argument('--out', required=True)

    se = sub.add_parser('train-se', help='train a speech encoder against a frozen face decoder')
    se.add_argument('--data', required=True)
    se.add_argument('--fd', required=True, help='face_decoder.arck')
    se.add_argument('--model', default='non-prior', choices=list(MODEL_TAGS))
    se.add_argument('--priors', default=None, help='prior bank directory')
    se.add_argument('--classifier', default=None, help='gender_classifier.arck')
    se.add_argument('--out', required=True)

    for p in (fd, se):
        p.add_argument('--epochs', default=None, type=int)
        p.add_argument('--batch_size', default=None, type=int)
        p.add_argument('--lr', default=None, type=float)
        p.add_argument('--dtype', default=None, choices=['float32', 'float64'])
        p.add_argument('--grad_clip', default=None, type=float)

    prior = sub.add_parser('prior-build', help='train the gender classifier and build the prior bank')
    prior.add_argument('--data', required=True)
    prior.add_argument('--n', default=None, type=int, help='number of training faces averaged')
    prior.add_argument('--from_classifier', action='store_true', help='label gender priors by classifier prediction')
    prior.add_argument('--out', required=True)

    table = sub.add_parser('prior-table', help='tabulate how priors converge with the sample count')
    table.add_argument('--data', required=True)
    table.add_argument('--ns', default=None, type=int, nargs='+')
    table.add_argument('--out', required=True)

    ev = sub.add_parser('eval', help='ablation report over trained encoders')
    ev.add_argument('--data', required=True)
    ev.add_argument('--fd', required=True)
    ev.add_argument('--encoders', required=True, nargs='+', help='tag=path/to/speech_encoder.arck')
    ev.add_argument('--priors', default=None)
    ev.add_argument('--classifier', default=None)
    ev.add_argument('--unitized', action='store_true')
    ev.add_argument('--face_to_face', action='store_true', help='append the Face-to-Face benchmark row')
    ev.add_argument('--out', required=True)

    f2f = sub.add_parser('face-to-face', help='Face-to-Face benchmark of a trained decoder')
    f2f.add_argument('--data', required=True)
    f2f.add_argument('--fd', required=True)
    f2f.add_argument('--unitized', action='store_true')
    f2f.add_argument('--out', required=True)

    infer = sub.add_parser('infer', help='generate a face image from a WAV file')
    infer.add_argument('--wav', required=True)
    infer.add_argument('--fd', required=True)
    infer.add_argument('--encoder', required=True)
    infer.add_argument('--model', default=None, choices=list(MODEL_TAGS), help='defaults to the checkpoint tag')
    infer.add_argument('--priors', default=None)
    infer.add_argument('--classifier', default=None)
    infer.add_argument('--out', required=True)
    return parser.parse_args(argv)


def build_config(args: argparse.Namespace) -> TrainConfig:
    overrides = {'seed': args.seed}
    overrides.update({k: getattr(args, k, None) for k in TRAIN_FLAGS})
    return TrainConfig.from_sources(preset=args.preset, config_file=args.config, overrides=overrides)


def load_splits(data_dir: str, config: TrainConfig) -> Tuple[PortraitDataset, PortraitDataset]:
    pairs = load_dataset(data_dir)
    presets = {pair.preset for pair in pairs}
    if presets != {config.preset}:
        raise ContractError(f'dataset {data_dir} was generated for {sorted(presets)}, running with {config.preset}')
    return PortraitDataset.from_pairs(pairs, config.preset).split(config.test_ratio, config.seed)


def _embedder(config: TrainConfig) -> FaceEmbedder:
    return FaceEmbedder(config.preset, seed=config.embedder_seed)


def _optional_bank(path: Optional[str]) -> Optional[PriorBank]:
    return PriorBank.load(path) if path else None


def _optional_classifier(path: Optional[str], preset: str) -> Optional[GenderClassifier]:
    return load_gender_classifier(path, preset) if path else None


def _save_config(config: TrainConfig, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(osp.join(out_dir, 'config.json'), 'w') as f:
        json.dump(config.to_dict(), f, indent=4)


def cmd_gen_data(args, config: TrainConfig) -> None:
    pairs = generate_dataset(config.seed, args.n or config.n_samples, config.preset)
    save_dataset(pairs, args.out)


def cmd_train_fd(args, config: TrainConfig) -> None:
    train, _ = load_splits(args.data, config)
    _save_config(config, args.out)
    result = train_fd(config, train, _embedder(config), output_dir=args.out)
    logger.info(f'face decoder saved to {result.checkpoint_path}')


def cmd_train_se(args, config: TrainConfig) -> None:
    config = config.for_model(args.model)
    train, _ = load_splits(args.data, config)
    _save_config(config, args.out)
    result = train_se(config, train, args.fd, _optional_bank(args.priors), _embedder(config),
                      classifier=_optional_classifier(args.classifier, config.preset),
                      output_dir=args.out, tag=args.model)
    logger.info(f'{args.model} speech encoder saved to {result.checkpoint_path}')


def cmd_prior_build(args, config: TrainConfig) -> None:
    train, test = load_splits(args.data, config)
    classifier = GenderClassifier(config.preset, seed=config.seed)
    train_gender_classifier(classifier, train.spectrograms, train.genders, epochs=config.classifier_epochs,
                            batch_size=config.batch_size, lr=config.lr, beta1=config.beta1,
                            beta2=config.beta2, eps=config.eps, seed=config.seed)
    accuracy = classifier_accuracy(classifier, test.spectrograms, test.genders)
    logger.info(f'gender classifier held-out accuracy: {accuracy:.3f}')
    save_checkpoint(classifier, osp.join(args.out, 'gender_classifier.arck'), config.preset,
                    {'kind': 'gender_classifier', 'trained': True, 'epoch': config.classifier_epochs,
                     'seed': config.seed, 'accuracy': accuracy})
    features = _embedder(config).embed_batches(train.faces)
    labels = None if args.from_classifier else train.genders
    bank = build_prior_bank(features, labels=labels, classifier=classifier, spectrograms=train.spectrograms, n=args.n)
    bank.save(osp.join(args.out, 'priors'))


def cmd_prior_table(args, config: TrainConfig) -> None:
    train, _ = load_splits(args.data, config)
    smallest = min(train.genders.count(g) for g in GENDERS)
    ns = args.ns or [n for n in DEFAULT_NS if n <= smallest]
    table = prior_convergence_table(_embedder(config), train.faces, ns, labels=train.genders)
    table.to_csv(args.out, index=False, float_format='%.6f')
    logger.info(f'wrote prior convergence table to {args.out}')


def _parse_encoders(specs: List[str]) -> Dict[str, str]:
    encoders = {}
    for spec in specs:
        if '=' not in spec:
            raise argparse.ArgumentTypeError(f'expected tag=path, got {spec!r}')
        tag, path = spec.split('=', 1)
        get_variant(tag)
        encoders[tag] = path
    return encoders


def cmd_eval(args, config: TrainConfig) -> None:
    _, test = load_splits(args.data, config)
    embedder = _embedder(config)
    decoder = load_face_decoder(args.fd, config.preset)
    bank = _optional_bank(args.priors)
    classifier = _optional_classifier(args.classifier, config.preset)
    models = []
    for tag, path in _parse_encoders(args.encoders).items():
        encoder, _ = load_speech_encoder(path, config.preset)
        models.append(get_model(tag, config.preset, decoder=decoder, prior_bank=bank,
                                classifier=classifier, encoder=encoder))
    report = ablation_report(models, test, embedder, args.unitized)
    if args.face_to_face:
        f2f = face_to_face_benchmark(embedder, decoder, test.faces, args.unitized)
        report = pd.concat([report_frame([f2f]), report], ignore_index=True)
    write_report_csv(report, args.out)


def cmd_face_to_face(args, config: TrainConfig) -> None:
    _, test = load_splits(args.data, config)
    decoder = load_face_decoder(args.fd, config.preset)
    write_report_csv([face_to_face_benchmark(_embedder(config), decoder, test.faces, args.unitized)], args.out)


def cmd_infer(args, config: TrainConfig) -> None:
    encoder, meta = load_speech_encoder(args.encoder, config.preset)
    tag = args.model or meta.get('tag', 'non-prior')
    model = get_model(tag, config.preset, decoder=load_face_decoder(args.fd, config.preset),
                      prior_bank=_optional_bank(args.priors),
                      classifier=_optional_classifier(args.classifier, config.preset), encoder=encoder)
    spec = preprocess(read_wav(args.wav), StftParams.for_preset(config.preset))
    if osp.dirname(args.out):
        os.makedirs(osp.dirname(args.out), exist_ok=True)
    save_png(model.generate(spec), args.out)
    logger.info(f'wrote {args.out}')


COMMANDS = {
    'gen-data': cmd_gen_data,
    'train-fd': cmd_train_fd,
    'train-se': cmd_train_se,
    'prior-build': cmd_prior_build,
    'prior-table': cmd_prior_table,
    'eval': cmd_eval,
    'face-to-face': cmd_face_to_face,
    'infer': cmd_infer,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Returns:
        int: 0 on success, 1 on a runtime failure, 2 on a usage error.
    """
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    try:
        config = build_config(args)
        set_precision(config.dtype)
        COMMANDS[args.command](args, config)
    except argparse.ArgumentTypeError as e:
        logger.error(str(e))
        return 2
    except (PortraitError, OSError) as e:
        logger.error(f'{args.command} failed: {e}')
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
