import argparse
import json
import os
import sys
import warnings

import torch

from ._toolchain import ToolNotFound, ToolFailed
from ._utils import parse_options, coerce_option
from .codec.io import read_wav, write_wav, export_codes, import_codes
from .codec.rvq import bitrate
from .corpus import Manifest, generate_toy_corpus
from .errors import ConfigurationError, DataError, DomainError, NonFiniteLossError
from .eval.aso import dominance_matrix
from .eval.report import render_report, render_wer_report, write_table
from .eval.wer import WIL_VARIANTS, align, corpus_counts, read_transcripts, wer, wil
from .losses import mel_loss, time_loss
from .train.config import TrainConfig
from .train.trainer import Trainer
from .tts.model import TtsConfig, TtsModel, synthesize
from .tts.phonemes import GraphemePhonemizer, EspeakPhonemizer
from .tts.trainer import TtsTrainer, prepare_samples


__all__ = ["main", "main_parser", "main_runner", "load_codec", "encode_decode_roundtrip"]


def load_codec(checkpoint_file):
    """The codec of a training checkpoint, in evaluation mode."""
    codec = Trainer.load(checkpoint_file).codec
    codec.eval()
    return codec


def encode_decode_roundtrip(wav_file, checkpoint_file, out_file, n_active_layers=None):
    """Reconstruct ``wav_file`` through the codec and write it to ``out_file``, with a JSON
    sidecar next to it; returns the sidecar contents.
    """
    codec = load_codec(checkpoint_file)
    cfg = codec.cfg
    if n_active_layers is None:
        n_active_layers = cfg.n_quantizers
    kbps = bitrate(cfg, n_active_layers)
    clip = read_wav(wav_file, cfg.sample_rate)
    reconstruction, code = codec.roundtrip(clip, n_active_layers)
    write_wav(out_file, reconstruction)

    with torch.no_grad():
        reference = codec.crop(clip.samples.to(reconstruction.samples.dtype))[None]
        estimate  = reconstruction.samples[None]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            mel = float(mel_loss(reference, estimate, sample_rate=cfg.sample_rate))
        sidecar = {
            "input": os.fspath(wav_file),
            "output": os.fspath(out_file),
            "sample_rate": cfg.sample_rate,
            "input_samples": len(clip),
            "output_samples": len(reconstruction),
            "frames": code.n_frames,
            "n_active_layers": n_active_layers,
            "bitrate_kbps": kbps,
            "losses": {
                "t": float(time_loss(reference, estimate)),
                "f": mel,
            },
        }
    with open(os.path.splitext(out_file)[0] + ".json", "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")
    return sidecar


def _phonemizer(name):
    if name == "espeak":
        return EspeakPhonemizer()
    return GraphemePhonemizer()


def _tts_config(overrides, **fixed):
    options = {}
    for override in overrides:
        options.update(parse_options(override, origin="--set"))
    types = dict(TtsConfig._fields)
    kwargs = {}
    for key, value in options.items():
        if key not in types:
            raise ConfigurationError("Unknown TTS option {!r}".format(key))
        if key in fixed:
            raise ConfigurationError("TTS option {!r} is determined by the codec and "
                                     "phonemizer".format(key))
        kwargs[key] = coerce_option(key, value, types[key])
    kwargs.update(fixed)
    try:
        return TtsConfig(**kwargs)
    except TypeError as e:
        raise ConfigurationError(str(e)) from None


def main_parser(parser=None):
    if parser is None:
        parser = argparse.ArgumentParser(prog="dmcodec",
            description="Distillation-guided neural speech codec")

    p_action = parser.add_subparsers(dest="action", metavar="COMMAND")
    p_action.required = True

    p_corpus = p_action.add_parser("corpus",
        help="generate a synthetic toy corpus with transcripts and teacher caches")
    p_corpus.add_argument("-n", "--clips", dest="n_clips",
        metavar="COUNT", type=int, default=16,
        help="generate COUNT clips (default: %(default)s)")
    p_corpus.add_argument("-s", "--seed",
        metavar="SEED", type=int, default=42,
        help="seed the generator with SEED (default: %(default)s)")
    p_corpus.add_argument("--seconds",
        metavar="SECONDS", type=float, default=3.0,
        help="make every clip SECONDS long (default: %(default)s)")
    p_corpus.add_argument("out_dir",
        metavar="DIR",
        help="write the corpus and its manifest.tsv to DIR")

    p_train = p_action.add_parser("train",
        help="train the codec")
    p_train.add_argument("-c", "--config", dest="config_file",
        metavar="CONFIG-FILE",
        help="read options from CONFIG-FILE")
    p_train.add_argument("--set", dest="overrides", action="append", default=[],
        metavar="KEY=VALUE",
        help="override option KEY (may be repeated)")
    p_train.add_argument("-m", "--manifest", dest="manifest_file", required=True,
        metavar="MANIFEST",
        help="train on the utterances listed in MANIFEST")
    p_train.add_argument("-o", "--out", dest="out_dir", required=True,
        metavar="DIR",
        help="write train.csv and checkpoint.zip to DIR")
    p_train.add_argument("-r", "--resume",
        metavar="CHECKPOINT",
        help="continue the run saved in CHECKPOINT")
    p_train.add_argument("-v", "--vcd-file",
        metavar="VCD-FILE",
        help="write the loss trace to VCD-FILE")
    p_train.add_argument("-w", "--gtkw-file",
        metavar="GTKW-FILE",
        help="write GTKWave configuration to GTKW-FILE")

    p_encode = p_action.add_parser("encode",
        help="encode a WAV file to codes")
    p_encode.add_argument("checkpoint_file", metavar="CHECKPOINT")
    p_encode.add_argument("wav_file", metavar="WAV")
    p_encode.add_argument("codes_file", metavar="CODES")
    p_encode.add_argument("-l", "--layers", dest="n_active_layers",
        metavar="COUNT", type=int,
        help="use the first COUNT quantizer layers (default: all)")

    p_decode = p_action.add_parser("decode",
        help="decode codes to a WAV file")
    p_decode.add_argument("checkpoint_file", metavar="CHECKPOINT")
    p_decode.add_argument("codes_file", metavar="CODES")
    p_decode.add_argument("wav_file", metavar="WAV")

    p_roundtrip = p_action.add_parser("roundtrip",
        help="reconstruct a WAV file through the codec")
    p_roundtrip.add_argument("checkpoint_file", metavar="CHECKPOINT")
    p_roundtrip.add_argument("wav_file", metavar="WAV")
    p_roundtrip.add_argument("out_file", metavar="OUT-WAV",
        help="write the reconstruction to OUT-WAV and its report next to it as JSON")
    p_roundtrip.add_argument("-l", "--layers", dest="n_active_layers",
        metavar="COUNT", type=int,
        help="use the first COUNT quantizer layers (default: all)")

    p_codes = p_action.add_parser("codes",
        help="bulk operations on codes")
    p_codes_action = p_codes.add_subparsers(dest="codes_action", metavar="COMMAND")
    p_codes_action.required = True
    p_codes_export = p_codes_action.add_parser("export",
        help="encode every utterance of a manifest")
    p_codes_export.add_argument("checkpoint_file", metavar="CHECKPOINT")
    p_codes_export.add_argument("manifest_file", metavar="MANIFEST")
    p_codes_export.add_argument("out_dir", metavar="DIR",
        help="write one .dmcq file per utterance to DIR")
    p_codes_export.add_argument("-l", "--layers", dest="n_active_layers",
        metavar="COUNT", type=int,
        help="use the first COUNT quantizer layers (default: all)")

    p_tts_train = p_action.add_parser("tts-train",
        help="train the codec language models")
    p_tts_train.add_argument("checkpoint_file", metavar="CHECKPOINT",
        help="tokenize audio with the codec in CHECKPOINT")
    p_tts_train.add_argument("manifest_file", metavar="MANIFEST")
    p_tts_train.add_argument("model_file", metavar="MODEL",
        help="write the trained models to MODEL")
    p_tts_train.add_argument("-n", "--steps",
        metavar="COUNT", type=int, default=100,
        help="run COUNT updates (default: %(default)s)")
    p_tts_train.add_argument("--learning-rate",
        metavar="RATE", type=float, default=1e-3,
        help="set the Adam learning rate (default: %(default)s)")
    p_tts_train.add_argument("--prompt-frames",
        metavar="COUNT", type=int, default=0,
        help="use the first COUNT frames of each utterance as its prompt (default: %(default)s)")
    p_tts_train.add_argument("--phonemizer", choices=["grapheme", "espeak"], default="grapheme",
        help="transcribe text with PHONEMIZER (default: %(default)s)")
    p_tts_train.add_argument("--set", dest="overrides", action="append", default=[],
        metavar="KEY=VALUE",
        help="override model option KEY (may be repeated)")

    p_tts_synth = p_action.add_parser("tts-synth",
        help="synthesize speech from text")
    p_tts_synth.add_argument("checkpoint_file", metavar="CHECKPOINT")
    p_tts_synth.add_argument("model_file", metavar="MODEL")
    p_tts_synth_input = p_tts_synth.add_mutually_exclusive_group(required=True)
    p_tts_synth_input.add_argument("-t", "--text",
        metavar="TEXT",
        help="speak TEXT, transcribed with the phonemizer")
    p_tts_synth_input.add_argument("--phonemes", dest="phonemes_file",
        metavar="FILE",
        help="speak the phoneme string in FILE, already in the phonemizer's symbols")
    p_tts_synth.add_argument("-o", "--out", dest="wav_file", required=True,
        metavar="WAV",
        help="write the speech to WAV")
    p_tts_synth.add_argument("-p", "--prompt", dest="prompt_file",
        metavar="PROMPT-WAV",
        help="condition on the acoustic prompt in PROMPT-WAV")
    p_tts_synth.add_argument("--max-frames",
        metavar="COUNT", type=int,
        help="stop after COUNT frames (default: as many as fit the model context)")
    p_tts_synth.add_argument("--phonemizer", choices=["grapheme", "espeak"], default="grapheme",
        help="transcribe text with PHONEMIZER (default: %(default)s)")

    p_eval = p_action.add_parser("eval",
        help="score transcripts and test significance")
    p_eval_action = p_eval.add_subparsers(dest="eval_action", metavar="METRIC")
    p_eval_action.required = True
    for metric in ("wer", "wil"):
        p_metric = p_eval_action.add_parser(metric,
            help="corpus {} of a transcript file".format(metric.upper()))
        p_metric.add_argument("transcripts_file", metavar="TRANSCRIPTS",
            help="read utterance_id<TAB>reference<TAB>hypothesis lines from TRANSCRIPTS")
        p_metric.add_argument("--variant", choices=WIL_VARIANTS, default="simple",
            help="compute WIL as VARIANT (default: %(default)s)")
        p_metric.add_argument("--per-utterance", action="store_true",
            help="also print one rate per utterance")
    p_aso = p_eval_action.add_parser("aso",
        help="almost stochastic order of every pair of systems")
    p_aso.add_argument("systems", metavar="NAME=SCORES", nargs="+",
        help="score file of system NAME, with utterance_id,score lines")
    p_aso.add_argument("-m", "--metric", default="score",
        help="name of the metric (default: %(default)s)")
    p_aso.add_argument("--lower-is-better", action="store_true",
        help="treat smaller scores as better, as for error rates")
    p_aso.add_argument("-a", "--alpha",
        metavar="ALPHA", type=float, default=0.05,
        help="set the confidence level (default: %(default)s)")
    p_aso.add_argument("-b", "--bootstrap", dest="n_bootstrap",
        metavar="COUNT", type=int, default=1000,
        help="draw COUNT bootstrap resamples (default: %(default)s)")
    p_aso.add_argument("-s", "--seed",
        metavar="SEED", type=int, default=0,
        help="seed the bootstrap with SEED (default: %(default)s)")
    p_aso.add_argument("-o", "--table", dest="table_file",
        metavar="TSV-FILE",
        help="also write the table to TSV-FILE")

    return parser


def _run_corpus(args):
    manifest = generate_toy_corpus(args.out_dir, n_clips=args.n_clips, seed=args.seed,
                                   seconds=args.seconds)
    print("Wrote {} clips to {}".format(len(manifest), args.out_dir))


def _run_train(args):
    manifest = Manifest.read(args.manifest_file)
    if args.resume:
        trainer = Trainer.load(args.resume)
        if args.config_file:
            config = TrainConfig.load(args.config_file, overrides=args.overrides)
        else:
            config = trainer.config
            for override in args.overrides:
                config = TrainConfig.from_options(parse_options(override, origin="--set"),
                                                  base=config)
        if config.replace(epochs=trainer.config.epochs) != trainer.config:
            raise ConfigurationError("Options of a resumed run can only change its "
                                     "epoch count")
        trainer.config = trainer.config.replace(epochs=config.epochs)
    else:
        trainer = Trainer(TrainConfig.load(args.config_file, overrides=args.overrides))
    if args.vcd_file:
        with trainer.write_vcd(args.vcd_file, args.gtkw_file):
            checkpoint = trainer.run(manifest, args.out_dir)
    else:
        checkpoint = trainer.run(manifest, args.out_dir)
    print("Wrote {} after {} steps".format(checkpoint, trainer.step))


def _run_encode(args):
    codec = load_codec(args.checkpoint_file)
    clip = read_wav(args.wav_file, codec.cfg.sample_rate)
    with torch.no_grad():
        code = codec.quantize(codec.encode(clip), args.n_active_layers)
    export_codes(args.codes_file, code, codec.cfg.codebook_size)


def _run_decode(args):
    codec = load_codec(args.checkpoint_file)
    code, codebook_size = import_codes(args.codes_file)
    if codebook_size != codec.cfg.codebook_size:
        raise DataError("Codes file {} uses codebooks of size {}, but the codec has {}"
                        .format(args.codes_file, codebook_size, codec.cfg.codebook_size))
    with torch.no_grad():
        clip = codec.decode(codec.quantizer.lookup(code.indices).quantized)
    write_wav(args.wav_file, clip)


def _run_roundtrip(args):
    sidecar = encode_decode_roundtrip(args.wav_file, args.checkpoint_file, args.out_file,
                                      args.n_active_layers)
    print("{} layers, {:g} kbps".format(sidecar["n_active_layers"], sidecar["bitrate_kbps"]))


def _run_codes_export(args):
    codec = load_codec(args.checkpoint_file)
    manifest = Manifest.read(args.manifest_file)
    os.makedirs(args.out_dir, exist_ok=True)
    for entry in manifest:
        clip = read_wav(manifest.resolve(entry.wav_path), codec.cfg.sample_rate)
        with torch.no_grad():
            code = codec.quantize(codec.encode(clip), args.n_active_layers)
        name = os.path.splitext(os.path.basename(entry.wav_path))[0] + ".dmcq"
        export_codes(os.path.join(args.out_dir, name), code, codec.cfg.codebook_size)


def _run_tts_train(args):
    codec = load_codec(args.checkpoint_file)
    phonemizer = _phonemizer(args.phonemizer)
    utterances = Manifest.read(args.manifest_file).load(codec.cfg.sample_rate)
    samples = prepare_samples(utterances, codec, phonemizer, prompt_frames=args.prompt_frames)
    cfg = _tts_config(args.overrides,
                      phoneme_vocab=phonemizer.vocab_size,
                      codebook_size=codec.cfg.codebook_size,
                      n_quantizers=codec.cfg.n_quantizers)
    model = TtsModel(cfg)
    trainer = TtsTrainer(model, learning_rate=args.learning_rate, seed=cfg.seed)
    for _ in range(args.steps):
        result = trainer.step(samples)
    model.save(args.model_file)
    if args.steps:
        print("Step {}: AR loss {:.4f}".format(trainer.n_steps, result["ar"]))


def _run_tts_synth(args):
    codec = load_codec(args.checkpoint_file)
    model = TtsModel.load(args.model_file)
    if (model.cfg.codebook_size, model.cfg.n_quantizers) != \
            (codec.cfg.codebook_size, codec.cfg.n_quantizers):
        raise DataError("Model {} was trained on codes of another codec".format(args.model_file))
    phonemizer = _phonemizer(args.phonemizer)
    if args.phonemes_file:
        with open(args.phonemes_file, encoding="utf-8") as f:
            phonemes = phonemizer.encode_symbols(f.read().strip())
    else:
        phonemes = phonemizer.encode(args.text)
    prompt = None
    if args.prompt_file:
        clip = read_wav(args.prompt_file, codec.cfg.sample_rate)
        with torch.no_grad():
            prompt = codec.quantize(codec.encode(clip)).indices.T
    code = synthesize(model, phonemes, prompt, max_frames=args.max_frames,
                      quantizer=codec.quantizer)
    with torch.no_grad():
        clip = codec.decode(code.quantized)
    write_wav(args.wav_file, clip)


def _run_eval_rate(args):
    rows = read_transcripts(args.transcripts_file)
    counts = corpus_counts((reference, hypothesis) for _, reference, hypothesis in rows)
    if args.per_utterance:
        for utterance_id, reference, hypothesis in rows:
            utterance = align(reference, hypothesis)
            rate = wer(utterance) if args.eval_action == "wer" else wil(utterance, args.variant)
            print("{}\t{:.4f}".format(utterance_id, rate))
    print(render_wer_report(counts, utterances=len(rows), wer=wer(counts),
                            wil=wil(counts, args.variant), variant=args.variant), end="")


def _run_eval_aso(args):
    systems = {}
    for system in args.systems:
        name, sep, file = system.partition("=")
        if not sep or not name or not file:
            raise ConfigurationError("System {!r} must be given as NAME=SCORES".format(system))
        if name in systems:
            raise ConfigurationError("System {!r} is given more than once".format(name))
        systems[name] = file
    table = dominance_matrix(systems, args.metric, args.alpha,
                             higher_is_better=not args.lower_is_better,
                             n_bootstrap=args.n_bootstrap, seed=args.seed)
    print(render_report(table), end="")
    if args.table_file:
        write_table(table, args.table_file)


def main_runner(parser, args):
    try:
        if args.action == "corpus":
            _run_corpus(args)
        if args.action == "train":
            _run_train(args)
        if args.action == "encode":
            _run_encode(args)
        if args.action == "decode":
            _run_decode(args)
        if args.action == "roundtrip":
            _run_roundtrip(args)
        if args.action == "codes":
            _run_codes_export(args)
        if args.action == "tts-train":
            _run_tts_train(args)
        if args.action == "tts-synth":
            _run_tts_synth(args)
        if args.action == "eval":
            if args.eval_action == "aso":
                _run_eval_aso(args)
            else:
                _run_eval_rate(args)
    except (ConfigurationError, DomainError, DataError, NonFiniteLossError,
            ToolNotFound, ToolFailed, OSError) as e:
        parser.exit(1, "{}: error: {}\n".format(parser.prog, e))


def main(argv=None):
    parser = main_parser()
    main_runner(parser, parser.parse_args(argv))


if __name__ == "__main__":
    main(sys.argv[1:]) # :nocov:
