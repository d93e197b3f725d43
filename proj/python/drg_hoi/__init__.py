"""Dual relation graph HOI detection.

Numeric helpers take and return float64 numpy arrays. Pipeline functions work
on the same JSON files as the ``drg_hoi`` command line; configurations are
plain dicts in the run-config schema (``default_config()`` shows every key).
"""

import json
import os

from . import _core
from ._core import (
    ConfigMismatchError,
    DimensionError,
    DrgError,
    MissingEmbeddingError,
    NumericError,
    ParseError,
    aggregate,
    attention_weights,
    average_precision,
    fuse,
    iou,
    multilabel_loss,
    rasterize_pair,
)

__all__ = [
    "ConfigMismatchError",
    "DimensionError",
    "DrgError",
    "MissingEmbeddingError",
    "NumericError",
    "ParseError",
    "aggregate",
    "attention_weights",
    "average_precision",
    "config_hash",
    "default_config",
    "evaluate",
    "featurize",
    "fuse",
    "gen_synth",
    "infer",
    "iou",
    "load_config",
    "multilabel_loss",
    "rasterize_pair",
    "train",
]


def _text(config):
    if config is None:
        return ""
    if isinstance(config, (str, os.PathLike)):
        with open(config, encoding="utf-8") as f:
            return f.read()
    return json.dumps(config)


def _path(p):
    return "" if p is None else os.fspath(p)


def default_config(profile="vcoco"):
    return json.loads(_core.config_json(json.dumps({"profile": {"name": profile}})))


def load_config(config):
    """Validates a dict or config file path; returns the fully populated dict."""
    return json.loads(_core.config_json(_text(config)))


def config_hash(config=None):
    return _core.config_hash(_text(config))


def gen_synth(output, seed, train_images=200, test_images=50, context_fraction=0.3):
    _core.gen_synth(_path(output), seed, train_images, test_images, context_fraction)


def featurize(detections, embeddings, output, config=None, checkpoint=None, appearance=None):
    """Writes a feature archive and returns its metadata."""
    meta = _core.featurize(_path(detections), _path(embeddings), _path(output), _text(config), _path(checkpoint),
                           _path(appearance))
    return json.loads(meta)


def infer(detections, appearance, embeddings, checkpoint, output, config=None, features=None):
    _core.infer(_path(detections), _path(appearance), _path(embeddings), _path(checkpoint), _path(output),
                _text(config), _path(features))
    with open(output, encoding="utf-8") as f:
        return json.load(f)


def train(detections, appearance, annotations, embeddings, output, config=None):
    """Trains, writes the checkpoint and ``<output>.loss.csv``, returns the loss log text."""
    return _core.train(_path(detections), _path(appearance), _path(annotations), _path(embeddings), _path(output),
                       _text(config))


def evaluate(predictions, annotations, config=None, tag=""):
    return json.loads(_core.evaluate(_path(predictions), _path(annotations), _text(config), tag))
