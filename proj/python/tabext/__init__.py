"""Table-element extraction from OCR token output."""

import json
import os

from ._tabext import (
    ENCODED_DIM,
    FEATURE_SCHEMA,
    TabextError,
    classify_text_pattern,
    cluster_coordinates,
    default_alignment_tolerance,
    featurize,
    line_block_regex,
    predict,
    render_report,
)
from . import _tabext

TabextError.kind = property(lambda self: self.args[0])

__all__ = [
    "ENCODED_DIM",
    "FEATURE_SCHEMA",
    "TabextError",
    "classify_text_pattern",
    "cluster_coordinates",
    "compute_metrics",
    "default_alignment_tolerance",
    "evaluate",
    "featurize",
    "featurize_tsv",
    "generate_invoice",
    "line_block_regex",
    "parse_tsv",
    "predict",
    "render_report",
    "synth",
    "train",
]


def parse_tsv(text, doc_id=""):
    return json.loads(_tabext._parse_tsv(text, doc_id))


def featurize_tsv(text, doc_id="", tolerance=None):
    return json.loads(_tabext._featurize_tsv(text, doc_id, tolerance))


def compute_metrics(predictions, labels):
    return json.loads(_tabext._compute_metrics(list(predictions), list(labels)))


def generate_invoice(spec=None, doc_id="invoice"):
    return json.loads(_tabext._generate_invoice(json.dumps(spec) if spec else "", doc_id))


def synth(n, out, seed=1, spec=None):
    _tabext._synth(n, os.fspath(out), seed, json.dumps(spec) if spec else "")


def train(features, out, labels=None, seed=42, max_epochs=None, learning_rate=None, batch_size=None,
          patience=None, hidden=None, export_encoded=False):
    return json.loads(_tabext._train(os.fspath(features), os.fspath(out),
                                     os.fspath(labels) if labels else None, seed, max_epochs,
                                     learning_rate, batch_size, patience, hidden, export_encoded))


def evaluate(checkpoint, features, labels=None, threshold=None):
    return json.loads(_tabext._evaluate(os.fspath(checkpoint), os.fspath(features),
                                        os.fspath(labels) if labels else None, threshold))
