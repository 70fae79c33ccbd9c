#!/usr/bin/env python3
"""Convert a RadioML 2016.10a-style archive to portable JSONL signals.

The archive is a Python pickle of a dict keyed by (modulation, snr_db)
whose values are float arrays of shape (count, 2, 128): row 0 is the
in-phase channel, row 1 the quadrature channel, 128 samples each. Every
(key, sample) pair becomes one JSONL record:

    {"label": <modulation>, "snr_db": <float>, "dt": 1.0,
     "channels": {"I": [...128 floats...], "Q": [...]}}

Records are emitted in sorted key order, then sample order, so a given
archive always converts to the same bytes. The output file is written
atomically: either the complete JSONL appears at --out or nothing does.

This script stands alone on purpose; the JSONL text above is its only
contract with the analysis toolkit.
"""

import argparse
import json
import os
import pickle
import sys

import numpy as np

MODULATIONS = frozenset([
    "8PSK", "AM-DSB", "AM-SSB", "BPSK", "CPFSK", "GFSK",
    "PAM4", "QAM16", "QAM64", "QPSK", "WBFM",
])
SAMPLES_PER_SIGNAL = 128
SNR_RANGE = range(-20, 19, 2)


class ConvertError(Exception):
    """Input does not look like the expected archive."""


def load_archive(path: str) -> dict:
    if not os.path.isfile(path):
        raise ConvertError(f"archive not found: {path}")
    try:
        with open(path, "rb") as fh:
            # the archive predates Python 3; latin1 maps its bytes 1:1
            obj = pickle.load(fh, encoding="latin1")
    except (pickle.UnpicklingError, EOFError, ValueError, ImportError) as exc:
        raise ConvertError(f"cannot unpickle archive {path}: {exc}") from None
    if not isinstance(obj, dict) or not obj:
        raise ConvertError(f"archive {path} is not a non-empty dict")
    return obj


def validate_key(key) -> tuple[str, int]:
    if not (isinstance(key, tuple) and len(key) == 2):
        raise ConvertError(f"archive key {key!r} is not a (modulation, snr) pair")
    mod, snr = key
    if mod not in MODULATIONS:
        raise ConvertError(f"unknown modulation label {mod!r}")
    if not isinstance(snr, (int, np.integer)) or int(snr) not in SNR_RANGE:
        raise ConvertError(f"snr {snr!r} is not an even integer in [-20, 18]")
    return str(mod), int(snr)


def records_from_archive(archive: dict):
    for key in sorted(archive, key=lambda k: (str(k[0]), k[1]) if isinstance(k, tuple) and len(k) == 2 else (str(k),)):
        mod, snr = validate_key(key)
        block = np.asarray(archive[key], dtype=np.float64)
        if block.ndim != 3 or block.shape[1] != 2 or block.shape[2] != SAMPLES_PER_SIGNAL:
            raise ConvertError(
                f"key {key!r}: expected shape (count, 2, {SAMPLES_PER_SIGNAL}), got {block.shape}")
        if not np.isfinite(block).all():
            raise ConvertError(f"key {key!r}: non-finite samples")
        for sample in block:
            yield {
                "label": mod,
                "snr_db": float(snr),
                "dt": 1.0,
                "channels": {"I": sample[0].tolist(), "Q": sample[1].tolist()},
            }


def convert(archive_path: str, out_path: str) -> int:
    archive = load_archive(archive_path)
    lines = [json.dumps(rec, sort_keys=True) for rec in records_from_archive(archive)]
    tmp_path = out_path + ".tmp"
    with open(tmp_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp_path, out_path)
    return len(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--archive", required=True, help="pickled archive path")
    parser.add_argument("--out", required=True, help="output JSONL path")
    args = parser.parse_args(argv)
    try:
        count = convert(args.archive, args.out)
    except ConvertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {count} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
