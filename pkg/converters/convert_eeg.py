#!/usr/bin/env python3
"""Convert a Bonn-layout EEG directory to portable JSONL signals.

Expected layout: one subdirectory per category, each holding single-column
text files of exactly 4096 integer samples (one signal per file, recorded
at 173.61 samples per second). Category directories may carry either the
letter names A-E or the original set codes Z, O, N, F, S, which map to
A, B, C, D, E in that order.

Each signal is cut into --segments equal pieces (default 4, so 4096-sample
files become four 1024-sample records), and every piece becomes one JSONL
record:

    {"label": <category>, "snr_db": null, "dt": 0.00576...,
     "channels": {"x": [...integers...]}}

Sample values are written as integers, exactly as read. Categories, files,
and segments are emitted in sorted order, so a given directory always
converts to the same bytes; the output appears atomically at --out.

This script stands alone on purpose; the JSONL text above is its only
contract with the analysis toolkit.
"""

import argparse
import json
import os
import sys

SAMPLES_PER_FILE = 4096
SAMPLE_RATE_HZ = 173.61
CATEGORY_BY_CODE = {"Z": "A", "O": "B", "N": "C", "F": "D", "S": "E"}
CATEGORIES = frozenset("ABCDE")


class ConvertError(Exception):
    """Input does not look like the expected directory layout."""


def category_for(dirname: str) -> str:
    name = dirname.upper()
    if name in CATEGORIES:
        return name
    if name in CATEGORY_BY_CODE:
        return CATEGORY_BY_CODE[name]
    raise ConvertError(
        f"directory {dirname!r} is not a category (expected A-E or Z/O/N/F/S)")


def read_signal(path: str) -> list[int]:
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.read().split()
    values = []
    for token in raw:
        try:
            values.append(int(token))
        except ValueError:
            raise ConvertError(f"{path}: non-integer sample {token!r}") from None
    if len(values) != SAMPLES_PER_FILE:
        raise ConvertError(
            f"{path}: expected {SAMPLES_PER_FILE} samples, found {len(values)}")
    return values


def records_from_dir(dir_path: str, segments: int):
    if not os.path.isdir(dir_path):
        raise ConvertError(f"not a directory: {dir_path}")
    if segments < 1 or SAMPLES_PER_FILE % segments != 0:
        raise ConvertError(
            f"--segments must divide {SAMPLES_PER_FILE} evenly, got {segments}")
    seg_len = SAMPLES_PER_FILE // segments
    subdirs = [d for d in sorted(os.listdir(dir_path))
               if os.path.isdir(os.path.join(dir_path, d))]
    if not subdirs:
        raise ConvertError(f"no category directories under {dir_path}")
    by_category = sorted((category_for(d), d) for d in subdirs)
    for category, dirname in by_category:
        folder = os.path.join(dir_path, dirname)
        files = [f for f in sorted(os.listdir(folder))
                 if os.path.isfile(os.path.join(folder, f))]
        if not files:
            raise ConvertError(f"category directory {folder} holds no files")
        for filename in files:
            values = read_signal(os.path.join(folder, filename))
            for s in range(segments):
                yield {
                    "label": category,
                    "snr_db": None,
                    "dt": 1.0 / SAMPLE_RATE_HZ,
                    "channels": {"x": values[s * seg_len:(s + 1) * seg_len]},
                }


def convert(dir_path: str, out_path: str, segments: int) -> int:
    lines = [json.dumps(rec, sort_keys=True)
             for rec in records_from_dir(dir_path, segments)]
    tmp_path = out_path + ".tmp"
    with open(tmp_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp_path, out_path)
    return len(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dir", required=True, help="dataset root directory")
    parser.add_argument("--out", required=True, help="output JSONL path")
    parser.add_argument("--segments", type=int, default=4,
                        help="equal pieces per signal (default 4)")
    args = parser.parse_args(argv)
    try:
        count = convert(args.dir, args.out, args.segments)
    except ConvertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {count} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
