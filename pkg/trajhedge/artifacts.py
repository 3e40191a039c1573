#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
:App:       trajhedge
:Purpose:   Reading and writing on-disk artifacts.

            Pipeline stages hand off through files: CSV tables (each
            preceded by a single ``#`` provenance comment line) and
            JSON documents. Floats are written with 17 significant
            digits so artifacts reload losslessly.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

"""

import json
import logging
import os

import pandas as pd

logger = logging.getLogger(__name__)


def read_csv(path: str) -> pd.DataFrame:
    """Read a CSV artifact, skipping the provenance comment line.

    Raises:
        FileNotFoundError: If the file does not exist.

    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f'Artifact not found: {path}')
    return pd.read_csv(path, comment='#')


def read_json(path: str) -> dict:
    """Read a JSON artifact.

    Raises:
        FileNotFoundError: If the file does not exist.

    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f'Artifact not found: {path}')
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def write_csv(df: pd.DataFrame, path: str, provenance: str=None) -> str:
    """Write a frame as a CSV artifact.

    Args:
        df (pd.DataFrame): Frame to be written, without its index.
        path (str): Output path; parent directories are created.
        provenance (str, optional): Text of the comment line written
            above the header row. Defaults to None.

    Returns:
        str: The path written.

    """
    _makedirs(path)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        if provenance:
            f.write(f'# {provenance}\n')
        df.to_csv(f, index=False, float_format='%.17g', lineterminator='\n')
    logger.debug('Written: %s', path)
    return path


def write_json(obj: dict, path: str) -> str:
    """Write a dictionary as a JSON artifact (sorted keys, indented).

    Returns:
        str: The path written.

    """
    _makedirs(path)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write('\n')
    logger.debug('Written: %s', path)
    return path


def _makedirs(path: str):
    dirname = os.path.dirname(os.path.abspath(path))
    os.makedirs(dirname, exist_ok=True)
