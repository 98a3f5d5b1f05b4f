# -*- coding: utf-8 -*-
################################################################################
# semiot/util/__init__.py
# Initialization file for the semiot utilities.

"""Utility functions shared by the semiot modules.
"""

from ._core import (
    shortrepr,
    fieldstr,
    json_digest,
    freeze,
    seed_sequence,
    derive_seed,
    make_generator,
    array_hash,
    file_checksum,
    fmtnum,
    write_csv,
    generator_state,
    restore_generator)
