# -*- coding: utf-8 -*-
################################################################################
# semiot/__main__.py
# Runs the semiot command-line interface.

from ._cli import console_main

console_main()
