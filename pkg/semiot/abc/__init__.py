# -*- coding: utf-8 -*-
################################################################################
# semiot/abc/__init__.py
# Initialization file for the semiot abstract base class core.

"""Abstract base classes for the persistent and transient types of semiot.
"""

from ._core import (Persistent, Transient)
