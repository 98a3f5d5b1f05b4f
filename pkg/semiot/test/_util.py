# -*- coding: utf-8 -*-
################################################################################
# semiot/test/_util.py
# Tests of the formatting and hashing helpers in semiot.util.

from unittest import TestCase

import numpy as np

from ..util import (shortrepr, fieldstr, json_digest)
from .._model import DualWeights

class TestFormatting(TestCase):
    """Tests of `shortrepr`, `fieldstr`, and `json_digest`."""
    def test_shortrepr(self):
        """Tests the compact field reprs."""
        self.assertEqual(shortrepr(np.array([1, 2])), '[1, 2]')
        self.assertEqual(shortrepr(np.zeros((3, 4))), '<3x4 float64 array>')
        self.assertEqual(shortrepr(0.1 + 0.2), '0.3')
        self.assertEqual(shortrepr('sphere'), "'sphere'")
    def test_fieldstr(self):
        """Tests joining and truncating fields."""
        fields = [('a', 1), ('b', 2), ('c', 3)]
        self.assertEqual(fieldstr(fields), 'a=1, b=2, c=3')
        self.assertEqual(fieldstr(fields, maxlen=13), 'a=1, b=2, c=3')
        self.assertEqual(fieldstr(fields, maxlen=10), 'a=1, ...')
        self.assertEqual(fieldstr(fields, maxlen=3), '...')
        with self.assertRaises(ValueError):
            fieldstr(fields, maxlen=2)
        self.assertTrue(repr(DualWeights([0.0, 1.0])).startswith('DualWeights(g='))
    def test_digest(self):
        """Tests that digests follow content and ignore key order."""
        a = json_digest({"p": [0.5, 0.5], "k": 2})
        self.assertEqual(a, json_digest({"k": 2, "p": [0.5, 0.5]}))
        self.assertNotEqual(a, json_digest({"k": 3, "p": [0.5, 0.5]}))
        self.assertGreaterEqual(a, 0)
        self.assertLess(a, 2**63)
        self.assertLess(json_digest("x", bits=16), 2**16)
