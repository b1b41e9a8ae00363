import logging
import math
import os
import unittest
from tempfile import mkstemp

import numpy as np

from banditlab.util import (set_logger, jsonable, dump_json, load_json,
                            get_quantiles, median, dict_hash,
                            seconds_to_time)


class TestUtil(unittest.TestCase):

    def test_set_logger(self):
        name = 'banditlab.test_util'
        log = logging.getLogger(name)
        before = len(log.handlers)
        set_logger(name=name)
        self.assertEqual(len(log.handlers), before + 1)
        self.assertEqual(log.handlers[-1].level, logging.INFO)

        fd, logfile = mkstemp()
        os.close(fd)
        try:
            set_logger(debug=True, name=name, logfile=logfile)
            self.assertEqual(log.handlers[-1].level, logging.DEBUG)
        finally:
            for handler in list(log.handlers):
                handler.close()
                log.removeHandler(handler)
            os.remove(logfile)

    def test_jsonable(self):
        data = {1: (np.float64(0.5), np.int64(3)), 'a': np.array([1.5, 2]),
                'b': np.bool_(True), 'c': float('nan'), 'd': -math.inf}
        self.assertEqual(jsonable(data), {'1': [0.5, 3], 'a': [1.5, 2.0],
                                          'b': True, 'c': None, 'd': None})

    def test_dump_json(self):
        text = dump_json({'b': 1, 'a': [np.float64(0.25)]})
        self.assertTrue(text.endswith('\n'))
        self.assertLess(text.index('"a"'), text.index('"b"'))
        self.assertEqual(load_json(text), {'a': [0.25], 'b': 1})
        self.assertEqual(text, dump_json({'a': [0.25], 'b': 1}))

    def test_get_quantiles(self):
        data = range(100)
        quantiles = 0, 0.1, 0.5, 0.9, 1
        res = get_quantiles(data, quantiles)
        self.assertEqual(len(res), 5)
        self.assertEqual(res[0], 0)
        self.assertEqual(res[-1], 99)
        self.assertEqual(get_quantiles([], (0.5,)), [None])
        self.assertAlmostEqual(median([3, 1, 2]), 2)

    def test_dict_hash(self):
        data1 = {'a': 2, 'b': 4}
        data2 = {'b': 4, 'a': 2}

        self.assertEqual(dict_hash(data1), dict_hash(data2))

        data1['count'] = 'b'
        self.assertNotEqual(dict_hash(data1), dict_hash(data2))

        self.assertEqual(dict_hash(data1, omit_keys=['count']),
                         dict_hash(data2))

    def test_seconds_to_time(self):
        self.assertEqual(seconds_to_time(0), 'Now.')
        self.assertEqual(seconds_to_time(12.5), '12.50 sec')
        self.assertEqual(seconds_to_time(3725), '1 h 2 min and 5.00 sec.')
        self.assertEqual(seconds_to_time(3725, loose=True), '1 h')
