import atexit
import functools
import io
import os
import sys
import unittest

import numpy as np

from banditlab.dynamics import BanditParams


# acceptance-scale experiments take minutes; opt in with this variable
ACCEPTANCE = 'BANDITLAB_ACCEPTANCE' in os.environ

acceptance = unittest.skipUnless(ACCEPTANCE,
                                 'set BANDITLAB_ACCEPTANCE to run')


def hush(func):
    """Make the passed function silent."""
    @functools.wraps(func)
    def _silent(*args, **kw):
        old_stdout = sys.stdout
        old_stderr = sys.stderr
        sys.stdout = io.StringIO()
        sys.stderr = io.StringIO()
        try:
            return func(*args, **kw)
        finally:
            sys.stdout = old_stdout
            sys.stderr = old_stderr
    return _silent


def draws_for(branches):
    """(u, v) draws producing the given branch codes.

    'A' is RewardA, 'B' PenaltyB and '-' NoChange; u = 0 always picks arm
    A, u close to 1 always picks arm B (for interior states).
    """
    rows = []
    for branch in branches:
        if branch == 'A':
            rows.append((0.0, 0.0))
        elif branch == 'B':
            rows.append((0.999999, 0.0))
        else:
            rows.append((0.0, 0.999999))
    return np.array(rows)


def random_params(rng, count):
    """``count`` valid (pa, pb) pairs."""
    res = []
    while len(res) < count:
        pa, pb = sorted(rng.uniform(0.01, 0.99, size=2), reverse=True)
        if pa - pb > 1e-3:
            res.append(BanditParams(pa, pb))
    return res


_files = []


def rm_onexit(path):
    _files.append(path)


def cleanup_files():
    for _file in _files:
        if os.path.exists(_file):
            os.remove(_file)


atexit.register(cleanup_files)
