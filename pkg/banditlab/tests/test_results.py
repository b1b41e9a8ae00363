import unittest
from datetime import datetime, timedelta

import numpy as np
from mock import Mock

from banditlab.analysis import TO_ONE, TO_ZERO
from banditlab.montecarlo import BatchResult, ReplicateRecord
from banditlab.results import ExperimentResult


TIME1 = datetime(2013, 5, 14, 0, 51, 8)
_1 = timedelta(seconds=1)


class FakeConfig(object):
    replicates = 4


def batch(index, first, xs, failure=None):
    records = []
    for offset, x in enumerate(xs):
        outcome = TO_ONE if x > 0.5 else TO_ZERO
        records.append(ReplicateRecord(first + offset, outcome, x, 1 - x))
    if failure is not None:
        records[-1].failure = failure
    xs = np.array([[0.5, x] for x in xs])
    return BatchResult(index, records, np.array([1, 10]), xs.sum(axis=0),
                       (xs * xs).sum(axis=0))


class TestExperimentResult(unittest.TestCase):

    def test_observers(self):
        result = ExperimentResult(FakeConfig())
        obs = Mock()
        result.add_observer(obs)
        result.startExperiment(when=TIME1)
        result.addBatch(batch(0, 0, [0.9, 0.1], failure='no tail'))
        result.stopExperiment('summary')

        called = [call[0][0] for call in obs.push.call_args_list]
        self.assertEqual(called, ['startExperiment', 'addReplicate',
                                  'addFailure', 'stopExperiment'])
        self.assertEqual(result.summary, 'summary')
        self.assertEqual(result.nb_failures, 1)
        self.assertEqual(result.failures[0].replicate, 1)

    def test_moments(self):
        result = ExperimentResult(FakeConfig())
        result.addBatch(batch(0, 0, [0.9, 0.1]))
        result.addBatch(batch(1, 2, [0.7, 0.3]))
        self.assertEqual(result.nb_replicates, 4)
        self.assertEqual([r.replicate for r in result.records], [0, 1, 2, 3])
        self.assertEqual(list(result.checkpoints), [1, 10])
        self.assertAlmostEqual(result.mean_x[0], 0.5)
        self.assertAlmostEqual(result.mean_x[1], 0.5)
        self.assertAlmostEqual(result.stderr_x[0], 0.0)
        expected = np.std([0.9, 0.1, 0.7, 0.3], ddof=1) / 2
        self.assertAlmostEqual(result.stderr_x[1], expected)

    def test_single_replicate_stderr(self):
        result = ExperimentResult(FakeConfig())
        result.addBatch(batch(0, 0, [0.9]))
        self.assertEqual(list(result.stderr_x), [0.0, 0.0])

    def test_progress(self):
        result = ExperimentResult()
        self.assertEqual(result.progress(), 100)
        result = ExperimentResult(FakeConfig())
        self.assertEqual(result.progress(), 0)
        result.addBatch(batch(0, 0, [0.9, 0.1, 0.2]))
        self.assertEqual(result.progress(), 75)

    def test_duration(self):
        result = ExperimentResult(FakeConfig())
        self.assertEqual(result.duration, 0)
        result.startExperiment(when=TIME1)
        result.stop_time = TIME1 + _1
        self.assertEqual(result.duration, 1.0)
        self.assertIn('Ran 0 replicates in 1.00 sec', str(result))
