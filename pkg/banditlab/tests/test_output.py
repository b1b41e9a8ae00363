import io
import os
import shutil
import sys
import tempfile
import unittest

from mock import Mock, patch

from banditlab.analysis import TO_ONE, UNDECIDED
from banditlab.montecarlo import ReplicateRecord, REPLICATE_HEADER
from banditlab.output import (create_output, output_list, register_output,
                              CSVOutput, JSONOutput, NullOutput, StdOutput)
from banditlab import output
from banditlab.util import load_json


class FakeResult(object):
    def __init__(self, nb_failures=0):
        self.duration = 12.5
        self.nb_replicates = 10
        self.nb_failures = nb_failures
        self.failures = [ReplicateRecord(i, UNDECIDED, 0.5, 0.5,
                                         failure='no tail: x')
                         for i in range(nb_failures)]
        self.summary = None

    def progress(self):
        return 50


class FakeOutput(object):
    name = 'fake'
    options = {'arg1': ('Some doc', str, None, False)}

    def __init__(self, result, args):
        self.args = args
        self.result = result


class TestOutputs(unittest.TestCase):

    def setUp(self):
        self.dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.dir)

    def test_create_output(self):
        self.assertRaises(NotImplementedError, create_output, 'xxx', None,
                          {})
        self.assertIsInstance(create_output('null', None, {}), NullOutput)

    def test_register(self):
        with patch.dict(output._OUTPUTS):
            register_output(FakeOutput)
            self.assertIn(FakeOutput, output_list())
            fake = create_output('fake', 'result', {'arg1': 'x'})
            self.assertEqual(fake.args, {'arg1': 'x'})
        self.assertNotIn(FakeOutput, output_list())

    def test_csv(self):
        filename = os.path.join(self.dir, 'replicates.csv')
        csv = CSVOutput(FakeResult(), {'output_csv_filename': filename})
        csv.push('addReplicate', ReplicateRecord(0, TO_ONE, 0.9995, 0.0005,
                                                 beta_hat=0.41, stderr=0.02,
                                                 mode='slow'))
        csv.push('addFailure', ReplicateRecord(1, UNDECIDED, 0.5, 0.5,
                                               failure='no tail: x'))
        csv.push('stopExperiment')
        csv.flush()

        with open(filename) as f:
            lines = f.read().splitlines()
        self.assertEqual(lines, [','.join(REPLICATE_HEADER),
                                 '0,to_one,0.9995,0.41,0.02,slow',
                                 '1,undecided,0.5,,,'])

    def test_json(self):
        filename = os.path.join(self.dir, 'summary.json')
        result = FakeResult()
        out = JSONOutput(result, {'output_json_filename': filename})
        out.flush()
        self.assertFalse(os.path.exists(filename))

        result.summary = Mock()
        result.summary.as_dict.return_value = {'counts': {'to_one': 3}}
        out.push('stopExperiment')
        out.flush()
        with open(filename) as f:
            self.assertEqual(load_json(f.read()),
                             {'counts': {'to_one': 3}})

    def test_null(self):
        null = NullOutput(FakeResult(), {})
        null.push('addReplicate', None)
        null.flush()


class TestStdOutput(unittest.TestCase):

    def setUp(self):
        self.oldstdout = sys.stdout
        self.oldstderr = sys.stderr
        sys.stdout = io.StringIO()
        sys.stderr = io.StringIO()

    def tearDown(self):
        sys.stdout = self.oldstdout
        sys.stderr = self.oldstderr

    def test_std(self):
        result = FakeResult()
        result.summary = '10 replicates: 0 to 0, 10 to 1, 0 undecided'
        std = StdOutput(result, {})
        std.push('addReplicate')
        std.refresh()
        std.flush()

        out = sys.stdout.getvalue()
        self.assertIn(' 50%', out)
        self.assertIn('Replicates: 10', out)
        self.assertIn('Duration: 12.50 sec', out)
        self.assertIn('10 replicates: 0 to 0', out)

    def test_failures(self):
        std = StdOutput(FakeResult(nb_failures=2), {})
        std.flush()
        self.assertIn('Failures: 2', sys.stdout.getvalue())
        self.assertIn('2 occurrences of:', sys.stderr.getvalue())
        self.assertIn('no tail: x', sys.stderr.getvalue())
