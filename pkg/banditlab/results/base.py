import math
from datetime import datetime

import numpy as np


class ExperimentResult(object):
    """Experiment result.

    Receives the batches of an experiment, in batch order, and keeps the
    replicate records and the per-checkpoint moments of X_n. Merges only
    add: nothing is ever recomputed or reordered.

    Every event (``startExperiment``, ``addReplicate``, ``addFailure``,
    ``stopExperiment``) is relayed to the observers after it was handled.
    """

    def __init__(self, config=None, args=None):
        self.config = config
        self.args = args or {}
        self.records = []
        self.checkpoints = None
        self.sum_x = None
        self.sum_x2 = None
        self.start_time = None
        self.stop_time = None
        self.summary = None
        self.observers = []

    def __str__(self):
        return 'Ran %d replicates in %.2f sec. %d failure(s).' % (
            self.nb_replicates, self.duration, self.nb_failures)

    @property
    def nb_replicates(self):
        return len(self.records)

    @property
    def nb_failures(self):
        return len(self.failures)

    @property
    def failures(self):
        return [record for record in self.records
                if record.failure is not None]

    @property
    def duration(self):
        if self.start_time is None:
            return 0
        end = self.stop_time or datetime.utcnow()
        return (end - self.start_time).total_seconds()

    @property
    def total(self):
        if self.config is None:
            return 0
        return self.config.replicates

    @property
    def mean_x(self):
        return self.sum_x / self.nb_replicates

    @property
    def stderr_x(self):
        size = self.nb_replicates
        if size < 2:
            return np.zeros_like(self.sum_x)
        mean = self.mean_x
        variance = (self.sum_x2 - size * mean * mean) / (size - 1)
        return np.sqrt(np.maximum(variance, 0.0) / size)

    def startExperiment(self, config=None, when=None):
        if config is not None:
            self.config = config
        self.start_time = when or datetime.utcnow()

    def addBatch(self, batch):
        if self.sum_x is None:
            self.checkpoints = batch.checkpoints
            self.sum_x = np.zeros(len(batch.checkpoints))
            self.sum_x2 = np.zeros(len(batch.checkpoints))
        self.sum_x += batch.sum_x
        self.sum_x2 += batch.sum_x2

        for record in batch.records:
            if record.failure is None:
                self.addReplicate(record)
            else:
                self.addFailure(record)

    def addReplicate(self, record):
        self.records.append(record)

    def addFailure(self, record):
        self.records.append(record)

    def stopExperiment(self, summary=None):
        self.stop_time = datetime.utcnow()
        self.summary = summary

    def progress(self):
        if self.total == 0:
            return 100
        return int(math.floor(100.0 * self.nb_replicates / self.total))

    def __getattribute__(self, name):
        # call the observer's "push" method after calling the method of the
        # result itself.
        attr = object.__getattribute__(self, name)
        if name in ('startExperiment', 'stopExperiment', 'addReplicate',
                    'addFailure'):

            def wrapper(*args, **kwargs):
                ret = attr(*args, **kwargs)
                for obs in self.observers:
                    obs.push(name, *args, **kwargs)
                return ret
            return wrapper
        return attr

    def add_observer(self, observer):
        self.observers.append(observer)

    def close(self):
        pass
