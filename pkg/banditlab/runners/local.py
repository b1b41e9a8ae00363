import sys

from banditlab.util import logger
from banditlab.results import ExperimentResult
from banditlab.output import create_output


class LocalRunner(object):
    """Local experiment runner.

    Runs the batches of an experiment one after the other in this process,
    feeds them to the result and lets the outputs observe it.
    """

    name = 'local'
    options = {}

    def __init__(self, config, args=None):
        self.config = config
        self.args = args or {}
        self._result = None
        self.outputs = []
        self.regime = None

    @property
    def result(self):
        if self._result is None:
            self._result = ExperimentResult(self.config, self.args)
        return self._result

    def register_output(self, output_name):
        output = create_output(output_name, self.result, self.args)
        self.outputs.append(output)
        self.result.add_observer(output)

    def execute(self):
        """Runs the experiment and returns its summary."""
        from banditlab.montecarlo import ExperimentSummary

        for output in self.args.get('output', ['stdout']):
            self.register_output(output)

        self.config.validate()
        self.regime = self.config.regime()
        result = self.result
        try:
            result.startExperiment(self.config)
            logger.info('%d replicate(s) of %s, N=%d, seed=%d'
                        % (self.config.replicates, self.config.schedule.spec,
                           self.config.horizon, self.config.seed))
            for batch in self._run_batches():
                logger.debug('merging batch %d' % batch.index)
                result.addBatch(batch)
                self.refresh()

            summary = ExperimentSummary(self.config, result, self.regime)
            result.stopExperiment(summary)
            logger.info(str(result))
            self.flush()
            return summary
        except Exception:
            logger.debug('experiment aborted: %s' % str(sys.exc_info()[1]))
            raise
        finally:
            result.close()

    def _run_batches(self):
        from banditlab.montecarlo import run_batch

        for index, first, stop in self.config.batches:
            logger.debug('batch %d: replicates %d to %d'
                         % (index, first, stop - 1))
            yield run_batch(self.config, index, self.regime)

    def flush(self):
        for output in self.outputs:
            if hasattr(output, 'flush'):
                output.flush()

    def refresh(self):
        for output in self.outputs:
            if hasattr(output, 'refresh'):
                output.refresh()
