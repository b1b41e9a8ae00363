from concurrent.futures import ProcessPoolExecutor
from itertools import repeat

from banditlab.runners.local import LocalRunner
from banditlab.util import logger


class ParallelRunner(LocalRunner):
    """Runs the batches over a pool of worker processes.

    Batches are fixed by the configuration and come back in submission
    order, so the merged result is the one of the local runner, whatever
    the number of workers. Schedules built from a Python callable must be
    picklable (a module-level function) to cross process boundaries.
    """

    name = 'parallel'
    options = {}

    def _run_batches(self):
        from banditlab.montecarlo import run_batch

        indexes = [index for index, _, _ in self.config.batches]
        workers = min(self.config.workers, len(indexes))
        logger.debug('%d batch(es) over %d worker(s)'
                     % (len(indexes), workers))

        with ProcessPoolExecutor(max_workers=workers) as executor:
            for batch in executor.map(run_batch, repeat(self.config),
                                      indexes, repeat(self.regime)):
                yield batch
