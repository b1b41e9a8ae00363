from banditlab.results.base import ExperimentResult  # NOQA
