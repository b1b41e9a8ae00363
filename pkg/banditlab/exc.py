

class BanditlabError(Exception):
    pass


class ValidationError(BanditlabError):
    """Raised when an input violates the precondition of an operation.

    The CLI exits with status 1 on these.
    """


class InvalidParameters(ValidationError):
    pass


class ScheduleError(ValidationError):
    pass


class ConfigError(ValidationError):

    def __init__(self, message, filename=None, lineno=None):
        self.filename = filename
        self.lineno = lineno
        if lineno is not None:
            message = '%s:%d: %s' % (filename or '<config>', lineno, message)
        super(ConfigError, self).__init__(message)


class AnalysisError(BanditlabError):
    pass


class DistanceNotPositive(AnalysisError):
    pass


class NoTailFound(AnalysisError):
    pass


class InsufficientCheckpoints(AnalysisError):
    pass


class StatisticsError(BanditlabError):
    pass


class ZeroTrials(StatisticsError):
    pass


class InsufficientSamples(StatisticsError):
    pass
