_OUTPUTS = {}


def create_output(kind, result, args):
    if kind not in _OUTPUTS:
        raise NotImplementedError(kind)

    return _OUTPUTS[kind](result, args)


def register_output(klass):
    _OUTPUTS[klass.name] = klass


def output_list():
    return _OUTPUTS.values()


# register our own plugins
from banditlab.output.null import NullOutput  # NOQA
from banditlab.output._file import JSONOutput  # NOQA
from banditlab.output._csv import CSVOutput  # NOQA
from banditlab.output.std import StdOutput  # NOQA

for output in (NullOutput, JSONOutput, CSVOutput, StdOutput):
    register_output(output)
