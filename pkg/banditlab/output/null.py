class NullOutput(object):
    """Drops every experiment event.

    Picked when an experiment runs without any output, e.g. from the API or
    with ``--json``, where the summary goes to stdout in one piece.
    """
    name = 'null'
    options = {}

    def __init__(self, result, args):
        self.result = result

    def push(self, called_method, *args, **data):
        pass

    def flush(self):
        pass
