from banditlab.util import dump_json


class JSONOutput(object):
    """Writes the experiment summary to a JSON file once it is over."""
    name = 'json'
    options = {'filename': ('Filename', str, 'summary.json', True)}

    def __init__(self, result, args):
        self.result = result
        self.filename = args.get('output_json_filename', 'summary.json')

    def push(self, called_method, *args, **data):
        pass

    def flush(self):
        summary = self.result.summary
        if summary is None:
            return
        with open(self.filename, 'w') as fd:
            fd.write(dump_json(summary.as_dict()))
