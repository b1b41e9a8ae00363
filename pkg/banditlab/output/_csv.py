import csv


class CSVOutput(object):
    """Streams one row per replicate, as the replicates come in."""
    name = 'csv'
    options = {'filename': ('Filename', str, 'replicates.csv', True)}

    def __init__(self, result, args):
        from banditlab.montecarlo import REPLICATE_HEADER

        self.result = result
        self.filename = args.get('output_csv_filename', 'replicates.csv')
        self.fd = open(self.filename, 'w')
        self.writer = csv.writer(self.fd, lineterminator='\n')
        self.writer.writerow(REPLICATE_HEADER)

    def push(self, called_method, *args, **data):
        if called_method in ('addReplicate', 'addFailure'):
            self.writer.writerow(args[0].csv_row())

    def flush(self):
        self.fd.close()
