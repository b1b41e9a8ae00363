import shutil
import sys

from banditlab.util import seconds_to_time


def get_terminal_width():
    return shutil.get_terminal_size((100, 20)).columns


def get_screen_relative_value(percent, terminal_width):
    """Convert a percentage into a value relative to the width of the screen"""
    return int(round(percent * (terminal_width / 100.))) - 8


class StdOutput(object):
    name = 'stdout'
    options = {}

    def __init__(self, result, args):
        self.results = result
        self.args = args
        self._terminal_width = get_terminal_width()

    def flush(self):
        write = sys.stdout.write
        self._progress()
        write("\nDuration: %s" % seconds_to_time(self.results.duration))
        write("\nReplicates: %d" % self.results.nb_replicates)
        write("\nFailures: %d" % self.results.nb_failures)
        write("\n\n")

        if self.results.nb_failures:
            self._print_failures(self.results.failures)
            write('\n')

        if self.results.summary is not None:
            write(str(self.results.summary))
            write('\n')

        sys.stdout.flush()
        sys.stderr.flush()

    def _print_failures(self, records):
        # 3 most commons
        errors = {}
        for record in records:
            errors[record.failure] = errors.get(record.failure, 0) + 1

        errors = sorted((-count, failure) for failure, count
                        in errors.items())
        for count, failure in errors[:3]:
            sys.stderr.write("%d occurrences of: \n" % -count)
            sys.stderr.write("    %s\n" % failure)

    def refresh(self):
        self._progress()

    def _progress(self):
        percent = min(self.results.progress(), 100)
        rel_percent = get_screen_relative_value(percent, self._terminal_width)

        bar = '[' + ('=' * rel_percent).ljust(self._terminal_width - 8) + ']'
        out = "\r%s %s%%" % (bar, str(percent).rjust(3))
        sys.stdout.write(out)
        sys.stdout.flush()

    def push(self, method_called, *args, **data):
        pass
