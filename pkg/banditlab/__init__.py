try:
    from importlib.metadata import version, PackageNotFoundError
except ImportError:     # pragma: no cover
    from importlib_metadata import version, PackageNotFoundError

try:
    __version__ = version('banditlab')
except PackageNotFoundError:    # running from a source checkout
    __version__ = '0.1'
