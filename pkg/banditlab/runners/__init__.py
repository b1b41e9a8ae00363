from banditlab.runners.local import LocalRunner  # NOQA
from banditlab.runners.parallel import ParallelRunner  # NOQA
