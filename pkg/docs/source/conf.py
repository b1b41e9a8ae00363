# -*- coding: utf-8 -*-
#
# banditlab documentation build configuration file.
import os
import sys

CURDIR = os.path.abspath(os.path.dirname(__file__))
sys.path.append(os.path.join(CURDIR, '..', '..'))
sys.path.append(os.path.join(CURDIR, '..'))

import banditlab  # NOQA

extensions = ['sphinx.ext.autodoc']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'banditlab'
copyright = u'2026, the banditlab authors'

version = release = banditlab.__version__

exclude_patterns = []

html_theme = 'alabaster'
htmlhelp_basename = 'banditlabdoc'

man_pages = [
    ('commands', 'banditlab', u'banditlab command line',
     [u'the banditlab authors'], 1)
]
