#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# volterra-stealth documentation build configuration file.

import os
import re
import sys
sys.path.insert(0, os.path.abspath('.'))

# -- General configuration ------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.viewcode']

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = 'volterra-stealth'
copyright = '2026, volterra-stealth contributors'
author = 'volterra-stealth contributors'

with open(os.path.join('volterra_stealth', '__init__.py')) as handle:
    version = re.search(r'^__version__ = "([^"]+)"', handle.read(), re.M).group(1)
release = version

language = None

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store', 'examples', 'example']

pygments_style = 'sphinx'

todo_include_todos = False

# -- Options for HTML output ----------------------------------------------

html_theme = 'alabaster'

html_static_path = []

htmlhelp_basename = 'VolterraStealthdoc'

# -- Options for LaTeX output ---------------------------------------------

latex_elements = {}

latex_documents = [
    (master_doc, 'VolterraStealth.tex', 'volterra-stealth Documentation',
     author, 'manual'),
]

# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'volterra-stealth', 'volterra-stealth Documentation',
     [author], 1)
]
