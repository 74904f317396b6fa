# Configuration file for the Sphinx documentation builder.
#
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

import os
import sys
sys.path.insert(0, os.path.abspath('../'))


# -- Project information -----------------------------------------------------

project = 'chiraldyn'
copyright = '2026, chiraldyn developers'
author = 'chiraldyn developers'

release = 'v0.1.0'


# -- General configuration ---------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.doctest', 'sphinx.ext.intersphinx']

templates_path = ['_templates']

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

autodoc_mock_imports = ['numpy', 'scipy', 'pandas']


# -- Options for HTML output -------------------------------------------------

html_theme = 'sphinx_rtd_theme'

pygments_style = 'sphinx'
html_static_path = ['_static']
