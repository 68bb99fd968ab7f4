import os, sys
sys.path.insert(0, os.path.abspath("."))

import dmcodec

project = "dmcodec"
version = dmcodec.__version__
release = version.split("+")[0]
copyright = "2021, dmcodec developers"

extensions = [
    "sphinx.ext.intersphinx",
    "sphinx.ext.doctest",
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx_rtd_theme",
]

root_doc = "cover"

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "torch":  ("https://pytorch.org/docs/stable", None),
}

napoleon_numpy_docstring = True

html_theme = "sphinx_rtd_theme"
