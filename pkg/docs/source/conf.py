from sphinx_pyproject import SphinxConfig

config = SphinxConfig("../../pyproject.toml", style="poetry")

project = "xychain"
copyright = "2026, xychain developers"
author = config.author
release = config.version

extensions = [
    "autoapi.extension",
    "myst_parser",
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinx_copybutton",
]

html_theme = "furo"
html_title = f"xychain {release}"

# deflist for the configuration reference, dollarmath for formulas.
myst_enable_extensions = ["deflist", "dollarmath"]

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable", None),
    "scipy": ("https://docs.scipy.org/doc/scipy", None),
    "msgspec": ("https://jcristharif.com/msgspec", None),
}

autoapi_type = "python"
autoapi_dirs = ["../../src/xychain"]
autoapi_generate_api_docs = False
autoapi_options = ["members", "show-inheritance"]

autodoc_typehints = "description"
napoleon_custom_sections = [("Arguments", "params_style")]
suppress_warnings = ["autoapi.python_import_resolution"]
