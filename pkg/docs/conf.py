# Sphinx configuration for the tscale docs

project = "tscale"
copyright = "2026, tscale developers"
author = "tscale developers"
release = "0.1.0"

extensions = ["sphinx.ext.mathjax"]
templates_path = ["_templates"]
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

html_theme = "alabaster"
html_static_path = ["_static"]
