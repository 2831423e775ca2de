"""Toolkit for euphemism disambiguation experiments over PET corpora.

Subpackages cover corpus management, embedding backends, paraphrase-based
vagueness labeling, sensitive-word scoring, reproducible dataset splits, a
classification harness, and report/figure rendering.
"""

__version__ = "0.1.0"

GENERATOR_ID = "numpy.random.PCG64"
