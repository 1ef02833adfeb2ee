"""mtcurator: curation and naturalness evaluation for machine-translation data.

Quantifies translationese in parallel corpora (span-ratio analytics from
annotation exports, perplexity / lexical density / length variety metrics)
and mitigates it by polishing references, teacher re-translation, and
perplexity-ranked filtering, emitting training-ready datasets and reports.
"""

__version__ = "0.1.0"
