"""Tools for a robot vulnerability database.

Record schema and taxonomy (``records``), CVSS vectors and scores
(``severity``), duplicate detection with active learning (``dedup``),
statistics and the generated report (``analytics``), disclosure deadlines
(``disclosure``), the on-disk corpus (``store``) and the ``rvd`` CLI.
"""

__version__ = "0.1.0"
