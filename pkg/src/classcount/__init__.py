"""Class-count estimation from frequency-of-frequencies count data.

Estimates how many classes a population contains when only classes
observed at least once in a sample are visible.  Counts per detected
class follow a zero-truncated Poisson mixture; the undetected odds admits
identifiable lower bounds (moment-matrix bounds, a Kolmogorov-band linear
program) but no honest upper bound, so all confidence statements here are
one-sided.

Main entry points:

- :func:`classcount.ingest.parse_frequencies` / ``load_bundled`` for data,
- :func:`classcount.hankel.ladder` for the moment-bound sequence,
- :func:`classcount.npmle.fit_npmle` for the mixing-distribution MLE,
- :func:`classcount.envelope.lower_confidence_limit` for the band limit,
- :func:`classcount.report.analyze` / the ``classcount`` CLI for reports.
"""

__version__ = "0.1.0"

from .ingest import FrequencyData, from_raw_counts, load_bundled, parse_frequencies
from .npmle import MixingDistribution, PopulationModel, fit_npmle

__all__ = [
    "__version__",
    "FrequencyData",
    "parse_frequencies",
    "from_raw_counts",
    "load_bundled",
    "MixingDistribution",
    "PopulationModel",
    "fit_npmle",
]
