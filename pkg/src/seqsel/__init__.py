"""Cost-aware sequence selection for fiber nonlinearity mitigation.

A small research toolkit: sphere-shaped dual-pol 64-QAM blocks are
scored with a reduced-complexity nonlinear-interference metric, the best
of a scrambled candidate set is transmitted over a split-step Manakov
WDM link, and a sweep harness maps the spectral-efficiency gain against
the metric's real-multiplication cost.
"""

__version__ = "0.1.0"
