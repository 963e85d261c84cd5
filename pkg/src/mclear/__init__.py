"""Two-settlement electricity market clearing under uncertainty.

Modules: ``model`` (case data), ``lp`` (LP layer and solvers), ``clearing``
(deterministic, stochastic and wait-and-see markets), ``metrics``
(settlements, distortion, bounds and checks), ``io`` (files, built-in
cases, scenarios, reports) and ``cli``.
"""
__version__ = "0.1.0"
