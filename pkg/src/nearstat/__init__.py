"""Stationarity notions and first-order hardness constructions for nonsmooth optimization.

The package bundles the pieces needed to reproduce the hardness experiments:

- ``vectorspace``: deterministic linear-algebra and sampling utilities,
- ``zoo``: the test functions (spiral, channel, clamped compositions, Warga),
- ``oracle_game``: the query/reply protocol between algorithms and oracles,
- ``adversaries``: hard quadratic instances and adaptive oracle constructions,
- ``solvers``: bundled first-order methods (subgradient, steepest descent,
  randomized smoothing, Goldstein-style descent),
- ``stationarity``: minimum-norm-point machinery and stationarity certificates,
- ``harness``: experiment runners, verification suites and report utilities.
"""

from nearstat.zoo import FirstOrderReply

__all__ = ["FirstOrderReply"]
__version__ = "0.1.0"
