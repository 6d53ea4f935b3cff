"""Exact and p-adic computation of symmetric power L-functions of
hyper-Kloosterman sums over finite fields.

The pipeline: enumerate closed points of the torus, evaluate Kl_n(t, m)
exactly in Z[zeta_p], assemble local L-factors, expand finite (Sym^k) and
infinite (Sym^{kappa,infinity}) symmetric power Euler products to a degree
cap, and compare the resulting Newton data against the Hodge lower bound
polygon with certified precision.
"""

__version__ = "0.1.0"
