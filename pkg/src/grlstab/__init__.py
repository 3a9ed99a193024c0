"""Numerical laboratory for multi-fidelity stability of graph representation learning.

Subpackages cover graph topology and receptive fields, weakly dependent
vertex samplers (binary-spin Gibbs family with enumerable Dobrushin
coefficient), certified loss objectives, coupled SGD, a closed-form
equivariant GNN, empirical stability estimation, closed-form bound
evaluation, sparsity-regularized model selection, and a batch CLI.
"""

__version__ = "0.1.0"
