"""balancekit: a game-balance testing toolkit.

Deterministic headless game environments, small from-scratch policy-gradient
trainers, an evaluation harness that reduces play sessions to median score
matrices, and analyzers that turn those matrices into difficulty-spike and
chance-dominance findings.
"""

import os

# multi-threaded BLAS reductions reorder float sums; training must reproduce
# bit for bit across processes, and these matrices are too small to benefit
# from threads anyway. Effective only if we are imported before numpy.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

__version__ = "0.1.0"
