# imported before any test module: pins BLAS to one thread so float sums
# reproduce bit for bit regardless of which module imports numpy first
import os

for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")
