"""Backend implementations of the hot inner loops.

`_native` is the compiled Cython twin of `pyfallback`; both expose the same
functions with bit-identical results (same summation order, same algorithms).
"""
