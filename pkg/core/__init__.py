"""Tensor primitives, linear-algebra kernels and the shared exception hierarchy."""
