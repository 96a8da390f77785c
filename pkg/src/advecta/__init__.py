"""Scalar transport lab: long time-step split advection and implicit
method-of-lines transport on logically rectangular distorted meshes."""

__version__ = "0.1.0"

from ._kernels import get_backend, set_backend, use_backend  # noqa: F401
