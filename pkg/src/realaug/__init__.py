"""Reality-conforming LiDAR object-into-scene augmentation."""

__version__ = "0.1.0"

from .kernels import BACKEND as KERNEL_BACKEND  # noqa: E402
