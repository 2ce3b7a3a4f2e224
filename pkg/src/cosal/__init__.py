"""Order-stable co-saliency detection and co-segmentation, desk scale."""

from cosal.autodiff import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNEL_BACKEND", "__version__"]
