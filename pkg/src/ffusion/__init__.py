"""Fail-operational multimodal transformer fusion with a safety harness.

The package covers the full pipeline: a tape-based autodiff engine, camera
and LiDAR sensor geometry, a deterministic synthetic scene generator,
independent per-modality transformer encoders fused in a shared latent
space, command and segmentation decoders, and a safety verification harness
(fault injection, fail-operational evaluation, independence checks, probes
and decomposition checking) behind a command line interface.
"""

__version__ = "0.1.0"

from .errors import FfusionError  # noqa: E402
from .estimator import MultimodalFusionClassifier  # noqa: E402

__all__ = ["FfusionError", "MultimodalFusionClassifier", "__version__"]
