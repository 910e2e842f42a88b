"""sonotag: budgeted active-learning annotation for audio datasets.

Feature extraction (audio, dsp, pipeline), density-based seeding (lof),
a boosted-tree classifier (gbdt), the five-stage labeling engine
(annotator), an HTTP labeling service (service), and a CLI harness
(cli).
"""

from .annotator import AnnotateConfig, AnnotationState, annotate, query_extra
from .audio import AudioClip, load_audio, resample
from .dsp import FeatureMatrix, FrameConfig
from .gbdt import GbdtParams, OvaModel, train_ova
from .pipeline import FeatureVector, PipelineConfig, assemble

__version__ = "0.1.0"

__all__ = [
    "AnnotateConfig",
    "AnnotationState",
    "AudioClip",
    "FeatureMatrix",
    "FeatureVector",
    "FrameConfig",
    "GbdtParams",
    "OvaModel",
    "PipelineConfig",
    "annotate",
    "assemble",
    "load_audio",
    "query_extra",
    "resample",
    "train_ova",
]
