"""fieldpress: press field-recorded video into curated, labeled image datasets."""

__version__ = "0.1.0"

from .model import (
    Category,
    DatasetManifest,
    FrameRecord,
    LabelSpan,
    MediaAsset,
    Transcript,
    Utterance,
    register_categories,
    validate_manifest,
)
from .store import DatasetStore
from .workspace import Workspace

__all__ = [
    "Category",
    "DatasetManifest",
    "DatasetStore",
    "FrameRecord",
    "LabelSpan",
    "MediaAsset",
    "Transcript",
    "Utterance",
    "Workspace",
    "register_categories",
    "validate_manifest",
    "__version__",
]
