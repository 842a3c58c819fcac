from .adapter import (
    AUDIO_RATE,
    AudioChunk,
    DecodedFrame,
    DecodeFailure,
    DecoderBackend,
    FfmpegCliBackend,
    MediaError,
    OpenCvPcmBackend,
    UnreadableFile,
    UnsupportedContainer,
    ZeroDuration,
    default_backend,
    extract_audio,
    probe,
    sample_frames,
)
from .chunking import MAX_CHUNK_S, MIN_CHUNK_S, ChunkPlanError, plan_chunks

__all__ = [
    "AUDIO_RATE",
    "AudioChunk",
    "ChunkPlanError",
    "DecodedFrame",
    "DecodeFailure",
    "DecoderBackend",
    "FfmpegCliBackend",
    "MAX_CHUNK_S",
    "MIN_CHUNK_S",
    "MediaError",
    "OpenCvPcmBackend",
    "UnreadableFile",
    "UnsupportedContainer",
    "ZeroDuration",
    "default_backend",
    "extract_audio",
    "plan_chunks",
    "probe",
    "sample_frames",
]
