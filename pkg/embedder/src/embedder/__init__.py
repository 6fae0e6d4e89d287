from embedder.core import (
    DEFAULT_MODEL,
    EmbedError,
    EmbedJob,
    EmbedResult,
    embed_corpus,
    load_encoder,
    read_model_lock,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MODEL",
    "EmbedError",
    "EmbedJob",
    "EmbedResult",
    "embed_corpus",
    "load_encoder",
    "read_model_lock",
    "__version__",
]
