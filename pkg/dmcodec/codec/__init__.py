from .config import CodecConfig, AudioClip, LatentSequence
from .rvq import (CodebookWarning, Codebook, QuantizedCode, ResidualVectorQuantizer,
                  nearest, straight_through, commitment_loss, bitrate)
from .model import Codec, CodecOutput
from .io import (read_wav, write_wav, CheckpointArchive, Checkpoint, CODES_MAGIC,
                 export_codes, import_codes)


__all__ = [
    "CodecConfig", "AudioClip", "LatentSequence",
    "CodebookWarning", "Codebook", "QuantizedCode", "ResidualVectorQuantizer",
    "nearest", "straight_through", "commitment_loss", "bitrate",
    "Codec", "CodecOutput",
    "read_wav", "write_wav", "CheckpointArchive", "Checkpoint", "CODES_MAGIC", "export_codes",
    "import_codes",
]
