from collections import OrderedDict
import hashlib
import io
import zipfile

import numpy as np
import torch
from scipy.io import wavfile

from ..errors import ConfigurationError, DataError
from .config import AudioClip
from .rvq import QuantizedCode


__all__ = [
    "read_wav", "write_wav",
    "CHECKPOINT_VERSION", "CheckpointArchive", "Checkpoint",
    "CODES_MAGIC", "export_codes", "import_codes",
]


def read_wav(file, sample_rate):
    """Read a mono PCM16 or float32 WAV file at ``sample_rate``.

    Resampling is not supported; a file at any other rate is rejected.
    """
    try:
        file_rate, data = wavfile.read(file)
    except ValueError as e:
        raise DataError("Cannot read WAV file {}: {}".format(file, e)) from None
    if file_rate != sample_rate:
        raise ConfigurationError("WAV file {} has sample rate {} Hz, expected {} Hz"
                                 .format(file, file_rate, sample_rate))
    if data.ndim != 1:
        raise DataError("WAV file {} has {} channels; only mono audio is supported"
                        .format(file, data.shape[1]))
    if data.dtype == np.int16:
        samples = data.astype(np.float32) / 32768.0
    elif data.dtype == np.float32:
        samples = data
    else:
        raise DataError("WAV file {} has sample format {}; expected PCM16 or float32"
                        .format(file, data.dtype))
    return AudioClip(torch.from_numpy(np.ascontiguousarray(samples)), sample_rate)


def write_wav(file, clip, *, pcm16=True):
    samples = clip.samples.detach().cpu().double().numpy()
    if pcm16:
        data = np.clip(np.round(samples * 32767.0), -32768, 32767).astype("<i2")
    else:
        data = samples.astype("<f4")
    wavfile.write(file, clip.sample_rate, data)


CHECKPOINT_VERSION = 1


def _array_bytes(array):
    buffer = io.BytesIO()
    np.save(buffer, np.ascontiguousarray(array), allow_pickle=False)
    return buffer.getvalue()


class CheckpointArchive:
    """Contents of a checkpoint, keyed by member name.

    Module state is stored as ``state/<prefix><module path>.npy``; the archive produced
    by :meth:`archive` is deterministic: the same contents always produce the same bytes.
    """
    def __init__(self, *, config_text="", digest=""):
        self.files = OrderedDict()
        self.add_file("version", str(CHECKPOINT_VERSION))
        self.add_file("config.txt", config_text)
        self.add_file("digest", digest)

    def add_file(self, filename, content):
        assert isinstance(filename, str) and filename not in self.files
        self.files[filename] = content

    def add_array(self, name, array):
        if isinstance(array, torch.Tensor):
            array = array.detach().cpu().numpy()
        self.add_file(name + ".npy", _array_bytes(np.asarray(array)))

    def add_module(self, prefix, module):
        for name, tensor in module.state_dict().items():
            self.add_array("state/{}{}".format(prefix, name), tensor)

    def add_object(self, name, obj):
        buffer = io.BytesIO()
        torch.save(obj, buffer)
        self.add_file(name + ".pt", buffer.getvalue())

    def digest(self, size=32):
        hasher = hashlib.blake2b(digest_size=size)
        for filename in sorted(self.files):
            hasher.update(filename.encode("utf-8"))
            content = self.files[filename]
            if isinstance(content, str):
                content = content.encode("utf-8")
            hasher.update(content)
        return hasher.digest()

    def archive(self, file):
        with zipfile.ZipFile(file, "w") as archive:
            # Deterministic member order and timestamps.
            for filename in sorted(self.files):
                archive.writestr(zipfile.ZipInfo(filename), self.files[filename])


class Checkpoint:
    """Read side of :class:`CheckpointArchive`."""
    def __init__(self, file):
        try:
            with zipfile.ZipFile(file, "r") as archive:
                self.files = OrderedDict((name, archive.read(name))
                                         for name in archive.namelist())
        except (zipfile.BadZipFile, OSError) as e:
            raise DataError("Cannot read checkpoint {}: {}".format(file, e)) from None
        if "version" not in self.files:
            raise DataError("Checkpoint {} has no version field".format(file))
        version = int(self.files["version"].decode("utf-8"))
        if version != CHECKPOINT_VERSION:
            raise DataError("Checkpoint {} has version {}, expected {}"
                            .format(file, version, CHECKPOINT_VERSION))
        self.version     = version
        self.config_text = self.files.get("config.txt", b"").decode("utf-8")
        self.digest      = self.files.get("digest", b"").decode("utf-8")

    def get_array(self, name):
        return np.load(io.BytesIO(self.files[name + ".npy"]), allow_pickle=False)

    def get_object(self, name):
        return torch.load(io.BytesIO(self.files[name + ".pt"]), weights_only=False)

    def has(self, name):
        return name in self.files or name + ".npy" in self.files or name + ".pt" in self.files

    def state_dict(self, prefix):
        state = OrderedDict()
        head = "state/" + prefix
        for filename in self.files:
            if filename.startswith(head) and filename.endswith(".npy"):
                name = filename[len(head):-len(".npy")]
                state[name] = torch.from_numpy(self.get_array(filename[:-len(".npy")]))
        return state

    def load_module(self, prefix, module):
        state = self.state_dict(prefix)
        if not state:
            raise DataError("Checkpoint has no state for {!r}".format(prefix))
        module.load_state_dict(state)


CODES_MAGIC = b"DMCQ"


def export_codes(file, code, codebook_size):
    """Write ``(K, T')`` indices as little-endian uint16 after a 16-byte header."""
    indices = code.indices.detach().cpu().numpy()
    if indices.ndim != 2:
        raise DataError("Only single-clip codes shaped (K, T') can be exported, not {}"
                        .format(indices.shape))
    if codebook_size > 1 << 16:
        raise DataError("Codebook size {} does not fit in uint16 indices".format(codebook_size))
    n_layers, n_frames = indices.shape
    header = np.array([int.from_bytes(CODES_MAGIC, "little"), n_layers, n_frames, codebook_size],
                      dtype="<u4")
    with open(file, "wb") as f:
        f.write(header.tobytes())
        f.write(indices.astype("<u2").tobytes())


def import_codes(file):
    """Read codes written by :func:`export_codes`; returns ``(QuantizedCode, codebook_size)``."""
    with open(file, "rb") as f:
        data = f.read()
    if len(data) < 16:
        raise DataError("Codes file {} is too short for its header".format(file))
    magic, n_layers, n_frames, codebook_size = np.frombuffer(data[:16], dtype="<u4")
    if int(magic).to_bytes(4, "little") != CODES_MAGIC:
        raise DataError("Codes file {} has bad magic".format(file))
    payload = np.frombuffer(data[16:], dtype="<u2")
    if payload.size != n_layers * n_frames:
        raise DataError("Codes file {} holds {} indices, header declares {}x{}"
                        .format(file, payload.size, n_layers, n_frames))
    indices = torch.from_numpy(payload.astype(np.int64).reshape(int(n_layers), int(n_frames)))
    return QuantizedCode(indices), int(codebook_size)
