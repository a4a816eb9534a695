"""
TensorFile: the binary container for tensors, masks, matrices and Tucker models.

Layout (little-endian):
    offset 0   magic    4 bytes  b"DT3\\0"
    offset 4   version  uint32   1
    offset 8   dims     3 x uint64
    offset 32  payload  I1*I2*I3 float64, first index fastest

Matrices are stored with a third extent of 1.
"""

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from core.errors import TensorArgumentError, TensorFormatError
from core.tensors import as_matrix, as_tensor3
from solvers.lrfmtc import TuckerModel
from utils.logger import get_component_logger

logger = get_component_logger('storage', 'tensor_file')

MAGIC = b"DT3\x00"
VERSION = 1
HEADER = struct.Struct("<4sI3Q")
PAYLOAD_DTYPE = np.dtype('<f8')
MODEL_PARTS = ('core', 'u1', 'u2', 'u3')


def atomic_write(path, data):
    """Write ``data`` (bytes or str) to ``path`` through a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = 'wb' if isinstance(data, (bytes, bytearray, memoryview)) else 'w'
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        kwargs = {} if mode == 'wb' else {'encoding': 'utf-8', 'newline': ''}
        with os.fdopen(fd, mode, **kwargs) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_tensor(t):
    """Header plus payload bytes of a third-order tensor."""
    t = as_tensor3(t, allow_nonfinite=True)
    header = HEADER.pack(MAGIC, VERSION, *t.shape)
    return header + t.astype(PAYLOAD_DTYPE, copy=False).tobytes(order='F')


def decode_tensor(blob, source="<bytes>"):
    """Parse TensorFile bytes, validating the header before touching the payload."""
    blob = memoryview(blob)
    if len(blob) < HEADER.size:
        raise TensorFormatError(
            f"{source}: header needs {HEADER.size} bytes, file has {len(blob)}", offset=len(blob)
        )
    magic, version, d1, d2, d3 = HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise TensorFormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise TensorFormatError(
            f"{source}: unsupported version {version}, expected {VERSION}", offset=4
        )
    dims = (d1, d2, d3)
    if min(dims) < 1:
        raise TensorFormatError(f"{source}: zero extent in dims {dims}", offset=8)

    expected = HEADER.size + PAYLOAD_DTYPE.itemsize * d1 * d2 * d3
    if len(blob) != expected:
        kind = "truncated" if len(blob) < expected else "oversized"
        raise TensorFormatError(
            f"{source}: {kind} payload, dims {dims} need {expected} bytes, file has {len(blob)}",
            offset=min(len(blob), expected)
        )
    payload = np.frombuffer(blob, dtype=PAYLOAD_DTYPE, offset=HEADER.size)
    return np.array(payload.reshape(dims, order='F'), dtype=np.float64, order='F')


def save_tensor(path, t):
    """Write a tensor (or a {0,1} mask indicator) to ``path`` atomically."""
    atomic_write(path, encode_tensor(t))
    logger.debug(f"Saved tensor {np.shape(t)} to {path}")


def load_tensor(path):
    """Read a TensorFile; malformed files raise TensorFormatError with the byte offset."""
    path = Path(path)
    with open(path, 'rb') as f:
        blob = f.read()
    t = decode_tensor(blob, source=str(path))
    logger.debug(f"Loaded tensor {t.shape} from {path}")
    return t


def save_matrix(path, m):
    m = as_matrix(m)
    save_tensor(path, m.reshape(m.shape + (1,), order='F'))


def load_matrix(path):
    t = load_tensor(path)
    if t.shape[2] != 1:
        raise TensorFormatError(f"{path}: expected a matrix (third extent 1), got dims {t.shape}", offset=24)
    return np.asarray(t[:, :, 0])


def model_paths(prefix):
    """File names of a Tucker model dump: ``<prefix>.core.dt3``, ``<prefix>.u1.dt3``, ..."""
    prefix = str(prefix)
    return {part: Path(f"{prefix}.{part}.dt3") for part in MODEL_PARTS}


def save_tucker_model(prefix, model: TuckerModel):
    """Write the core as a tensor and U1, U2, U3 as matrices."""
    paths = model_paths(prefix)
    save_tensor(paths['core'], model.core)
    for part, u in zip(MODEL_PARTS[1:], model.factors):
        save_matrix(paths[part], u)
    logger.info(f"Saved Tucker model of rank {model.rank} under {prefix}")
    return paths


def load_tucker_model(prefix):
    paths = model_paths(prefix)
    core = load_tensor(paths['core'])
    factors = [load_matrix(paths[part]) for part in MODEL_PARTS[1:]]
    for k, u in enumerate(factors):
        if u.shape[1] != core.shape[k]:
            raise TensorArgumentError(
                f"{paths[MODEL_PARTS[k + 1]]}: {u.shape[1]} columns but core extent {core.shape[k]}"
            )
    return TuckerModel(core, *factors)
