import struct
from typing import BinaryIO, Tuple

from portrait.utils.errors import CheckpointFormatError


def write_header(f: BinaryIO, magic: bytes, version: int) -> None:
    assert len(magic) == 4
    f.write(magic)
    f.write(struct.pack('<I', version))


def read_header(f: BinaryIO, magic: bytes, supported: Tuple[int, ...] = (1,)) -> int:
    """
    Read and validate a 4-byte magic followed by a u32 version.

    Returns:
        int: The version number.
    """
    found = f.read(4)
    if found != magic:
        raise CheckpointFormatError(f'bad magic {found!r}, expected {magic!r}')
    version = read_struct(f, '<I')[0]
    if version not in supported:
        raise CheckpointFormatError(f'unsupported {magic.decode()} version {version}')
    return version


def read_struct(f: BinaryIO, fmt: str) -> tuple:
    size = struct.calcsize(fmt)
    raw = f.read(size)
    if len(raw) != size:
        raise CheckpointFormatError(f'truncated payload: wanted {size} bytes, got {len(raw)}')
    return struct.unpack(fmt, raw)


def read_exact(f: BinaryIO, size: int) -> bytes:
    raw = f.read(size)
    if len(raw) != size:
        raise CheckpointFormatError(f'truncated payload: wanted {size} bytes, got {len(raw)}')
    return raw


def write_string(f: BinaryIO, string: str) -> None:
    raw = string.encode('utf-8')
    f.write(struct.pack('<I', len(raw)))
    f.write(raw)


def read_string(f: BinaryIO) -> str:
    size = read_struct(f, '<I')[0]
    return read_exact(f, size).decode('utf-8')
