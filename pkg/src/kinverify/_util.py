"""Small shared helpers: deterministic seed derivation."""

import zlib


def derive_seed(master: int, *parts) -> int:
    """Derive a child seed from a master seed and a list of string/int tags.

    Uses crc32 over the tag string so the derivation is stable across runs,
    platforms and Python processes (unlike the builtin salted hash()).
    """
    tag = "/".join(str(p) for p in parts)
    h = zlib.crc32(tag.encode("utf-8"))
    return (int(master) * 1_000_003 + h) % (2**31 - 1)
