"""Stable seed derivation.

Seeds are 64-bit BLAKE2b digests of the parent seed and a path of labels, so
the seed of any job depends only on its identity, never on scheduling order.
"""
import hashlib


def derive_seed(parent: int, *path) -> int:
    text = ":".join([str(int(parent))] + [str(p) for p in path])
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")

