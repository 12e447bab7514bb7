#!/usr/bin/env python3
"""Regenerate the sealing golden vectors from the independent test oracle.

The vectors are produced by the standalone cipher implementation in
tests/aes_gcm_oracle.py, never by the package under test, so the envelope
tests compare two unrelated routes to the same answers. Line format:
`key iv plaintext ciphertext tag`, lowercase hex, one vector per line.
"""

import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from aes_gcm_oracle import gcm_encrypt  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "envelope_vectors.txt"


def main() -> None:
    rng = random.Random(20_260_814)
    lines = []
    for length in (1, 2, 15, 16, 17, 31, 32, 33, 63, 64, 65, 255, 256, 1000):
        key = rng.randbytes(32)
        iv = rng.randbytes(12)
        plaintext = rng.randbytes(length)
        ciphertext, tag = gcm_encrypt(key, iv, plaintext)
        lines.append(" ".join(h.hex() for h in (key, iv, plaintext, ciphertext, tag)))
    # one structured (non-random) vector: all-zero key and iv, patterned text
    key, iv = b"\x00" * 32, b"\x00" * 12
    plaintext = bytes(range(48))
    ciphertext, tag = gcm_encrypt(key, iv, plaintext)
    lines.append(" ".join(h.hex() for h in (key, iv, plaintext, ciphertext, tag)))
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(lines)} vectors to {OUT}")


if __name__ == "__main__":
    main()
