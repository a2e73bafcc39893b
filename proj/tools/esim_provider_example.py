#!/usr/bin/env python3
"""Example external ESIM provider.

Reads one PNG on stdin and prints "N v1 ... vN". Select it with
SPRITECHECK_EMBEDDING_PROVIDER="python3 tools/esim_provider_example.py"
or the --provider option of the CLI. Swap the body of embed() for a
network's final-convolution features to reproduce a learned embedding.
"""

import io
import sys

import numpy as np
from PIL import Image

GRID = 8


def embed(rgb):
    h, w, _ = rgb.shape
    ys = np.linspace(0, h, GRID + 1).astype(int)
    xs = np.linspace(0, w, GRID + 1).astype(int)
    out = []
    for c in range(3):
        for i in range(GRID):
            for j in range(GRID):
                cell = rgb[ys[i]:max(ys[i + 1], ys[i] + 1), xs[j]:max(xs[j + 1], xs[j] + 1), c]
                out.append(float(cell.mean()))
    return out


def main():
    image = Image.open(io.BytesIO(sys.stdin.buffer.read())).convert("RGB")
    vec = embed(np.asarray(image, dtype=np.float64))
    print(len(vec), " ".join(f"{v:.9g}" for v in vec))


if __name__ == "__main__":
    main()
