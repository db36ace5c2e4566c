#!/usr/bin/env python3
"""Standalone Zhang-Suen reference used to freeze golden thinning outputs.

Reads a mask as lines of '#' (true) and '.' (false) on stdin, treats the
area outside the mask as background, and prints the thinned mask in the
same format. Written independently of the Rust implementation; rerun only
when regenerating golden files.
"""
import sys

import numpy as np


def neighbours(img, r, c):
    # P2..P9, clockwise from north
    return [
        img[r - 1, c], img[r - 1, c + 1], img[r, c + 1], img[r + 1, c + 1],
        img[r + 1, c], img[r + 1, c - 1], img[r, c - 1], img[r - 1, c - 1],
    ]


def transitions(n):
    seq = n + n[:1]
    return sum(1 for a, b in zip(seq, seq[1:]) if a == 0 and b == 1)


def zhang_suen(mask):
    img = np.pad(mask.astype(np.uint8), 1)
    changed = True
    while changed:
        changed = False
        for step in (0, 1):
            marked = []
            rows, cols = img.shape
            for r in range(1, rows - 1):
                for c in range(1, cols - 1):
                    if img[r, c] != 1:
                        continue
                    n = neighbours(img, r, c)
                    p2, p3, p4, p5, p6, p7, p8, p9 = n
                    b = sum(n)
                    if not (2 <= b <= 6) or transitions(n) != 1:
                        continue
                    if step == 0:
                        if p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0:
                            marked.append((r, c))
                    else:
                        if p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0:
                            marked.append((r, c))
            for r, c in marked:
                img[r, c] = 0
            changed = changed or bool(marked)
    return img[1:-1, 1:-1].astype(bool)


def main():
    lines = [l.rstrip("\n") for l in sys.stdin if l.strip()]
    mask = np.array([[ch == "#" for ch in l] for l in lines], dtype=bool)
    out = zhang_suen(mask)
    for row in out:
        print("".join("#" if v else "." for v in row))


if __name__ == "__main__":
    main()
