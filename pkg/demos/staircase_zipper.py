"""Staircase codes built two ways, then decoded with windowed hard decisions.

Run: ``python demos/staircase_zipper.py``. The block-recursive staircase
encoder and the generic zipper encoder with the staircase interleaver emit
the same bits; the decoder then cleans up a binary symmetric channel.
"""

from __future__ import annotations

import numpy as np

from sccodes.bch import BCHCode
from sccodes.channels import bsc, frame_rng, transmit
from sccodes.zipper import (StaircaseSpec, ihdd_window_decode, staircase_encode, staircase_flatten,
                            staircase_info, zipper_encode)


def main() -> None:
    sp = StaircaseSpec(254, 238, 2, blocks=12)
    info = frame_rng(0).integers(0, 2, sp.blocks * sp.half * (sp.k - sp.half), dtype=np.int8)
    x = staircase_flatten(staircase_encode(sp, info))
    same = np.array_equal(x, zipper_encode(sp.zipper(), info, BCHCode(sp.component)))
    print(f"rate {sp.rate} ({float(sp.rate):.4f}); staircase == zipper: {same}")
    for p in (0.001, 0.002, 0.003):
        # one zero-information block so the last data block sits in two component rows
        xt = staircase_flatten(staircase_encode(sp, info, terminate=True))
        y = transmit(xt, bsc(p), frame_rng(0, 0, 1)).astype(np.int8)
        r = ihdd_window_decode(sp, y, window=5 * sp.half, max_iters=10)
        errs = int((staircase_info(sp, r.real) != info).sum())
        print(f"p={p}: {int((y != xt).sum())} channel flips, {errs} information errors after decoding")


if __name__ == "__main__":
    main()
