#!/usr/bin/env python3
# Walk one synthetic capsule frame through the codec, stage by stage.

import numpy as np

from capsule_codec import default_tables, encode_frame_stats, decode_frame, forward_rct, mosaic_rggb
from capsule_codec.frame import to_blocks
from capsule_codec.metrics import mse, psnr
from capsule_codec.synth import tissue_rgb
from capsule_codec.transform import fdct4x4, quantize

rng = np.random.default_rng(0)
rgb = tissue_rgb(rng)            # 320x320x3 mucosa-like texture
frame = mosaic_rggb(rgb)         # keep only what an RGGB sensor would see
print("bayer frame", frame.samples.shape, frame.samples.dtype)

# colour transform: four quarter-size planes, exactly invertible
planes = forward_rct(frame)
for name, p in zip(("Y", "Dg", "Cb", "Cr"), planes.planes()):
    print(f"  {name:2s} range {p.min():4d}..{p.max():4d}")

# one 4x4 block of Y through the DCT and the quantiser
blk = to_blocks(planes.planes()[0])[40]
coef = fdct4x4(blk)
q = quantize(coef, default_tables().raster("luma"))
print("Y block\n", blk)
print("DCT\n", coef)
print("quantised\n", q)

# the whole thing (the first call pays for JIT compilation, so time the second)
encode_frame_stats(frame, default_tables())
stream, st = encode_frame_stats(frame, default_tables())
rec = decode_frame(stream, default_tables())
print(f"CR {st.cr:.2f}  zero-AC blocks {100 * st.zero_ac_fraction:.1f}%  "
      f"PSNR {psnr(mse(frame.cropped(), rec.cropped())):.2f} dB  {1000 * st.duration_s:.1f} ms")

# a flat gray frame costs almost nothing
flat = mosaic_rggb(np.full((320, 320, 3), 128, np.uint8))
_, st = encode_frame_stats(flat, default_tables())
print(f"flat gray: CR {st.cr:.0f}")
