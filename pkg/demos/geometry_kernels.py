#!/usr/bin/env python3
"""Show the geometry kernels on tiny inputs: rasterization, mini masks,
run-length encoding, and the letterbox transform."""

import numpy as np

from cropscan import geometry


def show_mask(mask: np.ndarray) -> None:
    for row in mask:
        print("".join("#" if v else "." for v in row))


# rasterize a pentagon onto a 24x24 grid; pixel centers decide membership
points = [(4.0, 3.0), (20.0, 5.0), (18.0, 19.0), (9.0, 21.0), (2.0, 12.0)]
mask = geometry.polygon_mask(points, (24, 24))
print(f"pentagon covers {int(mask.sum())} of {mask.size} pixels:")
show_mask(mask)

# the same mask squeezed into a fixed-size mini mask and back
ys, xs = np.nonzero(mask)
box = (float(xs.min()), float(ys.min()), float(xs.max() + 1), float(ys.max() + 1))
mini = geometry.encode_mini_mask(mask, box, side=56)
restored = geometry.decode_mini_mask(mini, (24, 24))
print(f"\nmini-mask round trip IoU: {geometry.mask_iou(mask, restored):.4f}")

# run-length encoding is the wire format for masks
rle = geometry.encode_rle(mask)
print(f"RLE: {len(rle['counts'])} runs for {mask.size} pixels, "
      f"order={rle['order']}")
assert np.array_equal(geometry.decode_rle(rle), mask)
print("decode(encode(mask)) == mask")

# the letterbox maps any frame into a square model input and back
src = np.zeros((1960, 4032, 3), dtype=np.uint8)
boxed, transform = geometry.resize_letterbox(src, (1024, 1024))
print(f"\n4032x1960 -> {boxed.shape[1]}x{boxed.shape[0]} "
      f"(scale {transform.scale:.5f}, pad_y {transform.pad_y})")
round_trip = transform.invert_box(transform.apply_box((100.0, 200.0, 900.0, 1500.0)))
print(f"box round trip: {tuple(round(v, 2) for v in round_trip)}")

# blur scoring: texture scores high, flat fields score zero
rng = np.random.default_rng(3)
textured = rng.integers(0, 256, size=(64, 64), dtype=np.uint8).astype(np.float64)
flat = np.full((64, 64), 128.0)
print(f"\nblur score, textured: {geometry.blur_score(textured):.1f}")
print(f"blur score, flat:     {geometry.blur_score(flat):.1f}")
