#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Writes the test fixtures and the independently computed oracle values.

The oracle uses mpmath at 40 significant digits and shares no code with the
C++ library. Re-run after changing any fixture geometry:

    python3 tools/gen_fixtures.py tests/fixtures
"""

import json
import random
import struct
import sys
from pathlib import Path

import mpmath

mpmath.mp.dps = 40

A = mpmath.mpf("0.014")
B = mpmath.mpf("3.02")
FOCAL = 500
SIZE = 416


def weight(length_cm):
    return A * mpmath.power(length_cm, B)


def length_for_weight(weight_g):
    return mpmath.power(weight_g / A, 1 / B)


def band_percent(w):
    # Table of daily allowances; half-open [lower, upper), midpoint percent.
    bands = [(0, 1, 10, 30), (1, 5, 6, 10), (5, 20, 4, 6), (20, 100, 3, 4), (100, None, 1.5, 3)]
    for lower, upper, lo, hi in bands:
        if w >= lower and (upper is None or w < upper):
            return (mpmath.mpf(lo) + mpmath.mpf(hi)) / 2
    raise ValueError(w)


def write_depth(path, depth_m):
    with open(path, "wb") as f:
        f.write(b"DPTH" + struct.pack("<II", SIZE, SIZE))
        f.write(struct.pack("<f", depth_m) * (SIZE * SIZE))


def keypoints(x0, y0, pixel_len):
    return [
        {"label": "mouth", "x": x0, "y": y0},
        {"label": "peduncle", "x": x0 + pixel_len, "y": y0},
        {"label": "belly", "x": x0 + pixel_len / 2, "y": y0 + 20},
        {"label": "back", "x": x0 + pixel_len / 2, "y": y0 - 20},
    ]


def frame(camera, ts, count, fish):
    return {
        "camera_id": camera,
        "frame_ts_ms": ts,
        "image_width": SIZE,
        "image_height": SIZE,
        "count": count,
        "fish": fish,
    }


def dump(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ts = 1704096000000

    # Worked example: one fish of 14.66 g seen by both cameras, counts 12 and 13.
    target_w = mpmath.mpf("14.66")
    length = length_for_weight(target_w)
    # Both depths are exact in float32, the on-disk depth format.
    depth_a, depth_b = 0.25, 0.375
    px_a = float(length / 100 * FOCAL / mpmath.mpf(depth_a))
    px_b = float(length / 100 * FOCAL / mpmath.mpf(depth_b))
    dump(out / "detections_a.json",
         frame("A", ts, 12, [{"fish_id": 1, "confidence": 0.93, "keypoints": keypoints(80.0, 200.0, px_a)}]))
    dump(out / "detections_b.json",
         frame("B", ts + 40, 13, [{"fish_id": 1, "confidence": 0.88, "keypoints": keypoints(120.0, 150.0, px_b)}]))
    write_depth(out / "depth_a.dpth", depth_a)
    write_depth(out / "depth_b.dpth", depth_b)
    dump(out / "intrinsics.json", {"focal_px": FOCAL, "image_width": SIZE, "image_height": SIZE})
    dump(out / "detections_empty_a.json", frame("A", ts, 0, []))
    dump(out / "detections_empty_b.json", frame("B", ts, 0, []))

    # Three fish in a bowl, one camera.
    three = [
        {"fish_id": i + 1, "confidence": c, "keypoints": keypoints(60.0 + 40 * i, 100.0 + 90 * i, 120.0 - 10 * i)}
        for i, c in enumerate([0.91, 0.87, 0.95])
    ]
    dump(out / "three_fish.json", frame("A", ts, 3, three))

    # Pipeline oracle: lengths recomputed from the stored pixel coordinates.
    lengths = [mpmath.mpf(px_a) * mpmath.mpf(depth_a) / FOCAL * 100,
               mpmath.mpf(px_b) * mpmath.mpf(depth_b) / FOCAL * 100]
    per_fish = [weight(l) * band_percent(weight(l)) / 100 for l in lengths]
    fused = (12 + 13 + 1) // 2
    total = fused * sum(per_fish) / len(per_fish)

    # Length-weight oracle table.
    rng = random.Random(20240101)
    with open(out / "weight_oracle.csv", "w") as f:
        f.write("length_cm,weight_g\n")
        for _ in range(1000):
            l = rng.uniform(0.1, 100.0)
            f.write(f"{l!r},{mpmath.nstr(weight(mpmath.mpf(l)), 25)}\n")

    oracle = {
        "weight_at_1cm": mpmath.nstr(weight(1), 25),
        "weight_at_10cm": mpmath.nstr(weight(10), 25),
        "weight_at_20cm": mpmath.nstr(weight(20), 25),
        "fixture_length_cm": mpmath.nstr(length, 25),
        "fixture_per_fish_g_per_day": mpmath.nstr(per_fish[0], 25),
        "fixture_fused_count": fused,
        "fixture_total_g_per_day": mpmath.nstr(total, 25),
    }
    dump(out / "oracle.json", oracle)
    print(json.dumps(oracle, indent=2))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures")
