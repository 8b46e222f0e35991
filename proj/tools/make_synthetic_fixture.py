#!/usr/bin/env python3
"""Generate the 10-sample synthetic fixture under tests/fixtures/synthetic.

Each image is a textured background with one coloured object; gaze points
cluster on the object. Two answer files are written so the score path can
run offline: answers_roi.jsonl (system under test) and
answers_baseline.jsonl (reference).
"""

import argparse
import json
import pathlib

import numpy as np
from PIL import Image, ImageDraw

COLOURS = {
    "red": (220, 40, 40),
    "green": (40, 180, 60),
    "blue": (40, 80, 220),
    "yellow": (230, 210, 40),
    "purple": (140, 60, 180),
}
SHAPES = ["circle", "square", "triangle"]
SIZES = [(640, 480), (512, 512), (800, 600), (480, 640), (1024, 768)]


def draw_object(draw, shape, box, colour):
    x0, y0, x1, y1 = box
    if shape == "circle":
        draw.ellipse(box, fill=colour)
    elif shape == "square":
        draw.rectangle(box, fill=colour)
    else:
        draw.polygon([((x0 + x1) / 2, y0), (x1, y1), (x0, y1)], fill=colour)


def make_sample(idx, rng, image_dir):
    w, h = SIZES[idx % len(SIZES)]
    base = rng.integers(90, 170, size=3)
    coarse = rng.normal(0, 12, size=(h // 8 + 1, w // 8 + 1, 3))
    noise = np.repeat(np.repeat(coarse, 8, axis=0), 8, axis=1)[:h, :w]
    pixels = np.clip(base + noise, 0, 255).astype(np.uint8)
    img = Image.fromarray(pixels, "RGB")
    draw = ImageDraw.Draw(img)

    colour_name = list(COLOURS)[idx % len(COLOURS)]
    shape = SHAPES[idx % len(SHAPES)]
    side = int(min(w, h) * rng.uniform(0.12, 0.25))
    cx = int(rng.uniform(side, w - side))
    cy = int(rng.uniform(side, h - side))
    box = (cx - side // 2, cy - side // 2, cx + side // 2, cy + side // 2)
    draw_object(draw, shape, box, COLOURS[colour_name])

    name = f"scene_{idx:02d}.png"
    img.save(image_dir / name)

    n = int(rng.integers(40, 120))
    spread = side * 0.35
    gaze = []
    t = 0.0
    for _ in range(n):
        if rng.random() < 0.85:
            x = rng.normal(cx, spread)
            y = rng.normal(cy, spread)
        else:
            x = rng.uniform(0, w)
            y = rng.uniform(0, h)
        t += float(rng.uniform(0.01, 0.05))
        gaze.append([round(float(x), 2), round(float(y), 2), round(t, 3)])

    sample_id = f"syn-{idx:02d}"
    return {
        "sample_id": sample_id,
        "image_path": f"images/{name}",
        "gaze_points": gaze,
        "question": "What is the object I am looking at and what colour is it?",
        "reference_answer": f"A {colour_name} {shape}.",
        "caption": f"A {colour_name} {shape} on a grey textured background.",
    }, colour_name, shape


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=pathlib.Path,
                        default=pathlib.Path(__file__).resolve().parent.parent
                        / "tests" / "fixtures" / "synthetic")
    parser.add_argument("--seed", type=int, default=20240611)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    image_dir = args.out / "images"
    image_dir.mkdir(parents=True, exist_ok=True)

    lines = [json.dumps({"manifest": {"source_name": "synthetic", "version": "1",
                                      "gaze_units": "pixels"}}, sort_keys=True)]
    roi_answers, base_answers = [], []
    for idx in range(10):
        sample, colour, shape = make_sample(idx, rng, image_dir)
        lines.append(json.dumps(sample, sort_keys=True))
        roi_answers.append({"sample_id": sample["sample_id"], "rho": 0.3, "mode": "two_scale",
                            "answer": f"It is a {colour} {shape}."})
        if idx % 3 == 0:
            base = f"It is a {colour} {shape} in the middle of a grey background."
        elif idx % 3 == 1:
            base = "It is some kind of shape."
        else:
            base = f"A {shape}."
        base_answers.append({"sample_id": sample["sample_id"], "mode": "baseline",
                             "answer": base})

    (args.out / "manifest.jsonl").write_text("\n".join(lines) + "\n")
    for name, rows in (("answers_roi.jsonl", roi_answers),
                       ("answers_baseline.jsonl", base_answers)):
        (args.out / name).write_text(
            "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))


if __name__ == "__main__":
    main()
