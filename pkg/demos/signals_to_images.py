"""Turn one instant of a 128-channel recording into a grayscale image.

Synthesizes a zero-noise recording, takes a single sampling instant of
one gesture, maps the millivolt values to pixels, and renders the
16x8 image as ASCII shades so the activation blob is visible.
"""

import numpy as np

from semgnet.dataio import SynthSpec, generate_synthetic
from semgnet.imaging import GridLayout, frame_to_image

SHADES = " .:-=+*#%@"


def render(pixels):
    pixels = pixels.astype(int)  # uint8 would overflow in the shade math
    lo, hi = pixels.min(), pixels.max()
    span = max(hi - lo, 1)
    for row in pixels:
        line = "".join(SHADES[int((v - lo) * (len(SHADES) - 1) // span)]
                       for v in row)
        print(f"    {line}")


def main():
    spec = SynthSpec(gestures=3, trials=1, samples_per_trial=4, noise_mv=0.0,
                     seed=0)
    values = generate_synthetic(spec)
    layout = GridLayout()
    print(f"synthetic set: {values.shape} (gesture, trial, sample, channel)")

    frame = values[0, 0, 0]  # mV values for one instant of gesture 1
    print(f"\nchannel range: {frame.min():+.3f} .. {frame.max():+.3f} mV")
    print("pixel rule: clamp to +-2.5 mV, scale by 51, shift to center 127.5,")
    print("round half up; 0 mV lands on pixel 128")

    for gesture in range(spec.gestures):
        image = frame_to_image(values[gesture, 0, 0], layout)
        print(f"\ngesture {gesture + 1} "
              f"(pixels {image.pixels.min()}..{image.pixels.max()}):")
        render(image.pixels)


if __name__ == "__main__":
    main()
