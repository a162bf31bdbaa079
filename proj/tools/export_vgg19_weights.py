#!/usr/bin/env python3
"""Export torchvision's pretrained VGG19 convolution weights to the HRTC
container format read by FeatureExtractor::load_file.

Usage:
    python3 tools/export_vgg19_weights.py vgg19.hrwt
    export HRST_VGG19_WEIGHTS=$PWD/vgg19.hrwt

Requires torch + torchvision with download access (or a cached
checkpoint). The emitted file holds float32 tensors named
conv1_1.weight, conv1_1.bias, ... conv5_4.bias; print the file's sha256
and set HRST_VGG19_SHA256 to pin it.
"""

import hashlib
import json
import struct
import sys

LAYER_NAMES = [
    "conv1_1", "conv1_2",
    "conv2_1", "conv2_2",
    "conv3_1", "conv3_2", "conv3_3", "conv3_4",
    "conv4_1", "conv4_2", "conv4_3", "conv4_4",
    "conv5_1", "conv5_2", "conv5_3", "conv5_4",
]


def write_container(path, tensors, metadata):
    with open(path, "wb") as f:
        f.write(b"HRTC")
        f.write(struct.pack("<I", 1))          # version
        f.write(struct.pack("<B", 1))          # payload: float32
        meta = json.dumps(metadata).encode()
        f.write(struct.pack("<Q", len(meta)))
        f.write(meta)
        f.write(struct.pack("<Q", len(tensors)))
        for name, arr in tensors:
            nb = name.encode()
            f.write(struct.pack("<Q", len(nb)))
            f.write(nb)
            f.write(struct.pack("<I", arr.ndim))
            for d in arr.shape:
                f.write(struct.pack("<i", d))
            f.write(arr.astype("<f4").tobytes())


def main():
    if len(sys.argv) != 2:
        print(__doc__)
        return 2
    out_path = sys.argv[1]

    import torchvision.models as models

    vgg = models.vgg19(weights=models.VGG19_Weights.IMAGENET1K_V1)
    convs = [m for m in vgg.features if m.__class__.__name__ == "Conv2d"]
    assert len(convs) == len(LAYER_NAMES)

    tensors = []
    for name, conv in zip(LAYER_NAMES, convs):
        tensors.append((name + ".weight", conv.weight.detach().numpy()))
        tensors.append((name + ".bias", conv.bias.detach().numpy()))

    write_container(out_path, tensors, {"source": "torchvision vgg19 IMAGENET1K_V1"})
    sha = hashlib.sha256(open(out_path, "rb").read()).hexdigest()
    print(f"wrote {out_path}")
    print(f"sha256 {sha}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
